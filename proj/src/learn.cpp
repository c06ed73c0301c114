#include "tactile/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "tactile/error.hpp"
#include "tactile/parallel.hpp"
#include "tactile/random.hpp"

namespace tactile::learn {

namespace {

struct Neighbour {
  double d2;
  std::size_t index;
};

int vote(std::span<const Neighbour> nearest, std::span<const int> labels) {
  struct Tally {
    std::size_t votes = 0;
    double dist_sum = 0.0;
  };
  std::map<int, Tally> tally;
  for (const auto& n : nearest) {
    auto& t = tally[labels[n.index]];
    ++t.votes;
    t.dist_sum += std::sqrt(n.d2);
  }
  int best = tally.begin()->first;
  const Tally* bt = &tally.begin()->second;
  for (const auto& [label, t] : tally) {
    if (t.votes > bt->votes) {
      best = label;
      bt = &t;
    } else if (t.votes == bt->votes) {
      // Equal votes, so comparing sums compares means. Lower label wins exact ties
      // because the map iterates in ascending label order.
      if (t.dist_sum < bt->dist_sum) {
        best = label;
        bt = &t;
      }
    }
  }
  return best;
}

template <class RowAt>
int knn_core(std::size_t n, RowAt row_at, std::span<const int> labels, std::span<const double> query,
             std::size_t k) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "k-NN needs a non-empty training set");
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (k > n) throw Error(ErrorCode::InvalidArgument, "k exceeds the training set size");
  std::vector<Neighbour> all(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const double> r = row_at(i);
    if (r.size() != query.size()) {
      throw Error(ErrorCode::DimensionMismatch, "training row " + std::to_string(i) + " has dimension " +
                                                    std::to_string(r.size()) + ", query has " +
                                                    std::to_string(query.size()));
    }
    double d2 = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      const double d = r[j] - query[j];
      d2 += d * d;
    }
    all[i] = {d2, i};
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    [](const Neighbour& a, const Neighbour& b) { return a.d2 < b.d2 || (a.d2 == b.d2 && a.index < b.index); });
  return vote(std::span(all).first(k), labels);
}

double sample_std(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Composite Gauss-Legendre on [a, b] with `panels` panels of 8 points.
template <class F>
double integrate(F&& f, double a, double b, int panels) {
  using G = boost::math::quadrature::gauss<double, 8>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    const double half = 0.5 * h;
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      s += w[i] * (f(mid + half * x[i]) + f(mid - half * x[i]));
    }
    total += s * half;
  }
  return total;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// P(range of k standard normals <= w).
double range_cdf(double w, std::size_t k) {
  if (w <= 0.0) return 0.0;
  const double kk = static_cast<double>(k);
  const double inv_sqrt_2pi = 0.3989422804014327;
  const double v = kk * integrate(
                            [&](double z) {
                              const double band = normal_cdf(z) - normal_cdf(z - w);
                              return inv_sqrt_2pi * std::exp(-0.5 * z * z) * std::pow(band, kk - 1.0);
                            },
                            -8.0, 8.0, 32);
  return std::clamp(v, 0.0, 1.0);
}

constexpr double kInfiniteDf = 1e7;

}  // namespace

int knn_predict(std::span<const std::vector<double>> train, std::span<const int> labels,
                std::span<const double> query, const KnnConfig& cfg) {
  if (train.size() != labels.size()) throw Error(ErrorCode::DimensionMismatch, "rows and labels differ in count");
  return knn_core(
      train.size(), [&](std::size_t i) { return std::span<const double>(train[i]); }, labels, query, cfg.k);
}

int knn_predict(const features::LabeledDataset& train, const features::FeatureVector& query, const KnnConfig& cfg) {
  std::vector<int> labels(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    labels[i] = train.rows[i].label;
    if (train.rows[i].features.layout != query.layout) {
      throw Error(ErrorCode::SchemaMismatch, "query layout differs from training layout");
    }
  }
  return knn_core(
      train.size(), [&](std::size_t i) { return std::span<const double>(train.rows[i].features.values); }, labels,
      query.values, cfg.k);
}

CvPlan power_analysis_plan(std::uint64_t seed) { return {5, 10, seed}; }
CvPlan velocity_split_plan(std::uint64_t seed) { return {5, 60, seed}; }

CvPlan plan_preset(const std::string& name, std::uint64_t seed) {
  if (name == "power-analysis") return power_analysis_plan(seed);
  if (name == "velocity-split") return velocity_split_plan(seed);
  throw Error(ErrorCode::InvalidArgument, "unknown CV plan preset '" + name + "'");
}

FoldAssignments stratified_folds(std::span<const int> labels, const CvPlan& plan) {
  if (plan.folds < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 folds");
  if (plan.repeats < 1) throw Error(ErrorCode::InvalidArgument, "need at least 1 repeat");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  for (const auto& [label, rows] : members) {
    if (rows.size() < plan.folds) {
      throw Error(ErrorCode::ClassTooSmall, "class " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                                                " rows, fewer than " + std::to_string(plan.folds) + " folds");
    }
  }
  FoldAssignments out(plan.repeats, std::vector<std::size_t>(labels.size()));
  for (std::size_t r = 0; r < plan.repeats; ++r) {
    std::mt19937_64 gen(rng::derive(plan.seed, r));
    std::size_t next = 0;
    for (const auto& [label, rows] : members) {
      auto order = rows;
      rng::shuffle(std::span(order), gen);
      for (std::size_t idx : order) {
        out[r][idx] = next;
        next = (next + 1) % plan.folds;
      }
    }
  }
  return out;
}

FoldAssignments stratified_folds(const features::LabeledDataset& data, const CvPlan& plan) {
  std::vector<int> labels;
  for (const auto& r : data.rows) labels.push_back(r.label);
  return stratified_folds(labels, plan);
}

std::vector<double> AccuracyDistribution::accuracies() const {
  std::vector<double> v;
  for (const auto& m : models) v.push_back(m.accuracy);
  return v;
}

AccuracyDistribution summarize(std::vector<ModelAccuracy> models) {
  AccuracyDistribution d;
  d.models = std::move(models);
  const auto acc = d.accuracies();
  if (!acc.empty()) {
    d.mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
    d.std = sample_std(acc, d.mean);
  }
  return d;
}

AccuracyDistribution evaluate(const features::LabeledDataset& data, const CvPlan& plan, const KnnConfig& cfg,
                              features::NormalizeMode mode, unsigned jobs) {
  features::validate(data);
  const auto folds = stratified_folds(data, plan);
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  features::LabeledDataset global;
  if (mode == features::NormalizeMode::Global) global = features::normalize(data, all);

  std::vector<ModelAccuracy> models(plan.models());
  const std::size_t classes = data.class_count();
  std::vector<std::vector<std::size_t>> correct_by(models.size(), std::vector<std::size_t>(classes));
  std::vector<std::vector<std::size_t>> total_by(models.size(), std::vector<std::size_t>(classes));
  parallel_for(models.size(), jobs, [&](std::size_t m) {
    const std::size_t r = m / plan.folds;
    const std::size_t f = m % plan.folds;
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < data.size(); ++i) (folds[r][i] == f ? test : train).push_back(i);

    std::vector<std::vector<double>> x;
    std::vector<int> y;
    std::optional<features::Normalizer> norm;
    if (mode == features::NormalizeMode::FoldSafe) norm = features::Normalizer::fit(data, train);
    auto row = [&](std::size_t i) {
      const auto& src = mode == features::NormalizeMode::Global ? global.rows[i].features
                                                                : norm->apply(data.rows[i].features);
      return std::vector<double>(src.values.begin(), src.values.end());
    };
    for (std::size_t i : train) {
      x.push_back(row(i));
      y.push_back(data.rows[i].label);
    }
    std::size_t correct = 0;
    for (std::size_t i : test) {
      const auto q = row(i);
      const auto label = static_cast<std::size_t>(data.rows[i].label);
      ++total_by[m][label];
      if (knn_predict(x, y, q, cfg) == data.rows[i].label) {
        ++correct;
        ++correct_by[m][label];
      }
    }
    models[m] = {r, f, static_cast<double>(correct) / static_cast<double>(test.size())};
  });
  auto dist = summarize(std::move(models));
  dist.class_correct.assign(classes, 0);
  dist.class_total.assign(classes, 0);
  for (std::size_t m = 0; m < correct_by.size(); ++m) {
    for (std::size_t c = 0; c < classes; ++c) {
      dist.class_correct[c] += correct_by[m][c];
      dist.class_total[c] += total_by[m][c];
    }
  }
  return dist;
}

double f_survival(double f, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) throw Error(ErrorCode::InvalidArgument, "F degrees of freedom must be positive");
  if (std::isnan(f)) throw Error(ErrorCode::InvalidArgument, "F statistic is NaN");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return boost::math::ibeta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

AnovaResult anova_oneway(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw Error(ErrorCode::InvalidArgument, "ANOVA needs at least 2 groups");
  std::size_t n = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw Error(ErrorCode::InvalidArgument, "each ANOVA group needs at least 2 values");
    n += g.size();
    for (double v : g) grand += v;
  }
  grand /= static_cast<double>(n);

  AnovaResult r;
  for (const auto& g : groups) {
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    r.ss_between += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
    for (double v : g) r.ss_within += (v - mean) * (v - mean);
  }
  r.df_between = groups.size() - 1;
  r.df_within = n - groups.size();
  r.ms_within = r.ss_within / static_cast<double>(r.df_within);
  const double msb = r.ss_between / static_cast<double>(r.df_between);
  if (r.ss_between == 0.0) {
    r.f = 0.0;
    r.p = 1.0;
  } else if (r.ss_within == 0.0) {
    r.f = std::numeric_limits<double>::infinity();
    r.p = 0.0;
  } else {
    r.f = msb / r.ms_within;
    r.p = f_survival(r.f, static_cast<double>(r.df_between), static_cast<double>(r.df_within));
  }
  return r;
}

double ptukey(double q, std::size_t k, double df) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "studentized range needs k >= 2");
  if (!(df > 0.0)) throw Error(ErrorCode::InvalidArgument, "degrees of freedom must be positive");
  if (q <= 0.0) return 0.0;
  if (df >= kInfiniteDf) return range_cdf(q, k);

  // s = chi_df / sqrt(df) has density  df^(df/2) s^(df-1) exp(-df s^2 / 2) / (Gamma(df/2) 2^(df/2-1)).
  boost::math::chi_squared_distribution<double> chi2(df);
  const double s_lo = std::sqrt(boost::math::quantile(chi2, 1e-15) / df);
  const double s_hi = std::sqrt(boost::math::quantile(boost::math::complement(chi2, 1e-15)) / df);
  const double log_norm = 0.5 * df * std::log(df) - std::lgamma(0.5 * df) - (0.5 * df - 1.0) * std::log(2.0);
  const double v = integrate(
      [&](double s) {
        if (s <= 0.0) return 0.0;
        const double log_density = log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
        return std::exp(log_density) * range_cdf(q * s, k);
      },
      s_lo, s_hi, 64);
  return std::clamp(v, 0.0, 1.0);
}

double qtukey_upper(double alpha, std::size_t k, double df) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  const double target = 1.0 - alpha;
  auto g = [&](double q) { return ptukey(q, k, df) - target; };
  double hi = 8.0;
  while (g(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e4) throw Error(ErrorCode::Diverged, "studentized range quantile out of reach");
  }
  std::uintmax_t iters = 100;
  const auto [a, b] =
      boost::math::tools::toms748_solve(g, 0.0, hi, g(0.0), g(hi), boost::math::tools::eps_tolerance<double>(40), iters);
  return 0.5 * (a + b);
}

std::vector<TukeyPair> tukey_hsd(std::span<const std::vector<double>> groups, double alpha) {
  const auto anova = anova_oneway(groups);
  const std::size_t k = groups.size();
  std::vector<double> means(k);
  for (std::size_t i = 0; i < k; ++i) {
    means[i] = std::accumulate(groups[i].begin(), groups[i].end(), 0.0) / static_cast<double>(groups[i].size());
  }
  const double df = static_cast<double>(anova.df_within);
  const double q_crit = qtukey_upper(alpha, k, df);
  std::vector<TukeyPair> out;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      TukeyPair p;
      p.i = i;
      p.j = j;
      p.mean_diff = means[j] - means[i];
      p.q_crit = q_crit;
      const double diff = std::abs(p.mean_diff);
      const double se = std::sqrt(anova.ms_within / 2.0 *
                                  (1.0 / static_cast<double>(groups[i].size()) + 1.0 / static_cast<double>(groups[j].size())));
      if (diff == 0.0) {
        p.q = 0.0;
      } else if (se == 0.0) {
        p.q = std::numeric_limits<double>::infinity();
      } else {
        p.q = diff / se;
      }
      p.p = std::isinf(p.q) ? 0.0 : 1.0 - ptukey(p.q, k, df);
      p.significant = p.q > q_crit;
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace tactile::learn
