#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "tactile/error.hpp"
#include "tactile/learn.hpp"

using namespace tactile;
using namespace tactile::learn;

namespace {

features::LabeledDataset blobs(std::size_t per_class, std::size_t classes, double spread, std::uint64_t seed) {
  features::LabeledDataset d;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, spread);
  for (std::size_t c = 0; c < classes; ++c) d.class_names.push_back("c" + std::to_string(c));
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      features::Row r;
      for (std::size_t s = 0; s < features::kFeatureCount; ++s) {
        r.features.values[s] = (s % classes == c ? 10.0 : 0.0) + nd(gen);
      }
      r.label = static_cast<int>(c);
      d.rows.push_back(r);
    }
  }
  return d;
}

std::vector<int> random_labels(std::size_t n, int classes, std::mt19937_64& gen) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
  std::shuffle(y.begin(), y.end(), gen);
  return y;
}

}  // namespace

TEST_CASE("k-NN basics") {
  std::vector<std::vector<double>> x{{0, 0}, {1, 1}, {2, 2}};
  std::vector<int> y{4, 4, 4};
  CHECK(knn_predict(x, y, std::vector<double>{9, 9}, {3}) == 4);

  std::vector<std::vector<double>> x2;
  std::vector<int> y2;
  for (int i = 0; i < 3; ++i) {
    x2.push_back({0, 0, 0});
    y2.push_back(0);
  }
  for (int i = 0; i < 3; ++i) {
    x2.push_back({1, 1, 1});
    y2.push_back(1);
  }
  CHECK(knn_predict(x2, y2, std::vector<double>{0.1, 0.0, 0.1}, {5}) == 0);
  CHECK_THROWS_AS(knn_predict(x2, y2, std::vector<double>{0.1, 0.0}, {5}), Error);
  CHECK_THROWS_AS(knn_predict(x2, y2, std::vector<double>{0, 0, 0}, {7}), Error);
}

TEST_CASE("k-NN vote ties go to the closer class, then the lower label") {
  std::vector<std::vector<double>> x{{1.0}, {-2.0}, {3.0}, {-3.0}};
  std::vector<int> y{1, 0, 1, 0};
  CHECK(knn_predict(x, y, std::vector<double>{0.0}, {4}) == 1);
  std::vector<std::vector<double>> sym{{1.0}, {-1.0}};
  std::vector<int> ys{1, 0};
  CHECK(knn_predict(sym, ys, std::vector<double>{0.0}, {2}) == 0);
}

TEST_CASE("k-NN agrees with an exhaustive oracle") {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> nd;
  std::vector<std::vector<double>> train(500, std::vector<double>(66));
  std::vector<int> labels(500);
  for (std::size_t i = 0; i < 500; ++i) {
    for (double& v : train[i]) v = nd(gen);
    labels[i] = static_cast<int>(gen() % 3);
  }
  for (int q = 0; q < 100; ++q) {
    std::vector<double> query(66);
    for (double& v : query) v = nd(gen);
    CHECK(knn_predict(train, labels, query, {5}) == oracle::knn(train, labels, query, 5));
  }
}

TEST_CASE("k-NN is invariant to a common positive scale") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<double>> train(80, std::vector<double>(8));
  std::vector<int> labels(80);
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (double& v : train[i]) v = u(gen);
    labels[i] = static_cast<int>(i % 4);
  }
  for (double c : {0.5, 4.0, 1e3}) {
    auto scaled = train;
    for (auto& r : scaled) {
      for (double& v : r) v *= c;
    }
    for (int q = 0; q < 40; ++q) {
      std::vector<double> query(8);
      for (double& v : query) v = u(gen);
      auto sq = query;
      for (double& v : sq) v *= c;
      CHECK(knn_predict(train, labels, query) == knn_predict(scaled, labels, sq));
    }
  }
}

TEST_CASE("stratified folds on exactly divisible classes") {
  const std::vector<int> y{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const auto a = stratified_folds(y, {5, 3, 42});
  for (const auto& rep : a) {
    std::map<std::pair<std::size_t, int>, int> count;
    for (std::size_t i = 0; i < y.size(); ++i) ++count[{rep[i], y[i]}];
    for (std::size_t f = 0; f < 5; ++f) {
      CHECK(count[{f, 0}] == 1);
      CHECK(count[{f, 1}] == 1);
    }
  }
  CHECK(a == stratified_folds(y, {5, 3, 42}));
  CHECK(a != stratified_folds(y, {5, 3, 43}));
}

TEST_CASE("stratified folds with a remainder") {
  const std::vector<int> y{0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  for (const auto& rep : stratified_folds(y, {5, 10, 1})) {
    std::map<std::pair<std::size_t, int>, int> count;
    for (std::size_t i = 0; i < y.size(); ++i) ++count[{rep[i], y[i]}];
    for (std::size_t f = 0; f < 5; ++f) {
      CHECK((count[{f, 0}] == 1 || count[{f, 0}] == 2));
      CHECK(count[{f, 1}] == 1);
    }
  }
}

TEST_CASE("stratified folds partition the data with per-class balance") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int classes = 2 + static_cast<int>(gen() % 6);
    const std::size_t folds = 2 + gen() % 6;
    std::vector<int> y;
    for (int c = 0; c < classes; ++c) {
      const std::size_t n = folds + gen() % 20;
      for (std::size_t i = 0; i < n; ++i) y.push_back(c);
    }
    std::shuffle(y.begin(), y.end(), gen);
    const auto a = stratified_folds(y, {folds, 4, gen()});
    for (const auto& rep : a) {
      REQUIRE(rep.size() == y.size());
      std::map<int, std::vector<int>> per_class;
      for (int c = 0; c < classes; ++c) per_class[c].assign(folds, 0);
      for (std::size_t i = 0; i < y.size(); ++i) {
        REQUIRE(rep[i] < folds);
        ++per_class[y[i]][rep[i]];
      }
      for (const auto& [c, counts] : per_class) {
        const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
        CHECK(*hi - *lo <= 1);
      }
    }
  }
}

TEST_CASE("classes smaller than the fold count are rejected") {
  const std::vector<int> y{0, 0, 0, 0, 0, 1, 1, 1};
  CHECK_THROWS_AS(stratified_folds(y, {5, 1, 0}), Error);
}

TEST_CASE("plan presets") {
  CHECK(power_analysis_plan().models() == 50);
  CHECK(velocity_split_plan().models() == 300);
  CHECK(plan_preset("velocity-split", 3).seed == 3);
  CHECK_THROWS_AS(plan_preset("nope"), Error);
}

TEST_CASE("evaluate on separable blobs is perfect") {
  const auto d = blobs(10, 3, 0.5, 1);
  for (auto mode : {features::NormalizeMode::FoldSafe, features::NormalizeMode::Global}) {
    const auto dist = evaluate(d, power_analysis_plan(11), {}, mode);
    CHECK(dist.models.size() == 50);
    CHECK(dist.mean == 1.0);
    CHECK(dist.std == 0.0);
    CHECK(dist.class_total == std::vector<std::size_t>{100, 100, 100});
  }
}

TEST_CASE("random labels on identical features score at chance") {
  features::LabeledDataset d;
  d.class_names = {"a", "b"};
  std::mt19937_64 gen(13);
  const auto y = random_labels(60, 2, gen);
  for (int label : y) {
    features::Row r;
    r.features.values.fill(1.0);
    r.label = label;
    d.rows.push_back(r);
  }
  const auto dist = evaluate(d, velocity_split_plan(4));
  CHECK(dist.models.size() == 300);
  CHECK(dist.mean >= 0.4);
  CHECK(dist.mean <= 0.6);
}

TEST_CASE("evaluate yields folds x repeats accuracies in [0, 1] independent of thread count") {
  std::mt19937_64 gen(1);
  for (auto [f, r] : {std::pair<std::size_t, std::size_t>{2, 3}, {5, 4}, {3, 7}}) {
    const auto d = blobs(8, 4, 8.0, gen());
    const auto one = evaluate(d, {f, r, 9}, {3}, features::NormalizeMode::FoldSafe, 1);
    const auto many = evaluate(d, {f, r, 9}, {3}, features::NormalizeMode::FoldSafe, 4);
    REQUIRE(one.models.size() == f * r);
    for (std::size_t i = 0; i < one.models.size(); ++i) {
      CHECK(one.models[i].accuracy >= 0.0);
      CHECK(one.models[i].accuracy <= 1.0);
      CHECK(one.models[i].accuracy == many.models[i].accuracy);
      CHECK(one.models[i].repeat == i / f);
      CHECK(one.models[i].fold == i % f);
    }
    CHECK(one.mean == many.mean);
    CHECK(one.class_correct == many.class_correct);
  }
}

TEST_CASE("one-way ANOVA on the three-group fixture") {
  const std::vector<std::vector<double>> g{{1, 2, 3}, {2, 3, 4}, {3, 4, 5}};
  const auto a = anova_oneway(g);
  CHECK(a.ss_between == doctest::Approx(6.0));
  CHECK(a.ss_within == doctest::Approx(6.0));
  CHECK(std::abs(a.f - 3.0) / 3.0 < 1e-9);
  CHECK(a.df_between == 2);
  CHECK(a.df_within == 6);
  // F(2, 6) survival at 3 is (1 + 3 * 2 / 6)^-3 = 1/8.
  CHECK(a.p == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("ANOVA with no between-group variance") {
  const std::vector<std::vector<double>> g{{1, 2, 3}, {1, 2, 3}};
  const auto a = anova_oneway(g);
  CHECK(a.f == 0.0);
  CHECK(a.p == 1.0);
  const std::vector<std::vector<double>> one{{1, 2, 3}};
  CHECK_THROWS_AS(anova_oneway(one), Error);
}

TEST_CASE("two-group F equals the pooled t statistic squared") {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> g(2);
    const std::size_t na = 3 + gen() % 20, nb = 3 + gen() % 20;
    for (std::size_t i = 0; i < na; ++i) g[0].push_back(nd(gen));
    for (std::size_t i = 0; i < nb; ++i) g[1].push_back(0.7 + 2.0 * nd(gen));
    const double t = oracle::pooled_t(g[0], g[1]);
    CHECK(std::abs(anova_oneway(g).f - t * t) <= 1e-9 * std::max(1.0, t * t));
  }
}

TEST_CASE("ANOVA F is invariant to shifting and scaling every value") {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> nd;
  std::vector<std::vector<double>> g(4);
  for (std::size_t k = 0; k < g.size(); ++k) {
    for (int i = 0; i < 9; ++i) g[k].push_back(nd(gen) + 0.3 * static_cast<double>(k));
  }
  const double f = anova_oneway(g).f;
  auto shifted = g, scaled = g;
  for (auto& grp : shifted) {
    for (double& v : grp) v += 1234.5;
  }
  for (auto& grp : scaled) {
    for (double& v : grp) v *= 0.013;
  }
  CHECK(anova_oneway(shifted).f == doctest::Approx(f).epsilon(1e-9));
  CHECK(anova_oneway(scaled).f == doctest::Approx(f).epsilon(1e-9));
}

TEST_CASE("F survival function") {
  CHECK(f_survival(3.0, 2.0, 6.0) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(f_survival(0.0, 3.0, 10.0) == 1.0);
  // F(1, d) survival equals the two-sided t tail.
  CHECK(f_survival(4.0, 1.0, 1.0) == doctest::Approx(1.0 - 2.0 / M_PI * std::atan(2.0)).epsilon(1e-12));
}

TEST_CASE("studentized range critical values match published tables") {
  CHECK(qtukey_upper(0.05, 3, 10) == doctest::Approx(3.88).epsilon(0.02 / 3.88));
  struct Row {
    double alpha;
    std::size_t k;
    double df, q;
  };
  for (const Row& r : {Row{0.05, 3, 10, 3.877}, Row{0.05, 2, 20, 2.950}, Row{0.05, 5, 30, 4.102},
                       Row{0.01, 4, 20, 5.018}, Row{0.05, 10, 60, 4.646}, Row{0.05, 3, INFINITY, 3.314}}) {
    CHECK(qtukey_upper(r.alpha, r.k, r.df) == doctest::Approx(r.q).epsilon(0.0015 / r.q));
  }
}

TEST_CASE("studentized range for two means is a scaled t") {
  // With k = 2, P(Q <= q) = P(|T| <= q / sqrt 2) for T ~ t(df); df = 1 has a closed form.
  for (double q : {0.5, 1.5, 4.0, 12.0}) {
    CHECK(ptukey(q, 2, 1.0) == doctest::Approx(2.0 / M_PI * std::atan(q / std::sqrt(2.0))).epsilon(1e-7));
  }
  CHECK(ptukey(0.0, 4, 10.0) == 0.0);
}

TEST_CASE("Tukey HSD") {
  const std::vector<std::vector<double>> far{{1.0, 1.1, 0.9, 1.0}, {9.0, 9.1, 8.9, 9.0}};
  const auto p = tukey_hsd(far);
  REQUIRE(p.size() == 1);
  CHECK(p[0].significant);
  CHECK(p[0].mean_diff == doctest::Approx(8.0));

  const std::vector<std::vector<double>> same{{1, 2, 3}, {1, 2, 3}, {1, 2, 3}};
  for (const auto& pair : tukey_hsd(same)) {
    CHECK_FALSE(pair.significant);
    CHECK(pair.q == 0.0);
  }
}

TEST_CASE("Tukey decisions survive a common affine transform") {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> g(4);
    for (std::size_t k = 0; k < g.size(); ++k) {
      for (int i = 0; i < 8; ++i) g[k].push_back(nd(gen) + 0.8 * static_cast<double>(k % 3));
    }
    auto t = g;
    for (auto& grp : t) {
      for (double& v : grp) v = 3.5 * v - 20.0;
    }
    const auto a = tukey_hsd(g);
    const auto b = tukey_hsd(t);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].significant == b[i].significant);
      CHECK(a[i].q == doctest::Approx(b[i].q).epsilon(1e-9));
    }
  }
}
