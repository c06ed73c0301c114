#pragma once

// Deliberately naive reference implementations used as test oracles. None of
// them share code with the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

/// O(n^2) DFT.
inline std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      const double a = -2.0 * kPi * static_cast<double>((k * j) % n) / static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(a), std::sin(a));
    }
    out[k] = acc;
  }
  return out;
}

/// Exhaustive k-NN: full stable sort by distance, then plain majority with
/// ties broken by smaller summed distance, then lower label.
inline int knn(const std::vector<std::vector<double>>& train, const std::vector<int>& labels,
               const std::vector<double>& q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < train.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) s += (train[i][j] - q[j]) * (train[i][j] - q[j]);
    d.emplace_back(s, i);
  }
  std::stable_sort(d.begin(), d.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::map<int, std::pair<int, double>> votes;
  for (std::size_t i = 0; i < std::min(k, d.size()); ++i) {
    auto& v = votes[labels[d[i].second]];
    v.first += 1;
    v.second += std::sqrt(d[i].first);
  }
  int best = -1;
  std::pair<int, double> best_v{-1, 0.0};
  for (const auto& [label, v] : votes) {
    if (v.first > best_v.first || (v.first == best_v.first && v.second < best_v.second)) {
      best = label;
      best_v = v;
    }
  }
  return best;
}

/// Pooled-variance two-sample t statistic.
inline double pooled_t(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  const double ma = mean(a), mb = mean(b);
  double sa = 0.0, sb = 0.0;
  for (double x : a) sa += (x - ma) * (x - ma);
  for (double x : b) sb += (x - mb) * (x - mb);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double sp2 = (sa + sb) / (na + nb - 2.0);
  return (ma - mb) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
}

inline double rms(const std::vector<double>& v, std::size_t from = 0, std::size_t to = 0) {
  if (to == 0) to = v.size();
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += v[i] * v[i];
  return std::sqrt(s / static_cast<double>(to - from));
}

/// Amplitude of the best-fit sinusoid at frequency f (least squares on sin/cos).
inline double fitted_amplitude(const std::vector<double>& v, double rate, double f, std::size_t from, std::size_t to) {
  double ss = 0, cc = 0, sc = 0, ys = 0, yc = 0;
  for (std::size_t i = from; i < to; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double s = std::sin(2 * kPi * f * t), c = std::cos(2 * kPi * f * t);
    ss += s * s;
    cc += c * c;
    sc += s * c;
    ys += v[i] * s;
    yc += v[i] * c;
  }
  const double det = ss * cc - sc * sc;
  const double a = (ys * cc - yc * sc) / det;
  const double b = (yc * ss - ys * sc) / det;
  return std::hypot(a, b);
}

}  // namespace oracle
