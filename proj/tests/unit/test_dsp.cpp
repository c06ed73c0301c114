#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tactile/dsp.hpp"
#include "tactile/error.hpp"

using namespace tactile;
using namespace tactile::dsp;

namespace {

UniformSeries sine(double f, double amp, double rate, double seconds, double offset = 0.0) {
  UniformSeries s{rate, {}};
  const auto n = static_cast<std::size_t>(seconds * rate);
  for (std::size_t i = 0; i < n; ++i) s.values.push_back(offset + amp * std::sin(2 * M_PI * f * i / rate));
  return s;
}

}  // namespace

TEST_CASE("fft matches a direct DFT for power-of-two and other lengths") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  for (std::size_t n : {1u, 2u, 7u, 16u, 60u, 97u, 128u, 330u}) {
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {nd(gen), nd(gen)};
    const auto a = fft(x);
    const auto b = oracle::dft(x);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-9 * std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("resampling constants and ramps is exact") {
  std::vector<double> t{0.0, 0.0013, 0.0041, 0.0042, 0.009, 0.0133};
  std::vector<double> c(t.size(), 4.25), ramp;
  for (double x : t) ramp.push_back(3.0 * x - 1.0);
  const auto rc = resample(t, c, 1000.0);
  for (double v : rc.values) CHECK(v == doctest::Approx(4.25));
  const auto rr = resample(t, ramp, 1000.0);
  CHECK(rr.rate_hz == 1000.0);
  for (std::size_t i = 0; i < rr.values.size(); ++i) CHECK(rr.values[i] == doctest::Approx(3.0 * i / 1000.0 - 1.0));
}

TEST_CASE("irregularly sampled sine resamples within 1% of amplitude") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> jitter(0.6e-4, 1.4e-4);
  std::vector<double> t{0.0}, v{0.0};
  while (t.back() < 1.0) {
    t.push_back(t.back() + jitter(gen));
    v.push_back(std::sin(2 * M_PI * 10.0 * t.back()));
  }
  const auto r = resample(t, v, 1000.0);
  double err = 0.0;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    err = std::max(err, std::abs(r.values[i] - std::sin(2 * M_PI * 10.0 * i / 1000.0)));
  }
  CHECK(err < 0.01);
}

TEST_CASE("resample rejects backwards time") {
  std::vector<double> t{0.0, 0.2, 0.1}, v{1, 2, 3};
  CHECK_THROWS_AS(resample(t, v, 10.0), Error);
}

TEST_CASE("downsampling to 330 Hz") {
  const auto dc = downsample(UniformSeries{5000.0, std::vector<double>(10000, 7.0)}, 330.0);
  CHECK(dc.rate_hz == 330.0);
  for (double v : dc.values) CHECK(v == doctest::Approx(7.0).epsilon(1e-9));

  const auto pass = downsample(sine(50.0, 1.0, 5000.0, 2.0), 330.0);
  const std::size_t n = pass.values.size();
  CHECK(oracle::fitted_amplitude(pass.values, 330.0, 50.0, n / 5, 4 * n / 5) == doctest::Approx(1.0).epsilon(0.02));

  const auto in = sine(200.0, 1.0, 5000.0, 2.0);
  const auto stop = downsample(in, 330.0);
  CHECK(oracle::rms(stop.values) < 0.1 * oracle::rms(in.values));
}

TEST_CASE("high-pass contract at 330 Hz with a 2 Hz cutoff") {
  const auto dc = highpass(UniformSeries{330.0, std::vector<double>(660, 100.0)}, 2.0);
  for (double v : dc.values) CHECK(std::abs(v) < 1e-4);

  const auto hi = highpass(sine(100.0, 1.0, 330.0, 4.0), 2.0);
  const std::size_t n = hi.values.size();
  CHECK(oracle::fitted_amplitude(hi.values, 330.0, 100.0, 0, n) == doctest::Approx(1.0).epsilon(0.01));

  const auto in = sine(0.5, 1.0, 330.0, 8.0);
  const auto lo = highpass(in, 2.0);
  CHECK(oracle::rms(lo.values) < 0.05 * oracle::rms(in.values));
}

TEST_CASE("two high-passes equal one well above the cutoff") {
  for (double f : {10.0, 25.0, 80.0}) {
    const auto x = sine(f, 1.0, 330.0, 4.0);
    const auto once = highpass(x, 2.0);
    const auto twice = highpass(once, 2.0);
    const std::size_t n = x.values.size();
    const double a1 = oracle::fitted_amplitude(once.values, 330.0, f, 0, n);
    const double a2 = oracle::fitted_amplitude(twice.values, 330.0, f, 0, n);
    CHECK(a2 == doctest::Approx(a1).epsilon(0.02));
  }
}

TEST_CASE("filter arguments are checked") {
  CHECK_THROWS_AS(butterworth_highpass(200.0, 330.0), Error);
  CHECK_THROWS_AS(butterworth_lowpass(0.0, 330.0), Error);
  CHECK_THROWS_AS(downsample(UniformSeries{330.0, std::vector<double>(100, 0.0)}, 5000.0), Error);
}

TEST_CASE("bin-centred sine reads its amplitude") {
  const double rate = 330.0;
  const std::size_t n = 660;
  const double f = 50.0 * rate / n;
  UniformSeries s{rate, {}};
  for (std::size_t i = 0; i < n; ++i) s.values.push_back(10.0 * std::sin(2 * M_PI * f * i / rate));
  const auto spec = power_spectrum(s);
  CHECK(spec.freqs_hz[50] == doctest::Approx(f));
  CHECK(spec.power[50] == doctest::Approx(10.0).epsilon(0.02));
  const auto zero = power_spectrum(UniformSeries{rate, std::vector<double>(n, 0.0)});
  for (double p : zero.power) CHECK(p == 0.0);
}

TEST_CASE("two separated sines give two peaks at their bins") {
  const double rate = 330.0;
  const std::size_t n = 660;
  UniformSeries s{rate, {}};
  for (std::size_t i = 0; i < n; ++i) {
    s.values.push_back(10.0 * std::sin(2 * M_PI * 20.0 * i / rate) + 4.0 * std::sin(2 * M_PI * 90.0 * i / rate));
  }
  const auto peaks = find_peaks(power_spectrum(s), 1.0, 20);
  REQUIRE(peaks.size() == 2);
  CHECK(peaks[0].freq_hz == doctest::Approx(20.0));
  CHECK(peaks[1].freq_hz == doctest::Approx(90.0));
  CHECK(peaks[0].power == doctest::Approx(10.0).epsilon(0.02));
}

TEST_CASE("spectrum energy agrees with the windowed signal energy") {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> nd(3.0, 2.0);
  for (std::size_t n : {64u, 331u, 660u, 1001u}) {
    UniformSeries s{330.0, {}};
    for (std::size_t i = 0; i < n; ++i) s.values.push_back(nd(gen));
    double mean = 0.0;
    for (double v : s.values) mean += v;
    mean /= static_cast<double>(n);
    double direct = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2 * M_PI * i / n);
      direct += std::pow(w * (s.values[i] - mean), 2);
    }
    CHECK(spectrum_energy(power_spectrum(s)) == doctest::Approx(direct).epsilon(1e-6));
  }
}

TEST_CASE("topographic prominence examples") {
  const std::vector<double> a{0, 5, 0};
  const auto pa = find_peaks(a, 0.0, 10);
  REQUIRE(pa.size() == 1);
  CHECK(pa[0].power == 5.0);
  CHECK(pa[0].prominence == 5.0);

  const std::vector<double> ramp{0, 1, 2, 3, 4};
  CHECK(find_peaks(ramp, 0.0, 10).empty());

  const std::vector<double> b{0, 3, 1, 5, 0};
  const auto pb = find_peaks(b, 2.0, 10);
  REQUIRE(pb.size() == 2);
  CHECK(pb[0].power == 5.0);
  CHECK(pb[0].prominence == 5.0);
  CHECK(pb[1].power == 3.0);
  CHECK(pb[1].prominence == 2.0);
  CHECK(find_peaks(b, 2.5, 10).size() == 1);
  CHECK(find_peaks(b, 0.0, 1).size() == 1);
}

TEST_CASE("peaks are invariant to a constant offset") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(200), y(200);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = u(gen);
      y[i] = x[i] + 1000.0;
    }
    const auto px = find_peaks(x, 1.5, 15);
    const auto py = find_peaks(y, 1.5, 15);
    REQUIRE(px.size() == py.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
      CHECK(px[i].bin == py[i].bin);
      CHECK(px[i].prominence == doctest::Approx(py[i].prominence).epsilon(1e-9));
    }
  }
}

TEST_CASE("exponential moving average") {
  const std::vector<double> c(20, 3.5);
  for (double v : ema(c, 0.12)) CHECK(v == doctest::Approx(3.5));
  const std::vector<double> x{1, 4, -2, 8};
  CHECK(ema(x, 1.0) == x);
  std::vector<double> step(20, 1.0);
  step[0] = 0.0;
  const auto y = ema(step, 0.12);
  CHECK(y[1] == doctest::Approx(0.12));
  CHECK(y[10] == doctest::Approx(1.0 - std::pow(0.88, 10)).epsilon(1e-12));
  CHECK(y[10] == doctest::Approx(0.7215).epsilon(1e-4));
  CHECK_THROWS_AS(ema(x, 0.0), Error);
}
