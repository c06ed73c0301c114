#include "tactile/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tactile/error.hpp"

namespace tactile::dsp {

namespace {

using cd = std::complex<double>;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_pow2_inplace(std::vector<cd>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        // Twiddles from the angle directly; accumulating products drifts for large n.
        const cd w = std::polar(1.0, ang * static_cast<double>(k));
        const cd u = a[i + k];
        const cd v = a[i + k + half] * w;
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    for (auto& v : a) v /= static_cast<double>(n);
  }
}

std::vector<cd> bluestein(std::span<const cd> x) {
  const std::size_t n = x.size();
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;

  std::vector<cd> chirp(n);
  const std::size_t two_n = 2 * n;
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the phase argument small.
    const auto k2 = static_cast<std::size_t>((static_cast<unsigned __int128>(k) * k) % two_n);
    chirp[k] = std::polar(1.0, -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n));
  }
  std::vector<cd> a(m), b(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    b[k] = std::conj(chirp[k]);
    b[m - k] = std::conj(chirp[k]);
  }
  fft_pow2_inplace(a, false);
  fft_pow2_inplace(b, false);
  for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
  fft_pow2_inplace(a, true);

  std::vector<cd> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * chirp[k];
  return out;
}

Biquad make_section(double cutoff_hz, double rate_hz, double q, bool high) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / rate_hz;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad s{};
  if (high) {
    s.b0 = (1.0 + c) / 2.0 / a0;
    s.b1 = -(1.0 + c) / a0;
    s.b2 = (1.0 + c) / 2.0 / a0;
  } else {
    s.b0 = (1.0 - c) / 2.0 / a0;
    s.b1 = (1.0 - c) / a0;
    s.b2 = (1.0 - c) / 2.0 / a0;
  }
  s.a1 = -2.0 * c / a0;
  s.a2 = (1.0 - alpha) / a0;
  return s;
}

std::vector<Biquad> butterworth4(double cutoff_hz, double rate_hz, bool high) {
  if (!(rate_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  if (!(cutoff_hz > 0.0) || cutoff_hz >= rate_hz / 2.0) {
    throw Error(ErrorCode::InvalidArgument, "cutoff must lie in (0, Nyquist)");
  }
  // Pole-pair quality factors of the 4th-order Butterworth prototype.
  const double q1 = 1.0 / (2.0 * std::sin(std::numbers::pi / 8.0));
  const double q2 = 1.0 / (2.0 * std::sin(3.0 * std::numbers::pi / 8.0));
  return {make_section(cutoff_hz, rate_hz, q1, high), make_section(cutoff_hz, rate_hz, q2, high)};
}

// Transposed direct form II state for one section.
struct SectionState {
  double z1 = 0.0;
  double z2 = 0.0;
};

// Steady-state state of each section for a unit constant input to the cascade.
std::vector<SectionState> steady_state(std::span<const Biquad> sections) {
  std::vector<SectionState> zi(sections.size());
  double u = 1.0;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const auto& s = sections[i];
    const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double y = gain * u;
    zi[i].z2 = s.b2 * u - s.a2 * y;
    zi[i].z1 = y - s.b0 * u;
    u = y;
  }
  return zi;
}

void run_cascade(std::span<const Biquad> sections, std::vector<SectionState> state,
                 std::vector<double>& data) {
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const auto& s = sections[i];
    double z1 = state[i].z1;
    double z2 = state[i].z2;
    for (double& v : data) {
      const double x = v;
      const double y = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * y + z2;
      z2 = s.b2 * x - s.a2 * y;
      v = y;
    }
  }
}

std::size_t default_padlen(double cutoff_hz, double rate_hz, std::size_t n) {
  // Three time constants of the slowest pole, at least the classic 3*(2*sections+1).
  const auto settle = static_cast<std::size_t>(std::ceil(3.0 * rate_hz / cutoff_hz));
  return std::min(std::max<std::size_t>(15, settle), n - 1);
}

}  // namespace

std::vector<std::complex<double>> fft(std::span<const std::complex<double>> input) {
  if (input.empty()) return {};
  if (is_pow2(input.size())) {
    std::vector<cd> a(input.begin(), input.end());
    fft_pow2_inplace(a, false);
    return a;
  }
  return bluestein(input);
}

std::vector<Biquad> butterworth_lowpass(double cutoff_hz, double rate_hz) {
  return butterworth4(cutoff_hz, rate_hz, false);
}

std::vector<Biquad> butterworth_highpass(double cutoff_hz, double rate_hz) {
  return butterworth4(cutoff_hz, rate_hz, true);
}

std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  run_cascade(sections, std::vector<SectionState>(sections.size()), out);
  return out;
}

std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x,
                             std::size_t padlen) {
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorCode::TooShort, "filtfilt needs at least 2 samples");
  padlen = std::min(padlen, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto unit = steady_state(sections);
  auto scaled = [&](double level) {
    auto zi = unit;
    for (auto& z : zi) {
      z.z1 *= level;
      z.z2 *= level;
    }
    return zi;
  };

  run_cascade(sections, scaled(ext.front()), ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade(sections, scaled(ext.front()), ext);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(padlen),
          ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

UniformSeries resample(std::span<const double> times_s, std::span<const double> values,
                       double target_rate_hz) {
  if (times_s.size() != values.size()) {
    throw Error(ErrorCode::DimensionMismatch, "times and values differ in length");
  }
  if (times_s.size() < 2) throw Error(ErrorCode::TooShort, "resample needs at least 2 samples");
  if (!(target_rate_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "target rate must be positive");
  for (std::size_t i = 1; i < times_s.size(); ++i) {
    if (!(times_s[i] > times_s[i - 1])) {
      throw Error(ErrorCode::NonMonotonicTime,
                  "timestamps not strictly increasing at index " + std::to_string(i));
    }
  }

  const double t0 = times_s.front();
  const double span = times_s.back() - t0;
  const auto count = static_cast<std::size_t>(std::floor(span * target_rate_hz + 1e-9)) + 1;

  UniformSeries out{target_rate_hz, std::vector<double>(count)};
  std::size_t j = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = t0 + static_cast<double>(i) / target_rate_hz;
    while (j + 2 < times_s.size() && times_s[j + 1] <= t) ++j;
    const double ta = times_s[j];
    const double tb = times_s[j + 1];
    const double frac = std::clamp((t - ta) / (tb - ta), 0.0, 1.0);
    out.values[i] = values[j] + (values[j + 1] - values[j]) * frac;
  }
  return out;
}

UniformSeries lowpass(const UniformSeries& series, double cutoff_hz) {
  const auto sections = butterworth_lowpass(cutoff_hz, series.rate_hz);
  const std::size_t n = series.values.size();
  return {series.rate_hz,
          filtfilt(sections, series.values, default_padlen(cutoff_hz, series.rate_hz, n))};
}

UniformSeries highpass(const UniformSeries& series, double cutoff_hz) {
  const auto sections = butterworth_highpass(cutoff_hz, series.rate_hz);
  const std::size_t n = series.values.size();
  if (n < 2) throw Error(ErrorCode::TooShort, "highpass needs at least 2 samples");
  return {series.rate_hz,
          filtfilt(sections, series.values, default_padlen(cutoff_hz, series.rate_hz, n))};
}

UniformSeries downsample(const UniformSeries& series, double target_rate_hz) {
  if (!(target_rate_hz > 0.0) || target_rate_hz >= series.rate_hz) {
    throw Error(ErrorCode::InvalidArgument, "downsample target must be below the source rate");
  }
  if (series.values.size() < 2) throw Error(ErrorCode::TooShort, "downsample needs at least 2 samples");
  const auto filtered = lowpass(series, 0.45 * target_rate_hz);

  const std::size_t n = filtered.values.size();
  const double span = static_cast<double>(n - 1) / series.rate_hz;
  const auto count = static_cast<std::size_t>(std::floor(span * target_rate_hz + 1e-9)) + 1;
  UniformSeries out{target_rate_hz, std::vector<double>(count)};
  for (std::size_t i = 0; i < count; ++i) {
    const double pos = static_cast<double>(i) * series.rate_hz / target_rate_hz;
    const auto j = std::min(static_cast<std::size_t>(pos), n - 2);
    const double frac = pos - static_cast<double>(j);
    out.values[i] = filtered.values[j] + (filtered.values[j + 1] - filtered.values[j]) * frac;
  }
  return out;
}

PowerSpectrum power_spectrum(const UniformSeries& series) {
  const std::size_t n = series.values.size();
  if (n < 8) throw Error(ErrorCode::TooShort, "power spectrum needs at least 8 samples");
  if (!(series.rate_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "rate must be positive");

  double mean = 0.0;
  for (double v : series.values) mean += v;
  mean /= static_cast<double>(n);

  std::vector<cd> buf(n);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    wsum += w;
    buf[i] = cd((series.values[i] - mean) * w, 0.0);
  }
  const auto spec = fft(buf);

  const std::size_t bins = n / 2 + 1;
  PowerSpectrum out;
  out.n = n;
  out.window_sum = wsum;
  out.freqs_hz.resize(bins);
  out.power.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    out.freqs_hz[k] = static_cast<double>(k) * series.rate_hz / static_cast<double>(n);
    const bool edge = (k == 0) || (n % 2 == 0 && k == n / 2);
    out.power[k] = std::abs(spec[k]) * (edge ? 1.0 : 2.0) / wsum;
  }
  return out;
}

double spectrum_energy(const PowerSpectrum& spec) {
  if (spec.n == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < spec.power.size(); ++k) {
    const bool edge = (k == 0) || (spec.n % 2 == 0 && k == spec.n / 2);
    const double p2 = spec.power[k] * spec.power[k];
    acc += edge ? p2 : p2 / 2.0;
  }
  return acc * spec.window_sum * spec.window_sum / static_cast<double>(spec.n);
}

std::vector<SpectralPeak> find_peaks(std::span<const double> x, double min_prominence,
                                     std::size_t max_count) {
  std::vector<SpectralPeak> peaks;
  const std::size_t n = x.size();
  if (n < 3) return peaks;

  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i - 1] < x[i]) {
      // Walk across a plateau; a peak needs a strictly lower sample after it.
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        const std::size_t peak = (i + ahead - 1) / 2;
        const double h = x[peak];

        double left_min = h;
        for (std::size_t j = peak + 1; j-- > 0;) {
          if (x[j] > h) break;
          left_min = std::min(left_min, x[j]);
        }
        double right_min = h;
        for (std::size_t j = peak; j < n; ++j) {
          if (x[j] > h) break;
          right_min = std::min(right_min, x[j]);
        }
        const double prominence = h - std::max(left_min, right_min);
        if (prominence >= min_prominence) {
          peaks.push_back({static_cast<double>(peak), h, prominence, peak});
        }
        i = ahead;
        continue;
      }
      i = ahead;
      continue;
    }
    ++i;
  }

  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const SpectralPeak& a, const SpectralPeak& b) { return a.power > b.power; });
  if (peaks.size() > max_count) peaks.resize(max_count);
  return peaks;
}

std::vector<SpectralPeak> find_peaks(const PowerSpectrum& spec, double min_prominence,
                                     std::size_t max_count) {
  auto peaks = find_peaks(std::span<const double>(spec.power), min_prominence, max_count);
  for (auto& p : peaks) p.freq_hz = spec.freqs_hz[p.bin];
  return peaks;
}

std::vector<double> ema(std::span<const double> values, double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "ema alpha must lie in (0, 1]");
  }
  std::vector<double> out(values.size());
  if (values.empty()) return out;
  out[0] = values[0];
  for (std::size_t i = 1; i < values.size(); ++i) {
    out[i] = alpha * values[i] + (1.0 - alpha) * out[i - 1];
  }
  return out;
}

}  // namespace tactile::dsp
