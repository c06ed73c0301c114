#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace tactile::dsp {

/// Evenly sampled real signal.
struct UniformSeries {
  double rate_hz = 0.0;
  std::vector<double> values;

  double duration_s() const noexcept {
    return values.empty() ? 0.0 : static_cast<double>(values.size() - 1) / rate_hz;
  }
};

/// One-sided, Hann-windowed, amplitude-corrected magnitude spectrum.
///
/// A sinusoid of amplitude A centred on a bin reads A at that bin. The window
/// sum and the transform length are kept so callers can relate the magnitudes
/// back to signal energy (see spectrum_energy()):
///   sum (w[n] x[n])^2 = S^2/n * (P[0]^2 + P[n/2]^2 + sum_{0<k<n/2} P[k]^2 / 2)
/// with S = window_sum and the Nyquist term present only for even n.
struct PowerSpectrum {
  std::vector<double> freqs_hz;
  std::vector<double> power;
  std::size_t n = 0;
  double window_sum = 0.0;
};

struct SpectralPeak {
  double freq_hz = 0.0;
  double power = 0.0;
  double prominence = 0.0;
  std::size_t bin = 0;
};

// -- FFT -------------------------------------------------------------------

/// Forward DFT of arbitrary length (radix-2, Bluestein for other sizes).
std::vector<std::complex<double>> fft(std::span<const std::complex<double>> input);

// -- filters ---------------------------------------------------------------

/// Second-order section, a0 normalised to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

/// 4th-order Butterworth as two cascaded biquads (bilinear transform, prewarped).
std::vector<Biquad> butterworth_lowpass(double cutoff_hz, double rate_hz);
std::vector<Biquad> butterworth_highpass(double cutoff_hz, double rate_hz);

/// Causal cascade with zero initial state.
std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x);

/// Forward-backward (zero-phase) filtering with odd-extension padding and
/// steady-state initial conditions, so a constant input passes through a
/// high-pass as (numerically) zero from the first sample.
std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x,
                             std::size_t padlen);

// -- pipeline operations ---------------------------------------------------

/// Linear interpolation of (times, values) onto a uniform grid starting at times[0].
UniformSeries resample(std::span<const double> times_s, std::span<const double> values,
                       double target_rate_hz);

/// Anti-aliased rate reduction: zero-phase low-pass at 0.45 * target, then
/// linear interpolation onto the target grid.
UniformSeries downsample(const UniformSeries& series, double target_rate_hz);

/// Zero-phase 4th-order Butterworth high-pass.
UniformSeries highpass(const UniformSeries& series, double cutoff_hz);

/// Zero-phase 4th-order Butterworth low-pass.
UniformSeries lowpass(const UniformSeries& series, double cutoff_hz);

PowerSpectrum power_spectrum(const UniformSeries& series);

/// Energy of the windowed, mean-removed signal reconstructed from the spectrum.
double spectrum_energy(const PowerSpectrum& spec);

/// Local maxima with topographic prominence >= min_prominence, strongest
/// first, at most max_count of them.
std::vector<SpectralPeak> find_peaks(const PowerSpectrum& spec, double min_prominence,
                                     std::size_t max_count);

/// Same as above on a bare sequence (freq_hz is left at the bin index).
std::vector<SpectralPeak> find_peaks(std::span<const double> power, double min_prominence,
                                     std::size_t max_count);

/// y[0] = x[0]; y[n] = alpha x[n] + (1 - alpha) y[n-1].
std::vector<double> ema(std::span<const double> values, double alpha);

}  // namespace tactile::dsp
