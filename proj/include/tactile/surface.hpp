#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace tactile::surface {

/// Finest resolution the generator accepts; keeps >= 3 samples per 0.06 mm wavelength.
inline constexpr double kMinResolutionPerMm = 50.0;
inline constexpr double kDefaultResolutionPerMm = 200.0;

/// 1-D height field h(x) in micrometres, sampled uniformly on [0, length].
class SurfaceProfile {
 public:
  SurfaceProfile(double length_mm, std::vector<double> heights_um);

  double length_mm() const noexcept { return length_mm_; }
  /// Samples per millimetre (heights.size() / length).
  double resolution() const noexcept { return static_cast<double>(heights_.size()) / length_mm_; }
  double spacing_mm() const noexcept { return length_mm_ / static_cast<double>(heights_.size() - 1); }
  const std::vector<double>& heights() const noexcept { return heights_; }
  double x_at(std::size_t i) const noexcept { return static_cast<double>(i) * spacing_mm(); }

 private:
  double length_mm_;
  std::vector<double> heights_;
};

struct RoughnessMetrics {
  double ra_um = 0.0;  ///< mean absolute deviation from the mean line
  double rt_um = 0.0;  ///< peak to valley
  double rp_um = 0.0;  ///< highest peak above the mean line
};

struct Sinusoid {
  double wavelength_mm = 0.0;
  double amplitude_um = 0.0;
  double phase_rad = 0.0;
};

struct SinusoidSum {
  std::vector<Sinusoid> components;
};

/// Seeded white noise smoothed by a moving average of width correlation_length,
/// then rescaled to the requested RMS about zero mean.
struct Stochastic {
  std::uint64_t seed = 0;
  double correlation_length_mm = 0.0;
  double rms_um = 0.0;
};

using SurfaceSpec = std::variant<Sinusoid, SinusoidSum, Stochastic>;

void validate(const SurfaceSpec& spec);

SurfaceProfile generate_surface(const SurfaceSpec& spec, double length_mm,
                                double resolution_per_mm = kDefaultResolutionPerMm);

/// Pointwise sum of two profiles on the same grid.
SurfaceProfile superpose(const SurfaceProfile& a, const SurfaceProfile& b);

/// Linear interpolation; exact at stored samples.
double sample_height(const SurfaceProfile& profile, double x_mm);

RoughnessMetrics roughness(const SurfaceProfile& profile);

/// Two-column CSV `x_mm,height_um` with a one-line header.
void write_csv(const SurfaceProfile& profile, std::ostream& out);
SurfaceProfile read_csv(std::istream& in);

}  // namespace tactile::surface
