#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tactile/mechanics.hpp"

namespace tactile::magnetics {

inline constexpr double kMu0 = 4.0e-7 * 3.14159265358979323846;  // T m / A

using Vec3 = std::array<double, 3>;

/// Cube magnet treated as a point dipole.
struct MagnetModel {
  double edge_mm = 2.0;
  double remanence_t = 1.43;  // N50 midrange
  Vec3 axis{0.0, 0.0, 1.0};   ///< rest orientation, unit norm

  /// Dipole moment in A m^2: Br * V / mu0.
  double moment() const noexcept;
};

struct MagnetometerLayout {
  Vec3 position_mm{0.0, 0.0, -3.0};  ///< die relative to the magnet rest centre
  double conversion_ut_per_lsb = 1.0;
  /// Counts saturate at +-(2^bits - 1). 17 keeps the ~6.7e4 uT rest field at 3 mm in range.
  int resolution_bits = 17;

  std::int32_t saturation() const noexcept { return static_cast<std::int32_t>((1L << resolution_bits) - 1); }
};

void validate(const MagnetModel& magnet);
void validate(const MagnetometerLayout& layout, const MagnetModel& magnet);

struct Pose {
  double x_um = 0.0;
  double z_um = 0.0;
  double theta_mrad = 0.0;  ///< rotation about +y
};

enum class Provenance { Simulated, Ingested };

std::string to_string(Provenance p);

/// Triaxial magnetometer record in integer counts.
struct FieldSeries {
  double rate_hz = 0.0;
  std::vector<double> times_s;
  std::vector<std::int32_t> bx, by, bz;
  Provenance meta = Provenance::Simulated;
  bool saturated = false;

  std::size_t size() const noexcept { return times_s.size(); }
};

/// Field of the displaced, rotated dipole at the sensor, in microtesla.
Vec3 dipole_field(const MagnetModel& magnet, const Pose& pose, const Vec3& sensor_pos_mm);

struct Quantized {
  std::array<std::int32_t, 3> counts{};
  bool saturated = false;
};

/// Round to nearest count (halves away from zero), saturating at the layout bound.
Quantized quantize(const Vec3& b_ut, const MagnetometerLayout& layout);

FieldSeries trajectory_to_field(const mechanics::MagnetTrajectory& traj, const MagnetModel& magnet,
                                const MagnetometerLayout& layout);

/// `t_s,bx_lsb,by_lsb,bz_lsb` with integer counts; `#` comment lines are
/// written from `comments` and skipped (but returned) when reading.
void write_csv(const FieldSeries& series, std::ostream& out, const std::vector<std::string>& comments = {});

struct FieldCsv {
  FieldSeries series;
  std::vector<std::string> comments;  ///< without the leading '#'
};

FieldCsv read_field_csv(std::istream& in);

}  // namespace tactile::magnetics
