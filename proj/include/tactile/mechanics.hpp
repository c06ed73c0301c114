#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tactile/surface.hpp"

namespace tactile::mechanics {

enum class TipKind { Flat, FlatRidged, SphericalRidged };

std::string to_string(TipKind kind);
TipKind tip_kind_from_string(const std::string& name);

/// Outer tip geometry. Ridges are trapezoids: `ridge_width` at the base,
/// `ridge_top_fraction * ridge_width` flat crest, grooves `ridge_depth` deep,
/// repeating every `ridge_wavelength`. The pattern is centred on the tip axis.
struct TipGeometry {
  TipKind kind = TipKind::Flat;
  double contact_width_mm = 4.0;
  double ridge_depth_um = 80.0;
  double ridge_width_um = 400.0;
  double ridge_wavelength_um = 600.0;
  double ridge_top_fraction = 0.5;
  double sphere_radius_mm = 8.0;  ///< spherical kinds only

  static TipGeometry flat();
  static TipGeometry flat_ridged();
  static TipGeometry spherical_ridged();
};

void validate(const TipGeometry& tip);

/// Height of the undeformed tip surface above its lowest point (um, >= 0) at
/// tip-frame position u (mm, 0 on the tip axis).
double tip_recess_um(const TipGeometry& tip, double u_mm);

struct ElastomerStack {
  double epidermis_thickness_mm = 2.0;
  double dermis_thickness_mm = 3.0;
  double epidermis_modulus_psi = 96.0;  // Mold Star 30
  double dermis_modulus_psi = 8.0;      // Ecoflex 00-10
};

void validate(const ElastomerStack& stack);

/// Lumped-model constants. None of these are measured; they are the declared
/// parameters of the three-DOF suspension that stands in for a finite-element model.
struct ModelConstants {
  double shape_factor = 4.0;             ///< bearing area / magnet face area
  double lateral_stiffness_ratio = 1.0 / 3.0;  ///< k_x / k_z
  double damping_ratio = 0.1;
  double friction_coefficient = 0.5;
  double mass_participation = 0.3;       ///< elastomer mass moving with the magnet, as a fraction
  double magnet_density_kg_m3 = 7500.0;  ///< sintered NdFeB
  double tilt_limit_mrad = 100.0;
};

struct SuspensionParams {
  double k_x = 0.0;      ///< N/m
  double k_z = 0.0;      ///< N/m
  double k_theta = 0.0;  ///< N m / rad
  double m_eff = 0.0;    ///< kg
  double inertia = 0.0;  ///< kg m^2, rotation about y
  double zeta = 0.0;
};

SuspensionParams suspension_params(const ElastomerStack& stack, const TipGeometry& tip,
                                   double magnet_size_mm, const ModelConstants& constants = {});

struct ContactState {
  double z_base_um = 0.0;  ///< tip reference height under load
  double tilt_mrad = 0.0;  ///< tip rotation about y, positive when the surface rises toward +x
};

/// Tip contact against a surface on an elastic foundation.
///
/// The tip is rigid and sits on a bed of independent linear springs sampled
/// densely across its patch. Its height z is the one where the total spring
/// penetration equals what the same tip carries when pressed `preload` into a
/// flat surface:
///     sum_i max(0, h(x + u_i) - r_i - z) = sum_i max(0, preload - r_i)
/// with r_i the tip recess. On a flat surface every tip therefore sits exactly
/// `preload` below it; with preload -> 0 this degenerates to the rigid
/// max-envelope contact. Tilt is the moment-balancing rotation of the same bed
/// linearised about the solved height, clamped to the model's tilt limit.
class ContactModel {
 public:
  ContactModel(const TipGeometry& tip, double preload_um, double spacing_mm,
               double tilt_limit_mrad = 100.0);

  /// `hint` seeds the height solve (previous solution during a scan).
  ContactState evaluate(const surface::SurfaceProfile& surface, double x_center_mm,
                        std::optional<double> hint = std::nullopt) const;

  double half_width_mm() const noexcept { return half_width_; }
  std::size_t points() const noexcept { return offsets_.size(); }

 private:
  double half_width_;
  double preload_;
  double tilt_limit_;
  double target_ = 0.0;
  std::vector<double> offsets_;  // u_i, exactly antisymmetric about the centre
  std::vector<double> recess_;   // r_i
};

ContactState contact_envelope(const TipGeometry& tip, const surface::SurfaceProfile& surface,
                              double x_center_mm, double preload_depth_um);

enum class Direction { Positive, Negative };

std::string to_string(Direction d);
Direction direction_from_string(const std::string& name);

struct ScanConfig {
  double velocity_mm_s = 25.0;
  Direction direction = Direction::Positive;
  double preload_depth_um = 30.0;
  double duration_s = 2.0;
  double sim_rate_hz = 20000.0;
  double output_rate_hz = 5000.0;
  /// Tip centre at t = 0; defaults to the near edge of the surface for the scan direction.
  std::optional<double> start_mm;
};

void validate(const ScanConfig& scan);

/// Magnet centre displacement from its rest pose, sensor frame (+z points from
/// the magnetometer die toward the magnet).
struct MagnetTrajectory {
  double rate_hz = 0.0;
  std::vector<double> times_s;
  std::vector<double> x_um;
  std::vector<double> z_um;
  std::vector<double> theta_mrad;

  std::size_t size() const noexcept { return times_s.size(); }
};

/// Base-excited three-DOF response of the magnet while the tip slides over the
/// surface at constant velocity. Fixed-step RK4 at sim_rate, sampled every
/// sim_rate/output_rate steps.
MagnetTrajectory simulate_scan(const TipGeometry& tip, const ElastomerStack& stack,
                               const surface::SurfaceProfile& surface, const ScanConfig& scan,
                               double magnet_size_mm = 2.0, const ModelConstants& constants = {});

/// Surface length needed for a scan of `scan` with this tip, plus `margin_mm` at both ends.
double required_length_mm(const TipGeometry& tip, const ScanConfig& scan, double margin_mm = 1.0);

void write_csv(const MagnetTrajectory& traj, std::ostream& out);
MagnetTrajectory read_trajectory_csv(std::istream& in);

}  // namespace tactile::mechanics
