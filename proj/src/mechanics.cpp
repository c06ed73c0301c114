#include "tactile/mechanics.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "tactile/error.hpp"

namespace tactile::mechanics {

namespace {

constexpr double kPsiToPa = 6894.757293168361;

void require(bool ok, ErrorCode code, const char* what) {
  if (!ok) throw Error(code, what);
}

double ridge_recess_um(const TipGeometry& tip, double u_mm) {
  const double period = tip.ridge_wavelength_um * 1e-3;
  const double d = std::abs(u_mm - std::round(u_mm / period) * period) * 1e3;  // um from ridge centre
  const double top_half = 0.5 * tip.ridge_top_fraction * tip.ridge_width_um;
  const double base_half = 0.5 * tip.ridge_width_um;
  if (d <= top_half) return 0.0;
  if (d >= base_half) return tip.ridge_depth_um;
  return tip.ridge_depth_um * (d - top_half) / (base_half - top_half);
}

}  // namespace

std::string to_string(TipKind kind) {
  switch (kind) {
    case TipKind::Flat: return "flat";
    case TipKind::FlatRidged: return "flat-ridged";
    case TipKind::SphericalRidged: return "spherical-ridged";
  }
  return "flat";
}

TipKind tip_kind_from_string(const std::string& name) {
  if (name == "flat") return TipKind::Flat;
  if (name == "flat-ridged") return TipKind::FlatRidged;
  if (name == "spherical-ridged") return TipKind::SphericalRidged;
  throw Error(ErrorCode::InvalidArgument, "unknown tip kind '" + name + "'");
}

std::string to_string(Direction d) { return d == Direction::Positive ? "+x" : "-x"; }

Direction direction_from_string(const std::string& name) {
  if (name == "+x" || name == "+" || name == "positive") return Direction::Positive;
  if (name == "-x" || name == "-" || name == "negative") return Direction::Negative;
  throw Error(ErrorCode::InvalidArgument, "unknown direction '" + name + "'");
}

TipGeometry TipGeometry::flat() { return TipGeometry{}; }

TipGeometry TipGeometry::flat_ridged() {
  TipGeometry t;
  t.kind = TipKind::FlatRidged;
  return t;
}

TipGeometry TipGeometry::spherical_ridged() {
  TipGeometry t;
  t.kind = TipKind::SphericalRidged;
  return t;
}

void validate(const TipGeometry& tip) {
  require(tip.contact_width_mm > 0.0, ErrorCode::InvalidArgument, "contact width must be positive");
  if (tip.kind != TipKind::Flat) {
    require(tip.ridge_width_um > 0.0 && tip.ridge_wavelength_um > tip.ridge_width_um,
            ErrorCode::InvalidArgument, "ridges need wavelength > width > 0");
    require(tip.ridge_depth_um >= 0.0, ErrorCode::InvalidArgument, "ridge depth must be non-negative");
    require(tip.ridge_top_fraction >= 0.0 && tip.ridge_top_fraction <= 1.0, ErrorCode::InvalidArgument,
            "ridge top fraction must lie in [0, 1]");
  }
  if (tip.kind == TipKind::SphericalRidged) {
    require(tip.sphere_radius_mm > 0.5 * tip.contact_width_mm, ErrorCode::InvalidArgument,
            "sphere radius must exceed half the contact width");
  }
}

double tip_recess_um(const TipGeometry& tip, double u_mm) {
  switch (tip.kind) {
    case TipKind::Flat: return 0.0;
    case TipKind::FlatRidged: return ridge_recess_um(tip, u_mm);
    case TipKind::SphericalRidged: {
      const double r = tip.sphere_radius_mm;
      const double sag = r - std::sqrt(std::max(0.0, r * r - u_mm * u_mm));
      return ridge_recess_um(tip, u_mm) + sag * 1e3;
    }
  }
  return 0.0;
}

void validate(const ElastomerStack& s) {
  require(s.epidermis_thickness_mm > 0.0 && s.dermis_thickness_mm > 0.0 && s.epidermis_modulus_psi > 0.0 &&
              s.dermis_modulus_psi > 0.0,
          ErrorCode::InvalidArgument, "elastomer layers need positive thickness and modulus");
}

SuspensionParams suspension_params(const ElastomerStack& stack, const TipGeometry& tip,
                                   double magnet_size_mm, const ModelConstants& c) {
  validate(stack);
  validate(tip);
  require(magnet_size_mm > 0.0, ErrorCode::InvalidArgument, "magnet size must be positive");

  const double t_epi = stack.epidermis_thickness_mm * 1e-3;
  const double t_der = stack.dermis_thickness_mm * 1e-3;
  const double t_total = t_epi + t_der;
  const double e_epi = stack.epidermis_modulus_psi * kPsiToPa;
  const double e_der = stack.dermis_modulus_psi * kPsiToPa;
  const double e_series = t_total / (t_epi / e_epi + t_der / e_der);

  const double side = magnet_size_mm * 1e-3;
  const double bearing_area = c.shape_factor * side * side;

  SuspensionParams p;
  p.k_z = e_series * bearing_area / t_total;
  p.k_x = p.k_z * c.lateral_stiffness_ratio;
  p.k_theta = p.k_z * (side / 2.0) * (side / 2.0);
  p.m_eff = c.magnet_density_kg_m3 * side * side * side * (1.0 + c.mass_participation);
  p.inertia = p.m_eff * side * side / 6.0;
  p.zeta = c.damping_ratio;
  return p;
}

ContactModel::ContactModel(const TipGeometry& tip, double preload_um, double spacing_mm,
                           double tilt_limit_mrad)
    : half_width_(0.5 * tip.contact_width_mm), preload_(preload_um), tilt_limit_(tilt_limit_mrad) {
  validate(tip);
  require(preload_um >= 0.0, ErrorCode::InvalidArgument, "preload must be non-negative");
  require(spacing_mm > 0.0, ErrorCode::InvalidArgument, "contact spacing must be positive");

  // Even number of intervals so the sample set is symmetric and contains u = 0.
  auto half = static_cast<long>(std::ceil(half_width_ / spacing_mm));
  half = std::max(half, 1L);
  const double step = half_width_ / static_cast<double>(half);
  offsets_.reserve(static_cast<std::size_t>(2 * half + 1));
  for (long i = -half; i <= half; ++i) offsets_.push_back(static_cast<double>(i) * step);
  recess_.reserve(offsets_.size());
  for (double u : offsets_) recess_.push_back(tip_recess_um(tip, u));
  for (double r : recess_) target_ += std::max(0.0, preload_ - r);
}

ContactState ContactModel::evaluate(const surface::SurfaceProfile& surf, double x_center_mm,
                                    std::optional<double> hint) const {
  const double lo = x_center_mm - half_width_;
  const double hi = x_center_mm + half_width_;
  const double slack = 1e-9 * std::max(1.0, surf.length_mm());
  if (lo < -slack || hi > surf.length_mm() + slack) {
    throw Error(ErrorCode::PatchOutsideSurface, "contact patch [" + std::to_string(lo) + ", " +
                                                    std::to_string(hi) + "] mm leaves the surface");
  }

  const auto& h = surf.heights();
  const double inv_dx = 1.0 / surf.spacing_mm();
  const std::size_t n = offsets_.size();
  thread_local std::vector<double> s;
  s.resize(n);
  double smax = -HUGE_VAL;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::clamp(x_center_mm + offsets_[i], 0.0, surf.length_mm());
    const double pos = x * inv_dx;
    const auto j = std::min(static_cast<std::size_t>(pos), h.size() - 2);
    const double frac = pos - static_cast<double>(j);
    s[i] = h[j] + (h[j + 1] - h[j]) * frac - recess_[i];
    smax = std::max(smax, s[i]);
  }

  double z = smax;
  if (target_ > 0.0) {
    // F(z) = sum max(0, s - z) is convex, decreasing and piecewise linear, so
    // Newton converges monotonically after the first step and terminates once
    // the active set stops changing.
    z = hint.value_or(smax - preload_);
    for (int iter = 0; iter < 200; ++iter) {
      double force = 0.0;
      std::size_t active = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = s[i] - z;
        if (d > 0.0) {
          force += d;
          ++active;
        }
      }
      if (active == 0) {
        z = smax - target_;
        continue;
      }
      const double dz = (force - target_) / static_cast<double>(active);
      z += dz;
      if (std::abs(dz) <= 1e-13 * (1.0 + std::abs(z))) break;
    }
  }

  // Moment balance, paired symmetric terms so an even load gives exactly zero.
  double moment = 0.0;
  double inertia = 0.0;
  const std::size_t mid = n / 2;
  for (std::size_t i = 0; i < mid; ++i) {
    const std::size_t k = n - 1 - i;
    const double dl = std::max(0.0, s[i] - z);
    const double dr = std::max(0.0, s[k] - z);
    moment += offsets_[k] * (dr - dl);
    inertia += offsets_[k] * offsets_[k] * ((dl > 0.0 ? 1.0 : 0.0) + (dr > 0.0 ? 1.0 : 0.0));
  }
  double tilt = inertia > 0.0 ? moment / inertia : 0.0;  // um per mm == mrad
  tilt = std::clamp(tilt, -tilt_limit_, tilt_limit_);
  return {z, tilt};
}

ContactState contact_envelope(const TipGeometry& tip, const surface::SurfaceProfile& surf,
                              double x_center_mm, double preload_depth_um) {
  const ContactModel model(tip, preload_depth_um, surf.spacing_mm());
  return model.evaluate(surf, x_center_mm);
}

void validate(const ScanConfig& scan) {
  require(scan.velocity_mm_s > 0.0, ErrorCode::InvalidArgument, "velocity must be positive");
  require(scan.duration_s > 0.0, ErrorCode::InvalidArgument, "duration must be positive");
  require(scan.preload_depth_um >= 0.0, ErrorCode::InvalidArgument, "preload must be non-negative");
  require(scan.output_rate_hz >= 5000.0, ErrorCode::InvalidArgument, "output rate must be at least 5000 Hz");
  require(scan.sim_rate_hz >= 4.0 * scan.output_rate_hz, ErrorCode::InvalidArgument,
          "sim rate must be at least 4x the output rate");
  const double ratio = scan.sim_rate_hz / scan.output_rate_hz;
  require(std::abs(ratio - std::round(ratio)) < 1e-9, ErrorCode::InvalidArgument,
          "sim rate must be an integer multiple of the output rate");
}

double required_length_mm(const TipGeometry& tip, const ScanConfig& scan, double margin_mm) {
  return scan.velocity_mm_s * scan.duration_s + tip.contact_width_mm + 2.0 * margin_mm;
}

MagnetTrajectory simulate_scan(const TipGeometry& tip, const ElastomerStack& stack,
                               const surface::SurfaceProfile& surf, const ScanConfig& scan,
                               double magnet_size_mm, const ModelConstants& constants) {
  validate(scan);
  validate(tip);
  const double travel = scan.velocity_mm_s * scan.duration_s;
  if (travel > surf.length_mm() - tip.contact_width_mm + 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "scan travel exceeds surface length minus contact width");
  }

  const double sign = scan.direction == Direction::Positive ? 1.0 : -1.0;
  const double half = 0.5 * tip.contact_width_mm;
  const double x0 = scan.start_mm.value_or(sign > 0 ? half : surf.length_mm() - half);
  const double x_end = x0 + sign * travel;
  if (std::min(x0, x_end) - half < -1e-9 || std::max(x0, x_end) + half > surf.length_mm() + 1e-9) {
    throw Error(ErrorCode::PatchOutsideSurface, "scan path leaves the surface");
  }

  const auto ratio = static_cast<std::size_t>(std::llround(scan.sim_rate_hz / scan.output_rate_hz));
  const auto out_count = static_cast<std::size_t>(std::floor(scan.duration_s * scan.output_rate_hz + 1e-9)) + 1;
  const std::size_t steps = (out_count - 1) * ratio;
  const double dt = 1.0 / scan.sim_rate_hz;

  // Envelope at every integration node; inputs are piecewise linear between nodes.
  const ContactModel contact(tip, scan.preload_depth_um, surf.spacing_mm(), constants.tilt_limit_mrad);
  std::vector<double> zb(steps + 1);
  std::vector<double> tilt(steps + 1);
  std::optional<double> hint;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double x = std::clamp(x0 + sign * scan.velocity_mm_s * static_cast<double>(k) * dt, half,
                                surf.length_mm() - half);
    const auto c = contact.evaluate(surf, x, hint);
    zb[k] = c.z_base_um;
    tilt[k] = c.tilt_mrad;
    hint = c.z_base_um;
  }
  double zb_mean = 0.0;
  for (double v : zb) zb_mean += v;
  zb_mean /= static_cast<double>(zb.size());

  const auto p = suspension_params(stack, tip, magnet_size_mm, constants);
  const double c_z = 2.0 * p.zeta * std::sqrt(p.k_z * p.m_eff);
  const double c_x = 2.0 * p.zeta * std::sqrt(p.k_x * p.m_eff);
  const double c_t = 2.0 * p.zeta * std::sqrt(p.k_theta * p.inertia);
  const double preload_m = scan.preload_depth_um * 1e-6;

  // Base inputs in SI: z pushed toward the die by preload plus envelope excursion,
  // friction drag opposing motion, rotation following the tip tilt.
  auto uz = [&](std::size_t k) { return -(preload_m + (zb[k] - zb_mean) * 1e-6); };
  auto fx = [&](std::size_t k) {
    return -sign * constants.friction_coefficient * p.k_z * (zb[k] - zb_mean) * 1e-6;
  };
  auto ut = [&](std::size_t k) { return tilt[k] * 1e-3; };

  struct State {
    double z, vz, x, vx, t, vt;
  };
  struct Input {
    double uz, duz, fx, ut, dut;
  };
  auto deriv = [&](const State& s, const Input& in) {
    return State{s.vz,
                 (-p.k_z * (s.z - in.uz) - c_z * (s.vz - in.duz)) / p.m_eff,
                 s.vx,
                 (-p.k_x * s.x - c_x * s.vx + in.fx) / p.m_eff,
                 s.vt,
                 (-p.k_theta * (s.t - in.ut) - c_t * (s.vt - in.dut)) / p.inertia};
  };
  auto axpy = [](const State& s, const State& d, double h) {
    return State{s.z + h * d.z, s.vz + h * d.vz, s.x + h * d.x, s.vx + h * d.vx, s.t + h * d.t, s.vt + h * d.vt};
  };

  State st{uz(0), 0.0, fx(0) / p.k_x, 0.0, ut(0), 0.0};

  MagnetTrajectory traj;
  traj.rate_hz = scan.output_rate_hz;
  traj.times_s.reserve(out_count);
  traj.x_um.reserve(out_count);
  traj.z_um.reserve(out_count);
  traj.theta_mrad.reserve(out_count);
  auto emit = [&](std::size_t out_index) {
    traj.times_s.push_back(static_cast<double>(out_index) / scan.output_rate_hz);
    traj.x_um.push_back(st.x * 1e6);
    traj.z_um.push_back(st.z * 1e6);
    traj.theta_mrad.push_back(st.t * 1e3);
  };
  emit(0);

  for (std::size_t k = 0; k < steps; ++k) {
    const double duz = (uz(k + 1) - uz(k)) / dt;
    const double dut = (ut(k + 1) - ut(k)) / dt;
    const Input a{uz(k), duz, fx(k), ut(k), dut};
    const Input m{0.5 * (uz(k) + uz(k + 1)), duz, 0.5 * (fx(k) + fx(k + 1)), 0.5 * (ut(k) + ut(k + 1)), dut};
    const Input b{uz(k + 1), duz, fx(k + 1), ut(k + 1), dut};

    const State k1 = deriv(st, a);
    const State k2 = deriv(axpy(st, k1, dt / 2), m);
    const State k3 = deriv(axpy(st, k2, dt / 2), m);
    const State k4 = deriv(axpy(st, k3, dt), b);
    st.z += dt / 6 * (k1.z + 2 * k2.z + 2 * k3.z + k4.z);
    st.vz += dt / 6 * (k1.vz + 2 * k2.vz + 2 * k3.vz + k4.vz);
    st.x += dt / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    st.vx += dt / 6 * (k1.vx + 2 * k2.vx + 2 * k3.vx + k4.vx);
    st.t += dt / 6 * (k1.t + 2 * k2.t + 2 * k3.t + k4.t);
    st.vt += dt / 6 * (k1.vt + 2 * k2.vt + 2 * k3.vt + k4.vt);

    if (!std::isfinite(st.z) || !std::isfinite(st.x) || !std::isfinite(st.t)) {
      throw Error(ErrorCode::Diverged,
                  "integration diverged at t = " + std::to_string(static_cast<double>(k + 1) * dt) + " s");
    }
    if ((k + 1) % ratio == 0) emit((k + 1) / ratio);
  }
  return traj;
}

void write_csv(const MagnetTrajectory& traj, std::ostream& out) {
  out << "t_s,x_um,z_um,theta_mrad\n";
  char buf[128];
  for (std::size_t i = 0; i < traj.size(); ++i) {
    char* p = buf;
    char* end = buf + sizeof buf;
    for (double v : {traj.times_s[i], traj.x_um[i], traj.z_um[i], traj.theta_mrad[i]}) {
      if (p != buf) *p++ = ',';
      p = std::to_chars(p, end, v).ptr;
    }
    *p++ = '\n';
    out.write(buf, p - buf);
  }
}

MagnetTrajectory read_trajectory_csv(std::istream& in) {
  MagnetTrajectory traj;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("t_s,x_um,z_um,theta_mrad", 0) != 0) {
        throw Error(ErrorCode::MalformedInput, "unexpected trajectory header");
      }
      header = true;
      continue;
    }
    std::array<double, 4> v{};
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t f = 0; f < 4; ++f) {
      auto r = std::from_chars(p, end, v[f]);
      if (r.ec != std::errc{} || (f < 3 && (r.ptr == end || *r.ptr != ','))) {
        throw Error(ErrorCode::MalformedInput, "bad trajectory row at line " + std::to_string(lineno));
      }
      p = r.ptr + (f < 3 ? 1 : 0);
    }
    traj.times_s.push_back(v[0]);
    traj.x_um.push_back(v[1]);
    traj.z_um.push_back(v[2]);
    traj.theta_mrad.push_back(v[3]);
  }
  if (traj.size() >= 2) traj.rate_hz = static_cast<double>(traj.size() - 1) / (traj.times_s.back() - traj.times_s.front());
  return traj;
}

}  // namespace tactile::mechanics
