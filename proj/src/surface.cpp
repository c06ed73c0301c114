#include "tactile/surface.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "tactile/error.hpp"
#include "tactile/random.hpp"

namespace tactile::surface {

namespace {

void check_sinusoid(const Sinusoid& s) {
  if (!(s.wavelength_mm > 0.0) || !std::isfinite(s.wavelength_mm)) {
    throw Error(ErrorCode::InvalidSpec, "wavelength must be positive");
  }
  if (!(s.amplitude_um >= 0.0) || !std::isfinite(s.amplitude_um)) {
    throw Error(ErrorCode::InvalidSpec, "amplitude must be non-negative");
  }
}

std::vector<double> sinusoid_heights(const std::vector<Sinusoid>& parts, std::size_t n,
                                     double spacing) {
  std::vector<double> h(n, 0.0);
  for (const auto& s : parts) {
    const double k = 2.0 * std::numbers::pi / s.wavelength_mm;
    for (std::size_t i = 0; i < n; ++i) {
      h[i] += s.amplitude_um * std::sin(k * static_cast<double>(i) * spacing + s.phase_rad);
    }
  }
  return h;
}

std::vector<double> stochastic_heights(const Stochastic& s, std::size_t n, double resolution) {
  const auto width =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(s.correlation_length_mm * resolution)));
  std::mt19937_64 gen(s.seed);
  std::vector<double> noise(n + width - 1);
  for (auto& v : noise) v = rng::normal(gen);

  std::vector<double> h(n);
  double window = 0.0;
  for (std::size_t i = 0; i < width; ++i) window += noise[i];
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) window += noise[i + width - 1] - noise[i - 1];
    h[i] = window / static_cast<double>(width);
  }

  double mean = 0.0;
  for (double v : h) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double& v : h) {
    v -= mean;
    ss += v * v;
  }
  const double rms = std::sqrt(ss / static_cast<double>(n));
  const double scale = rms > 0.0 ? s.rms_um / rms : 0.0;
  for (double& v : h) v *= scale;
  return h;
}

}  // namespace

SurfaceProfile::SurfaceProfile(double length_mm, std::vector<double> heights_um)
    : length_mm_(length_mm), heights_(std::move(heights_um)) {
  if (!(length_mm_ > 0.0) || !std::isfinite(length_mm_)) {
    throw Error(ErrorCode::InvalidSpec, "surface length must be positive");
  }
  if (heights_.size() < 2) throw Error(ErrorCode::InvalidSpec, "surface needs at least 2 samples");
}

void validate(const SurfaceSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Sinusoid>) {
          check_sinusoid(s);
        } else if constexpr (std::is_same_v<T, SinusoidSum>) {
          for (const auto& c : s.components) check_sinusoid(c);
        } else {
          if (!(s.correlation_length_mm > 0.0)) {
            throw Error(ErrorCode::InvalidSpec, "correlation length must be positive");
          }
          if (!(s.rms_um >= 0.0)) throw Error(ErrorCode::InvalidSpec, "rms amplitude must be non-negative");
        }
      },
      spec);
}

SurfaceProfile generate_surface(const SurfaceSpec& spec, double length_mm, double resolution_per_mm) {
  validate(spec);
  if (!(length_mm > 0.0) || !std::isfinite(length_mm)) {
    throw Error(ErrorCode::InvalidSpec, "surface length must be positive");
  }
  if (!(resolution_per_mm >= kMinResolutionPerMm)) {
    throw Error(ErrorCode::InvalidSpec, "resolution below 50 samples/mm");
  }
  const auto n = static_cast<std::size_t>(std::llround(length_mm * resolution_per_mm));
  if (n < 2) throw Error(ErrorCode::InvalidSpec, "surface shorter than two samples");
  const double spacing = length_mm / static_cast<double>(n - 1);

  std::vector<double> heights = std::visit(
      [&](const auto& s) -> std::vector<double> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Sinusoid>) {
          return sinusoid_heights({s}, n, spacing);
        } else if constexpr (std::is_same_v<T, SinusoidSum>) {
          return sinusoid_heights(s.components, n, spacing);
        } else {
          return stochastic_heights(s, n, static_cast<double>(n) / length_mm);
        }
      },
      spec);
  return SurfaceProfile(length_mm, std::move(heights));
}

SurfaceProfile superpose(const SurfaceProfile& a, const SurfaceProfile& b) {
  if (a.heights().size() != b.heights().size() || a.length_mm() != b.length_mm()) {
    throw Error(ErrorCode::DimensionMismatch, "superposed profiles must share a grid");
  }
  std::vector<double> h(a.heights());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] += b.heights()[i];
  return SurfaceProfile(a.length_mm(), std::move(h));
}

double sample_height(const SurfaceProfile& profile, double x_mm) {
  if (!(x_mm >= 0.0) || x_mm > profile.length_mm()) {
    throw Error(ErrorCode::OutOfRange, "x outside profile");
  }
  const auto& h = profile.heights();
  const double pos = x_mm / profile.spacing_mm();
  const auto i = std::min(static_cast<std::size_t>(pos), h.size() - 2);
  const double frac = pos - static_cast<double>(i);
  if (frac == 0.0) return h[i];
  return h[i] + (h[i + 1] - h[i]) * frac;
}

RoughnessMetrics roughness(const SurfaceProfile& profile) {
  const auto& h = profile.heights();
  double mean = 0.0;
  for (double v : h) mean += v;
  mean /= static_cast<double>(h.size());

  double mad = 0.0;
  for (double v : h) mad += std::abs(v - mean);
  mad /= static_cast<double>(h.size());

  const auto [lo, hi] = std::minmax_element(h.begin(), h.end());
  // Clamp rounding so ra <= rp <= rt holds for near-constant profiles.
  RoughnessMetrics m;
  m.rt_um = *hi - *lo;
  m.rp_um = std::clamp(*hi - mean, 0.0, m.rt_um);
  m.ra_um = std::min(mad, m.rp_um);
  return m;
}

void write_csv(const SurfaceProfile& profile, std::ostream& out) {
  out << "x_mm,height_um\n";
  char buf[64];
  for (std::size_t i = 0; i < profile.heights().size(); ++i) {
    auto r = std::to_chars(buf, buf + sizeof buf, profile.x_at(i));
    *r.ptr++ = ',';
    r = std::to_chars(r.ptr, buf + sizeof buf, profile.heights()[i]);
    out.write(buf, r.ptr - buf);
    out.put('\n');
  }
}

SurfaceProfile read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedInput, "empty surface CSV");
  std::vector<double> xs;
  std::vector<double> hs;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    double x = 0.0;
    double h = 0.0;
    char comma = 0;
    if (!(row >> x >> comma >> h) || comma != ',') {
      throw Error(ErrorCode::MalformedInput, "bad surface row at line " + std::to_string(lineno));
    }
    xs.push_back(x);
    hs.push_back(h);
  }
  if (xs.size() < 2) throw Error(ErrorCode::MalformedInput, "surface CSV needs at least 2 rows");
  return SurfaceProfile(xs.back() - xs.front(), std::move(hs));
}

}  // namespace tactile::surface
