#include "tactile/magnetics.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "tactile/error.hpp"

namespace tactile::magnetics {

double MagnetModel::moment() const noexcept {
  const double side = edge_mm * 1e-3;
  return remanence_t * side * side * side / kMu0;
}

void validate(const MagnetModel& magnet) {
  if (!(magnet.edge_mm > 0.0) || !(magnet.remanence_t > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "magnet needs positive edge and remanence");
  }
  const auto& a = magnet.axis;
  if (std::abs(std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]) - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "magnet axis must be a unit vector");
  }
}

void validate(const MagnetometerLayout& layout, const MagnetModel& magnet) {
  if (!(layout.conversion_ut_per_lsb > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "conversion must be positive");
  }
  if (layout.resolution_bits < 2 || layout.resolution_bits > 30) {
    throw Error(ErrorCode::InvalidArgument, "resolution bits out of range");
  }
  const auto& p = layout.position_mm;
  if (std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) <= magnet.edge_mm / 2.0) {
    throw Error(ErrorCode::InvalidArgument, "magnetometer sits inside the magnet");
  }
}

std::string to_string(Provenance p) { return p == Provenance::Simulated ? "simulated" : "ingested"; }

Vec3 dipole_field(const MagnetModel& magnet, const Pose& pose, const Vec3& sensor_pos_mm) {
  // Displacement from the (moved) magnet centre to the sensor, metres.
  const Vec3 r{(sensor_pos_mm[0] - pose.x_um * 1e-3) * 1e-3, sensor_pos_mm[1] * 1e-3,
               (sensor_pos_mm[2] - pose.z_um * 1e-3) * 1e-3};
  const double dist = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
  if (dist < 0.5e-3) {
    throw Error(ErrorCode::SingularPosition, "sensor within 0.5 mm of the dipole");
  }

  const double theta = pose.theta_mrad * 1e-3;
  const double m = magnet.moment();
  const double c = std::cos(theta), sn = std::sin(theta);
  const auto& a = magnet.axis;
  const Vec3 mv{m * (a[0] * c + a[2] * sn), m * a[1], m * (a[2] * c - a[0] * sn)};
  const Vec3 rh{r[0] / dist, r[1] / dist, r[2] / dist};
  const double mdotr = mv[0] * rh[0] + mv[1] * rh[1] + mv[2] * rh[2];
  const double scale = kMu0 / (4.0 * 3.14159265358979323846) / (dist * dist * dist) * 1e6;  // T -> uT
  return {scale * (3.0 * rh[0] * mdotr - mv[0]), scale * (3.0 * rh[1] * mdotr - mv[1]),
          scale * (3.0 * rh[2] * mdotr - mv[2])};
}

Quantized quantize(const Vec3& b_ut, const MagnetometerLayout& layout) {
  Quantized q;
  const double bound = static_cast<double>(layout.saturation());
  for (std::size_t i = 0; i < 3; ++i) {
    double c = std::round(b_ut[i] / layout.conversion_ut_per_lsb);
    if (c > bound || c < -bound) {
      q.saturated = true;
      c = c > 0 ? bound : -bound;
    }
    q.counts[i] = static_cast<std::int32_t>(c);
  }
  return q;
}

FieldSeries trajectory_to_field(const mechanics::MagnetTrajectory& traj, const MagnetModel& magnet,
                                const MagnetometerLayout& layout) {
  validate(magnet);
  validate(layout, magnet);
  const std::size_t n = traj.size();
  if (traj.x_um.size() != n || traj.z_um.size() != n || traj.theta_mrad.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "trajectory series differ in length");
  }
  FieldSeries out;
  out.rate_hz = traj.rate_hz;
  out.meta = Provenance::Simulated;
  out.times_s = traj.times_s;
  out.bx.resize(n);
  out.by.resize(n);
  out.bz.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = dipole_field(magnet, {traj.x_um[i], traj.z_um[i], traj.theta_mrad[i]}, layout.position_mm);
    const auto q = quantize(b, layout);
    out.bx[i] = q.counts[0];
    out.by[i] = q.counts[1];
    out.bz[i] = q.counts[2];
    out.saturated = out.saturated || q.saturated;
  }
  return out;
}

void write_csv(const FieldSeries& series, std::ostream& out, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << '#' << c << '\n';
  out << "t_s,bx_lsb,by_lsb,bz_lsb\n";
  char buf[96];
  for (std::size_t i = 0; i < series.size(); ++i) {
    char* p = std::to_chars(buf, buf + sizeof buf, series.times_s[i]).ptr;
    for (auto v : {series.bx[i], series.by[i], series.bz[i]}) {
      *p++ = ',';
      p = std::to_chars(p, buf + sizeof buf, v).ptr;
    }
    *p++ = '\n';
    out.write(buf, p - buf);
  }
}

FieldCsv read_field_csv(std::istream& in) {
  FieldCsv result;
  auto& s = result.series;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      result.comments.push_back(line.substr(1));
      continue;
    }
    if (!header) {
      if (line != "t_s,bx_lsb,by_lsb,bz_lsb") {
        throw Error(ErrorCode::SchemaMismatch, "unexpected field CSV header '" + line + "'");
      }
      header = true;
      continue;
    }
    const char* p = line.data();
    const char* end = p + line.size();
    double t = 0.0;
    std::int32_t c[3]{};
    auto r = std::from_chars(p, end, t);
    bool ok = r.ec == std::errc{};
    p = r.ptr;
    for (int k = 0; ok && k < 3; ++k) {
      ok = p != end && *p == ',';
      if (!ok) break;
      auto ri = std::from_chars(p + 1, end, c[k]);
      ok = ri.ec == std::errc{};
      p = ri.ptr;
    }
    if (!ok || p != end) {
      throw Error(ErrorCode::MalformedInput, "bad field CSV row at line " + std::to_string(lineno));
    }
    s.times_s.push_back(t);
    s.bx.push_back(c[0]);
    s.by.push_back(c[1]);
    s.bz.push_back(c[2]);
  }
  if (!header) throw Error(ErrorCode::MalformedInput, "field CSV has no header");
  if (s.size() >= 2) {
    s.rate_hz = static_cast<double>(s.size() - 1) / (s.times_s.back() - s.times_s.front());
  }
  return result;
}

}  // namespace tactile::magnetics
