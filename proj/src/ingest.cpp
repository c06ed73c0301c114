#include "tactile/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "tactile/dsp.hpp"
#include "tactile/error.hpp"

namespace tactile::ingest {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_field(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc{} && r.ptr == s.data() + s.size();
}

std::optional<LogRecord> parse_line(std::string_view line, std::string& why) {
  std::string_view cells[6];
  std::size_t count = 0;
  while (true) {
    const auto comma = line.find(',');
    if (count == 6) {
      why = "too many fields";
      return std::nullopt;
    }
    cells[count++] = line.substr(0, comma);
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  if (count != 6) {
    why = "expected 6 fields, got " + std::to_string(count);
    return std::nullopt;
  }
  LogRecord r;
  if (!parse_field(cells[0], r.t_s) || !parse_field(cells[1], r.x_enc_um) || !parse_field(cells[2], r.z_enc_um) ||
      !parse_field(cells[3], r.bx) || !parse_field(cells[4], r.by) || !parse_field(cells[5], r.bz)) {
    why = "unparseable field";
    return std::nullopt;
  }
  if (!std::isfinite(r.t_s) || !std::isfinite(r.x_enc_um) || !std::isfinite(r.z_enc_um)) {
    why = "non-finite value";
    return std::nullopt;
  }
  return r;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

ParsedLog parse_log(std::string_view bytes) {
  ParsedLog out;
  std::size_t lineno = 0;
  std::size_t data_lines = 0;
  bool seen_data = false;
  while (!bytes.empty()) {
    const auto nl = bytes.find('\n');
    auto line = bytes.substr(0, nl);
    bytes = nl == std::string_view::npos ? std::string_view{} : bytes.substr(nl + 1);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      out.comments.emplace_back(line.substr(1));
      continue;
    }
    if (!seen_data && trim(line) == kLogHeader) {
      seen_data = true;
      continue;
    }
    seen_data = true;
    ++data_lines;
    std::string why;
    auto rec = parse_line(line, why);
    if (rec && !out.records.empty() && rec->t_s < out.records.back().t_s) {
      rec.reset();
      why = "time goes backwards";
    }
    if (rec) {
      out.records.push_back(*rec);
    } else {
      out.diagnostics.push_back({lineno, why});
    }
  }
  if (out.diagnostics.size() * 100 > data_lines) {
    std::string lines;
    for (std::size_t i = 0; i < out.diagnostics.size() && i < 20; ++i) {
      lines += (i ? ", " : "") + std::to_string(out.diagnostics[i].line);
    }
    if (out.diagnostics.size() > 20) lines += ", ...";
    throw Error(ErrorCode::MalformedInput, std::to_string(out.diagnostics.size()) + " of " +
                                               std::to_string(data_lines) + " lines malformed (lines " + lines + ")");
  }
  return out;
}

void write_log(std::span<const LogRecord> records, std::ostream& out, const std::vector<std::string>& comments) {
  out << '#' << kLogSchema << '\n';
  for (const auto& c : comments) out << '#' << c << '\n';
  out << kLogHeader << '\n';
  char buf[160];
  for (const auto& r : records) {
    char* p = buf;
    char* end = buf + sizeof buf;
    p = std::to_chars(p, end, r.t_s).ptr;
    *p++ = ',';
    p = std::to_chars(p, end, r.x_enc_um).ptr;
    *p++ = ',';
    p = std::to_chars(p, end, r.z_enc_um).ptr;
    for (auto v : {r.bx, r.by, r.bz}) {
      *p++ = ',';
      p = std::to_chars(p, end, v).ptr;
    }
    *p++ = '\n';
    out.write(buf, p - buf);
  }
}

std::optional<std::size_t> detect_contact(std::span<const double> z_field, const ContactParams& params) {
  if (params.baseline == 0) throw Error(ErrorCode::InvalidArgument, "baseline window must be non-empty");
  if (z_field.size() < params.baseline) {
    throw Error(ErrorCode::TooShort, "contact detection needs " + std::to_string(params.baseline) + " baseline samples");
  }
  double base = 0.0;
  for (std::size_t i = 0; i < params.baseline; ++i) base += z_field[i];
  base /= static_cast<double>(params.baseline);
  const auto smooth = dsp::ema(z_field, params.alpha);
  for (std::size_t i = 0; i < smooth.size(); ++i) {
    if (std::abs(smooth[i] - base) >= params.threshold_lsb) return i;
  }
  return std::nullopt;
}

double measured_velocity_mm_s(std::span<const LogRecord> records) {
  if (records.size() < 2) throw Error(ErrorCode::TooShort, "velocity fit needs two records");
  const double n = static_cast<double>(records.size());
  double mt = 0.0, mx = 0.0;
  for (const auto& r : records) {
    mt += r.t_s;
    mx += r.x_enc_um;
  }
  mt /= n;
  mx /= n;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& r : records) {
    sxy += (r.t_s - mt) * (r.x_enc_um - mx);
    sxx += (r.t_s - mt) * (r.t_s - mt);
  }
  if (sxx == 0.0) throw Error(ErrorCode::Degenerate, "records share one timestamp");
  return sxy / sxx / 1000.0;
}

Segmentation segment_passes(std::span<const LogRecord> records, const SessionMeta& meta, const SegmentParams& params) {
  Segmentation out;
  const std::size_t n = records.size();
  auto x = [&](std::size_t i) { return records[i].x_enc_um; };

  // Monotone runs between reversals, as inclusive [first, last] index pairs.
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  if (n >= 2) {
    std::size_t start = 0;
    std::size_t ext = 0;
    int dir = 0;
    std::size_t lo = 0, hi = 0;  // running extrema before a direction is known
    for (std::size_t i = 1; i < n; ++i) {
      if (dir == 0) {
        if (x(i) < x(lo)) lo = i;
        if (x(i) > x(hi)) hi = i;
        if (x(hi) - x(lo) > params.reversal_hysteresis_um) {
          dir = hi > lo ? 1 : -1;
          start = dir > 0 ? lo : hi;
          ext = i;
        }
        continue;
      }
      if ((x(i) - x(ext)) * dir > 0.0) {
        ext = i;
      } else if ((x(ext) - x(i)) * dir > params.reversal_hysteresis_um) {
        runs.emplace_back(start, ext);
        start = ext;
        dir = -dir;
        ext = start;
        for (std::size_t j = start + 1; j <= i; ++j) {
          if ((x(j) - x(ext)) * dir > 0.0) ext = j;
        }
      }
    }
    if (dir != 0) runs.emplace_back(start, ext);
  }

  for (auto [a, b] : runs) {
    while (a < b && x(a + 1) == x(a)) ++a;
    while (b > a && x(b - 1) == x(b)) --b;
    const double travel = std::abs(x(b) - x(a));
    const double duration = records[b].t_s - records[a].t_s;
    if (travel < params.min_travel_um) {
      out.flags.push_back("traversal at records " + std::to_string(a) + ".." + std::to_string(b) + " travels only " +
                          std::to_string(travel) + " um");
      continue;
    }
    if (!(duration > params.min_duration_s)) {
      out.flags.push_back("traversal at records " + std::to_string(a) + ".." + std::to_string(b) + " lasts only " +
                          std::to_string(duration) + " s");
      continue;
    }
    Pass p;
    p.begin = a;
    p.end = b + 1;
    p.meta = meta;
    const auto slice = records.subspan(a, b + 1 - a);
    p.measured_velocity_mm_s = measured_velocity_mm_s(slice);
    p.direction = p.measured_velocity_mm_s >= 0.0 ? mechanics::Direction::Positive : mechanics::Direction::Negative;
    const double speed = std::abs(p.measured_velocity_mm_s);
    if (meta.velocity_mm_s > 0.0 &&
        std::abs(speed - meta.velocity_mm_s) > params.velocity_tolerance * meta.velocity_mm_s) {
      p.velocity_flag = true;
      out.flags.push_back("pass " + std::to_string(out.passes.size()) + " measured " + std::to_string(speed) +
                          " mm/s against nominal " + std::to_string(meta.velocity_mm_s));
    }
    auto& f = p.field;
    f.meta = magnetics::Provenance::Ingested;
    for (const auto& r : slice) {
      f.times_s.push_back(r.t_s);
      f.bx.push_back(r.bx);
      f.by.push_back(r.by);
      f.bz.push_back(r.bz);
    }
    f.rate_hz = static_cast<double>(f.size() - 1) / duration;
    out.passes.push_back(std::move(p));
  }

  if (out.passes.empty()) out.flags.push_back("no pass found");
  if (meta.expected_passes > 0 && out.passes.size() < meta.expected_passes) {
    out.flags.push_back("found " + std::to_string(out.passes.size()) + " passes, expected " +
                        std::to_string(meta.expected_passes));
  }
  return out;
}

std::vector<LogRecord> wrap_field(const magnetics::FieldSeries& field, double x_start_um, double velocity_mm_s,
                                  double z_enc_um) {
  std::vector<LogRecord> out(field.size());
  const double t0 = field.size() ? field.times_s.front() : 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    out[i] = {field.times_s[i], x_start_um + velocity_mm_s * 1000.0 * (field.times_s[i] - t0), z_enc_um,
              field.bx[i], field.by[i], field.bz[i]};
  }
  return out;
}

Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  Manifest m;
  std::optional<ManifestEntry> current;
  std::vector<std::string> seen;
  std::size_t lineno = 0;

  auto where = [&] { return "manifest line " + std::to_string(lineno); };
  auto finish = [&] {
    if (!current) return;
    if (current->path.empty()) throw Error(ErrorCode::Config, "session ending before " + where() + " has no path");
    for (const char* k : {"design", "material", "velocity_mm_s"}) {
      if (std::find(seen.begin(), seen.end(), k) == seen.end()) {
        throw Error(ErrorCode::Config, "session " + current->path.string() + " is missing '" + k + "'");
      }
    }
    m.sessions.push_back(std::move(*current));
    current.reset();
  };

  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    if (line == "[session]") {
      finish();
      current.emplace();
      seen.clear();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::Config, where() + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    auto number = [&](auto& dst) {
      if (!parse_field(value, dst)) throw Error(ErrorCode::Config, where() + ": bad number for '" + key + "'");
    };

    if (!current) {
      if (key == "velocities") {
        m.velocities.clear();
        for (const auto& v : split_list(value)) {
          double d = 0.0;
          if (!parse_field(v, d)) throw Error(ErrorCode::Config, where() + ": bad velocity '" + v + "'");
          m.velocities.push_back(d);
        }
      } else if (key == "designs") {
        m.designs = split_list(value);
      } else if (key == "materials") {
        m.materials = split_list(value);
      } else {
        throw Error(ErrorCode::Config, where() + ": unknown top-level key '" + key + "'");
      }
      continue;
    }

    seen.push_back(key);
    auto& s = current->meta;
    if (key == "path") {
      std::filesystem::path p(value);
      current->path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    } else if (key == "design") {
      if (!m.designs.empty() && std::find(m.designs.begin(), m.designs.end(), value) == m.designs.end()) {
        throw Error(ErrorCode::Config, where() + ": design '" + value + "' is not declared");
      }
      s.design = value;
    } else if (key == "material") {
      if (!m.materials.empty() && std::find(m.materials.begin(), m.materials.end(), value) == m.materials.end()) {
        throw Error(ErrorCode::Config, where() + ": material '" + value + "' is not declared");
      }
      s.material = value;
    } else if (key == "velocity_mm_s") {
      number(s.velocity_mm_s);
      if (std::find(m.velocities.begin(), m.velocities.end(), s.velocity_mm_s) == m.velocities.end()) {
        throw Error(ErrorCode::Config, where() + ": velocity " + value + " is not in the declared set");
      }
    } else if (key == "direction") {
      s.direction = mechanics::to_string(mechanics::direction_from_string(value));
    } else if (key == "repetition") {
      number(s.repetition);
    } else if (key == "trial") {
      number(s.trial);
    } else if (key == "passes") {
      number(s.expected_passes);
    } else {
      throw Error(ErrorCode::Config, where() + ": unknown session key '" + key + "'");
    }
  }
  finish();
  return m;
}

}  // namespace tactile::ingest
