#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tactile/magnetics.hpp"
#include "tactile/mechanics.hpp"

namespace tactile::ingest {

inline constexpr const char* kLogSchema = "tactile-log/1";
inline constexpr const char* kLogHeader = "t_s,x_um,z_um,bx,by,bz";

struct LogRecord {
  double t_s = 0.0;
  double x_enc_um = 0.0;
  double z_enc_um = 0.0;
  std::int32_t bx = 0, by = 0, bz = 0;
};

struct Diagnostic {
  std::size_t line = 0;
  std::string message;
};

struct ParsedLog {
  std::vector<LogRecord> records;
  std::vector<std::string> comments;  ///< `#` lines without the marker
  std::vector<Diagnostic> diagnostics;
};

/// Parses `t_s,x_um,z_um,bx,by,bz` lines. The column header and `#` lines are
/// optional. Bad lines (wrong shape, non-finite values, time going backwards)
/// become diagnostics; more than 1% of data lines being bad rejects the file.
ParsedLog parse_log(std::string_view bytes);

void write_log(std::span<const LogRecord> records, std::ostream& out, const std::vector<std::string>& comments = {});

struct ContactParams {
  double alpha = 0.12;
  double threshold_lsb = 10.0;
  std::size_t baseline = 50;
};

/// First index where |ema(z) - mean(first `baseline` samples)| >= threshold,
/// or nothing if the threshold is never reached.
std::optional<std::size_t> detect_contact(std::span<const double> z_field, const ContactParams& params = {});

struct SessionMeta {
  std::string design;
  std::string material;
  double velocity_mm_s = 0.0;  ///< nominal
  std::string direction = "+x";  ///< direction of the first pass
  int repetition = 0;
  int trial = 0;
  std::size_t expected_passes = 0;  ///< 0 when not stated
};

struct SegmentParams {
  double min_travel_um = 1000.0;
  double min_duration_s = 0.2;
  double reversal_hysteresis_um = 50.0;
  double velocity_tolerance = 0.2;  ///< fraction of nominal
};

struct Pass {
  magnetics::FieldSeries field;
  SessionMeta meta;
  mechanics::Direction direction = mechanics::Direction::Positive;
  double measured_velocity_mm_s = 0.0;
  std::size_t begin = 0;  ///< record indices, inclusive
  std::size_t end = 0;    ///< exclusive
  bool velocity_flag = false;
};

struct Segmentation {
  std::vector<Pass> passes;
  std::vector<std::string> flags;
};

/// Splits records at encoder direction reversals. Dwell plateaus at either
/// end of a traversal are trimmed; traversals shorter than min_travel or
/// min_duration are dropped with a flag.
Segmentation segment_passes(std::span<const LogRecord> records, const SessionMeta& meta,
                            const SegmentParams& params = {});

/// Least-squares slope of x against t, in mm/s.
double measured_velocity_mm_s(std::span<const LogRecord> records);

/// Wraps a field record in a log with a linear encoder ramp.
std::vector<LogRecord> wrap_field(const magnetics::FieldSeries& field, double x_start_um, double velocity_mm_s,
                                  double z_enc_um = 0.0);

struct ManifestEntry {
  std::filesystem::path path;
  SessionMeta meta;
};

struct Manifest {
  std::vector<double> velocities{25.0, 50.0, 100.0, 150.0};
  std::vector<std::string> designs;    ///< empty: any
  std::vector<std::string> materials;  ///< empty: any
  std::vector<ManifestEntry> sessions;
};

/// Key-value text. Top-level keys `velocities`, `designs`, `materials`
/// declare the allowed values (comma separated); every `[session]` header
/// starts an entry with keys path, design, material, velocity_mm_s,
/// direction, repetition, trial and optionally passes. Relative paths resolve
/// against `base_dir`.
Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir = {});

}  // namespace tactile::ingest
