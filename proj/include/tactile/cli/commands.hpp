#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tactile/cli/config.hpp"
#include "tactile/features.hpp"
#include "tactile/magnetics.hpp"
#include "tactile/mechanics.hpp"

namespace tactile::cli {

inline constexpr const char* kFieldSchema = "tactile-field/1";
inline constexpr const char* kReportSchema = "tactile-report/1";

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitData = 3, kExitInternal = 4 };

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

/// One point of the simulation grid.
struct RunSpec {
  std::size_t design = 0;
  double wavelength_mm = 0.0;
  double amplitude_um = 0.0;
  double velocity_mm_s = 0.0;
  mechanics::Direction direction = mechanics::Direction::Positive;
  int repetition = 0;
  std::string run_id;  ///< unique within a design
  /// Shared by every design on the same grid point, so designs scan identical surfaces.
  std::uint64_t seed = 0;
};

/// Cartesian product in design, wavelength, amplitude, velocity, direction, repetition order.
std::vector<RunSpec> enumerate_runs(const ExperimentConfig& config);

std::string class_name(LabelBy label, double wavelength_mm, double amplitude_um);

/// Seeded sinusoid-plus-micro-roughness surface for a grid point.
surface::SurfaceProfile run_surface(const ExperimentConfig& config, const RunSpec& run);

struct SimulatedRun {
  mechanics::MagnetTrajectory trajectory;
  magnetics::FieldSeries field;
};

SimulatedRun simulate_run(const ExperimentConfig& config, const RunSpec& run);

/// Hash over everything that affects simulation outputs (not the pipeline or CV settings).
std::string simulation_hash(const ExperimentConfig& config);

struct CommandOptions {
  std::filesystem::path out = "out";
  unsigned jobs = 1;
  bool force = false;
  std::ostream* log = nullptr;  ///< progress and warnings; nullptr silences
};

struct CommandResult {
  int exit_code = kExitOk;
  std::size_t processed = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
  std::vector<std::string> warnings;
};

/// Writes sim/<design>/<run_id>.field.csv and .traj.csv. Runs whose field file
/// already carries the current simulation hash are skipped unless `force`.
CommandResult cmd_simulate(const ExperimentConfig& config, const CommandOptions& opts);

/// One feature table per design under features/, from the simulated runs of the
/// config and every pass listed in ingest/passes.csv. Unreadable inputs are
/// listed in features/errors.txt and skipped.
CommandResult cmd_features(const ExperimentConfig& config, const CommandOptions& opts);

/// Cross-validated accuracies per (design, velocity, normalize mode), pooled
/// over velocities as well, with ANOVA and Tukey comparisons across designs.
/// Writes reports/{accuracy,summary,per_class,stats}.csv and SVG box plots.
CommandResult cmd_classify(const ExperimentConfig& config, const CommandOptions& opts);

/// Segments every session of the manifest into passes under ingest/.
CommandResult cmd_ingest(const ExperimentConfig& config, const std::filesystem::path& manifest,
                         const CommandOptions& opts);

/// Re-renders the SVG box plots from reports/accuracy.csv.
CommandResult cmd_report(const ExperimentConfig& config, const CommandOptions& opts);

// -- file helpers ------------------------------------------------------------

/// Writes through a temporary sibling and renames into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// `#key=value` comment lines as a map (other comments are ignored).
std::map<std::string, std::string> comment_fields(const std::vector<std::string>& comments);

std::string format_number(double v);

/// Reads a field CSV and checks its schema comment.
magnetics::FieldCsv load_field_file(const std::filesystem::path& path);

}  // namespace tactile::cli
