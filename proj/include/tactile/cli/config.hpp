#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tactile/features.hpp"
#include "tactile/magnetics.hpp"
#include "tactile/mechanics.hpp"

namespace tactile::cli {

struct DesignConfig {
  std::string id;
  mechanics::TipGeometry tip;
  mechanics::ElastomerStack stack;
  magnetics::MagnetModel magnet;
  magnetics::MagnetometerLayout layout;
};

/// Sinusoid grid. Every run also carries a seeded micro-roughness layer and a
/// seeded phase, so repetitions of one surface class differ.
struct SurfaceGrid {
  std::vector<double> wavelengths_mm;
  std::vector<double> amplitudes_um;
  double micro_rms_um = 1.0;
  double micro_correlation_mm = 0.03;
  double resolution_per_mm = 200.0;
};

struct ScanGrid {
  std::vector<double> velocities_mm_s;
  std::vector<mechanics::Direction> directions{mechanics::Direction::Positive};
  int repetitions = 3;
  double preload_depth_um = 30.0;
  double duration_s = 2.0;
  double sim_rate_hz = 20000.0;
  double output_rate_hz = 5000.0;
};

enum class LabelBy { Wavelength, Amplitude, Surface };

std::string to_string(LabelBy l);

struct ClassifyConfig {
  LabelBy label = LabelBy::Wavelength;
  std::size_t folds = 5;
  std::size_t repeats = 10;
  std::size_t k = 5;
  std::vector<features::NormalizeMode> normalize{features::NormalizeMode::FoldSafe, features::NormalizeMode::Global};
  double alpha = 0.05;
  std::vector<double> velocities_mm_s;  ///< per-velocity analyses; empty: every velocity present
};

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<DesignConfig> designs;
  SurfaceGrid surfaces;
  ScanGrid scan;
  features::PipelineParams pipeline;
  ClassifyConfig classify;
  std::optional<std::filesystem::path> manifest;
};

/// Parses the JSON config. Unknown keys and bad values raise Config errors
/// naming the offending key path, e.g. `/scan/velocities_mm_s/2`.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON (sorted keys, every field explicit).
std::string to_json(const ExperimentConfig& config);

/// 16 hex digits over the canonical JSON.
std::string config_hash(const ExperimentConfig& config);

/// "initial-survey", "wavelength-sweep", "amplitude-sweep": the three
/// simulation batches, with the flat and flat-ridged designs.
ExperimentConfig preset(const std::string& name, std::uint64_t seed = 1);
std::vector<std::string> preset_names();

/// Range checks that need the whole config (ids unique, grids valid).
void validate(const ExperimentConfig& config);

}  // namespace tactile::cli
