#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tactile/dsp.hpp"
#include "tactile/magnetics.hpp"

namespace tactile::features {

inline constexpr std::size_t kFeatureCount = 66;
inline constexpr std::size_t kPerAxis = 22;
inline constexpr const char* kLayoutVersion = "tactile-features/1";

// Offsets inside one axis block.
inline constexpr std::size_t kTimeOffset = 0;       // mean, p2p, std, skew, kurt
inline constexpr std::size_t kSpectrumOffset = 5;   // centroid_f, std_f, skew_f, kurt_f, centroid_p, std_p, skew_p, kurt_p
inline constexpr std::size_t kPeakOffset = 13;      // count, mean_f, std_f, skew_f, kurt_f, mean_p, std_p, skew_p, kurt_p

enum class Unit { FieldLsb, FrequencyHz, PowerLsb, Dimensionless, Count };

std::string to_string(Unit unit);

struct UnitGroup {
  Unit unit;
  std::vector<std::size_t> slots;
};

/// Column names, `<axis>_<family>_<stat>`.
const std::array<std::string, kFeatureCount>& slot_names();
Unit slot_unit(std::size_t slot);
/// The five groups, partitioning all slots, in `Unit` order.
const std::vector<UnitGroup>& unit_groups();

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  std::string layout = kLayoutVersion;
};

/// Population mean, std, skewness m3/m2^1.5 and Pearson kurtosis m4/m2^2;
/// skewness and kurtosis are 0 when the variance is 0.
struct Moments {
  double mean = 0.0, std = 0.0, skew = 0.0, kurt = 0.0;
};

Moments moments(std::span<const double> values);
Moments weighted_moments(std::span<const double> x, std::span<const double> weights);

/// mean, peak-to-peak, std, skewness, kurtosis. Needs at least 3 samples.
std::array<double, 5> time_features(std::span<const double> values);

struct SpectrumFeatures {
  std::array<double, 8> values{};
  bool zero_power = false;
};

SpectrumFeatures spectrum_features(const dsp::PowerSpectrum& spec);

/// count, then mean/std/skew/kurt over peak frequencies and over peak powers.
/// Skewness and kurtosis are 0 below four peaks.
std::array<double, 9> peak_features(std::span<const dsp::SpectralPeak> peaks);

struct PipelineParams {
  double resample_rate_hz = 5000.0;
  double target_rate_hz = 330.0;
  double highpass_hz = 2.0;
  double min_prominence = 2.0;  ///< LSB, on the unnormalized spectrum
  std::size_t max_peaks = 20;
};

void validate(const PipelineParams& params);

/// The conditioned single-axis series the features are computed from.
dsp::UniformSeries condition(std::span<const double> times_s, std::span<const double> values,
                             const PipelineParams& params);

FeatureVector extract(const magnetics::FieldSeries& field, const PipelineParams& params = {});

struct RowMeta {
  std::string run_id;
  std::string design;
  double velocity_mm_s = 0.0;
  std::string direction = "+x";
  int repetition = 0;
  int trial = 0;
};

struct Row {
  FeatureVector features;
  int label = 0;
  RowMeta meta;
};

struct LabeledDataset {
  std::vector<std::string> class_names;  ///< label -> name
  std::vector<Row> rows;

  std::size_t size() const noexcept { return rows.size(); }
  std::size_t class_count() const noexcept { return class_names.size(); }
};

/// Label range and a single layout version across rows.
void validate(const LabeledDataset& data);

enum class NormalizeMode { Global, FoldSafe };

std::string to_string(NormalizeMode mode);
NormalizeMode normalize_mode_from_string(const std::string& name);

/// Per-unit-group min/max fitted jointly over all member slots of the fit rows.
class Normalizer {
 public:
  static Normalizer fit(const LabeledDataset& data, std::span<const std::size_t> fit_rows);

  /// Affine map to [0, 1] on the fit rows; degenerate groups map to 0.5.
  FeatureVector apply(const FeatureVector& v, bool clamp = false) const;

  double group_min(Unit u) const { return min_[static_cast<std::size_t>(u)]; }
  double group_max(Unit u) const { return max_[static_cast<std::size_t>(u)]; }

 private:
  std::array<double, 5> min_{};
  std::array<double, 5> max_{};
};

LabeledDataset normalize(const LabeledDataset& data, std::span<const std::size_t> fit_rows, bool clamp = false);

/// One row per pass: meta columns, `label`, `class`, then the 66 features.
/// Doubles are written in shortest round-trip form so a reread table is bitwise equal.
void write_table(const LabeledDataset& data, std::ostream& out, const std::vector<std::string>& comments = {});
LabeledDataset read_table(std::istream& in);

}  // namespace tactile::features
