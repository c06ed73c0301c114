#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tactile/features.hpp"

namespace tactile::learn {

struct KnnConfig {
  std::size_t k = 5;
};

/// Majority label among the k nearest rows (Euclidean). Rows at equal distance
/// are admitted in input order; a vote tie goes to the label with the smallest
/// mean neighbour distance, then to the lowest label.
int knn_predict(std::span<const std::vector<double>> train, std::span<const int> labels,
                std::span<const double> query, const KnnConfig& cfg = {});

int knn_predict(const features::LabeledDataset& train, const features::FeatureVector& query,
                const KnnConfig& cfg = {});

struct CvPlan {
  std::size_t folds = 5;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;

  std::size_t models() const noexcept { return folds * repeats; }
};

/// 5 folds x 10 repeats = 50 models.
CvPlan power_analysis_plan(std::uint64_t seed = 0);
/// 5 folds x 60 repeats = 300 models.
CvPlan velocity_split_plan(std::uint64_t seed = 0);
/// "power-analysis" or "velocity-split".
CvPlan plan_preset(const std::string& name, std::uint64_t seed = 0);

/// assignments[repeat][row] = fold. Per repeat and class, members are shuffled
/// with a seed derived from (plan.seed, repeat) and dealt round-robin, each
/// class continuing where the previous one stopped.
using FoldAssignments = std::vector<std::vector<std::size_t>>;

FoldAssignments stratified_folds(std::span<const int> labels, const CvPlan& plan);
FoldAssignments stratified_folds(const features::LabeledDataset& data, const CvPlan& plan);

struct ModelAccuracy {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  double accuracy = 0.0;
};

struct AccuracyDistribution {
  std::vector<ModelAccuracy> models;  ///< ordered by (repeat, fold)
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation
  /// Test predictions summed over all models, indexed by true label.
  std::vector<std::size_t> class_correct;
  std::vector<std::size_t> class_total;

  std::vector<double> accuracies() const;
};

AccuracyDistribution summarize(std::vector<ModelAccuracy> models);

/// Repeated stratified k-fold evaluation. Global mode normalizes once over all
/// rows; fold-safe mode fits on each training split only.
AccuracyDistribution evaluate(const features::LabeledDataset& data, const CvPlan& plan, const KnnConfig& cfg = {},
                              features::NormalizeMode mode = features::NormalizeMode::FoldSafe, unsigned jobs = 1);

struct AnovaResult {
  double f = 0.0;
  double p = 1.0;
  std::size_t df_between = 0;
  std::size_t df_within = 0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  double ms_within = 0.0;
};

AnovaResult anova_oneway(std::span<const std::vector<double>> groups);

/// Survival function of the F distribution.
double f_survival(double f, double df1, double df2);

struct TukeyPair {
  std::size_t i = 0;
  std::size_t j = 0;
  double mean_diff = 0.0;  ///< mean_j - mean_i
  double q = 0.0;
  double q_crit = 0.0;
  double p = 1.0;
  bool significant = false;
};

std::vector<TukeyPair> tukey_hsd(std::span<const std::vector<double>> groups, double alpha = 0.05);

/// CDF of the studentized range for k means and df degrees of freedom
/// (df = infinity allowed). Inner integral: composite 8-point Gauss-Legendre,
/// 32 panels over z in [-8, 8]. Outer integral over s = chi_df / sqrt(df):
/// 64 panels of 8 points between the 1e-15 tail quantiles.
double ptukey(double q, std::size_t k, double df);

/// Upper-alpha critical value: ptukey(q_crit) = 1 - alpha.
double qtukey_upper(double alpha, std::size_t k, double df);

}  // namespace tactile::learn
