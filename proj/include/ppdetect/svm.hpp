#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppdetect/features.hpp"

namespace ppdetect {

struct TrainConfig {
  double c = 1.0;
  /// RBF width. The default 1/5 matches one-over-the-number-of-features
  /// for the full five-feature vector and is kept as-is for masked runs.
  double gamma = 0.2;
  /// Training stops once no multiplier pair violates the KKT conditions
  /// by more than this.
  double kkt_tol = 1e-3;
  /// Cap on working-pair optimization steps; exceeding it flags the model
  /// as non-converged instead of failing.
  long max_passes = 10000;
  int folds = 10;
  std::uint64_t seed = 1;
  /// Optional (c, gamma) candidates for cross_validate; empty means just
  /// the configured pair.
  std::vector<std::pair<double, double>> grid;
  /// Indices into FeatureVector; realizes the 2-/4-/5-feature ablations.
  std::vector<std::size_t> feature_mask = {0, 1, 2, 3, 4};
};

/// Per-feature min/max observed on the training set; features are mapped
/// to [0,1] on that range (test values may fall outside it and are scaled
/// linearly, not clamped). A constant feature scales to 0.
struct ScalingParams {
  std::vector<double> min;
  std::vector<double> max;
};

struct SvmModel {
  std::vector<std::vector<double>> support_vectors;  // scaled, masked
  std::vector<double> dual_coefs;                    // alpha_i * y_i
  double bias = 0.0;
  double gamma = 0.2;
  double c = 1.0;
  ScalingParams scaling;
  std::vector<std::size_t> feature_mask;
  bool converged = true;
};

struct Prediction {
  Label label;  // paid iff decision_value > 0
  double decision_value;
};

ScalingParams scale_fit(const std::vector<LabeledVector>& data,
                        const std::vector<std::size_t>& mask);
std::vector<double> scale_apply(const FeatureVector& v, const ScalingParams& scaling,
                                const std::vector<std::size_t>& mask);

/// exp(-gamma * |x - z|^2)
double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma);

/// Trains a C-SVC by sequential minimal optimization on the dual problem.
/// Deterministic for a fixed cfg.seed. Requires both classes present and
/// all rows labeled.
SvmModel train(const std::vector<LabeledVector>& data, const TrainConfig& cfg);

Prediction predict(const SvmModel& model, const FeatureVector& v);

/// Decision value for an already scaled+masked vector.
double decision_value(const SvmModel& model, std::span<const double> scaled);

/// Value of the dual objective at the model's multipliers.
double dual_objective(const SvmModel& model);

struct CvCandidate {
  double c = 0.0;
  double gamma = 0.0;
  double mean_accuracy = 0.0;
};

struct CvResult {
  std::vector<CvCandidate> candidates;
  double best_c = 0.0;
  double best_gamma = 0.0;
};

/// Fold assignment preserving class proportions within one member: each
/// class is shuffled with the seed and dealt round-robin. Requires the
/// minority class to have at least `folds` members.
std::vector<int> stratified_folds(const std::vector<LabeledVector>& data, int folds,
                                  std::uint64_t seed);

/// Stratified k-fold cross-validation over the configured grid. Fold
/// assignment is a seeded shuffle; fold f trains with seed cfg.seed + f.
/// Ties go to the smaller c, then the smaller gamma.
CvResult cross_validate(const std::vector<LabeledVector>& data, const TrainConfig& cfg);

void save_model(const SvmModel& model, const std::string& path);
SvmModel load_model(const std::string& path);

}  // namespace ppdetect
