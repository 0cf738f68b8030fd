#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "speckv/core.hpp"
#include "speckv/signals.hpp"

namespace speckv {

// Layout: 4 standardized signals (mean entropy, mean confidence, max entropy, min confidence),
// compression one-hot (fp16, int8, nf4), gamma / 8.
inline constexpr std::size_t kFeatureDim = 8;
using FeatureVector = std::array<double, kFeatureDim>;

inline constexpr std::array<const char*, kFeatureDim> kFeatureNames = {
    "mean_entropy_bits", "mean_confidence", "max_entropy_bits", "min_confidence",
    "comp_fp16",         "comp_int8",       "comp_nf4",         "gamma_normalized",
};

class Standardizer {
 public:
  Standardizer() = default;
  // Population statistics; a zero spread is replaced by 1.
  static Standardizer fit(std::span<const SignalVector> training_signals);
  static Standardizer from_stats(const std::array<double, 4>& mean, const std::array<double, 4>& sd);

  bool fitted() const noexcept { return fitted_; }
  const std::array<double, 4>& mean() const noexcept { return mean_; }
  const std::array<double, 4>& sd() const noexcept { return sd_; }

  std::array<double, 4> transform(const SignalVector& s) const;
  SignalVector inverse(const std::array<double, 4>& z) const;

  friend bool operator==(const Standardizer&, const Standardizer&) = default;

 private:
  bool fitted_ = false;
  std::array<double, 4> mean_{};
  std::array<double, 4> sd_{1.0, 1.0, 1.0, 1.0};
};

// Throws StateError for an unfitted standardizer, InvalidArgument for gamma outside [1, 8].
FeatureVector featurize(const SignalVector& signals, CompressionLevel compression, Gamma gamma,
                        const Standardizer& standardizer);

struct RidgeParams {
  std::array<double, kFeatureDim> weights{};
  double intercept = 0.0;
  double lambda = 1.0;
};

struct MlpHyperparams {
  int hidden_units = 16;
  int batch_size = 64;
  double learning_rate = 1e-3;  // peak; cosine-decayed to 0 over all updates
  double momentum = 0.9;
  int epochs = 200;
};

// Row-major w1 is hidden x kFeatureDim.
struct MlpParams {
  MlpHyperparams hyper;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestHyperparams {
  int n_trees = 100;
  int max_features = 3;  // 0 means all features
  int min_leaf = 2;
  int max_depth = 0;  // 0 means unlimited
  bool bootstrap = true;
};

struct ForestParams {
  ForestHyperparams hyper;
  std::vector<RegressionTree> trees;
  std::array<double, kFeatureDim> importance{};
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::string data_fingerprint;  // sha256 of the training matrix and targets
  std::int64_t training_rows = 0;
};

struct PredictorModel {
  std::string variant;  // "ridge", "mlp16", "mlp32", "rf<N>"
  std::variant<RidgeParams, MlpParams, ForestParams> params;
  Standardizer standardizer;
  TrainingMetadata metadata;

  // Unclipped model output.
  double raw(const FeatureVector& x) const;
};

struct Dataset {
  std::vector<FeatureVector> x;
  std::vector<double> y;
};

Dataset make_dataset(std::span<const StepRecord> records, const Standardizer& standardizer);

std::string fingerprint(const Dataset& data);

PredictorModel ridge_fit(const Dataset& data, double lambda);

// Squared-error loss (mean over rows) of the unclipped network and its gradient in `grad`
// (same shapes as `params`). Exposed for gradient checking.
double mlp_loss_and_gradient(const MlpParams& params, std::span<const FeatureVector> x, std::span<const double> y,
                             MlpParams* grad);

PredictorModel mlp_fit(const Dataset& data, const MlpHyperparams& hyper, std::uint64_t seed);

PredictorModel forest_fit(const Dataset& data, const ForestHyperparams& hyper, std::uint64_t seed);

// Normalized impurity-decrease importance per feature. Throws InvalidArgument for non-forest models.
std::array<double, kFeatureDim> feature_importance(const PredictorModel& model);

// Clipped to [0, 1].
double predict(const PredictorModel& model, const FeatureVector& features);
// Throws InvalidArgument unless features.size() == kFeatureDim.
double predict(const PredictorModel& model, std::span<const double> features);

struct PredictorMetrics {
  double test_mse = 0.0;
  double test_pearson = 0.0;
  double overhead_us_per_decision = 0.0;  // 0 until measured
};

// Throws InvalidArgument on empty or mismatched input, NumericError if y has zero variance.
PredictorMetrics eval_metrics(const PredictorModel& model, const Dataset& test);
double pearson(std::span<const double> a, std::span<const double> b);

struct TrainConfig {
  double ridge_lambda = 1.0;
  MlpHyperparams mlp;
  ForestHyperparams forest;
};

// Valid tags: ridge, mlp16, mlp32, rf<N> (N >= 1). Throws UsageError listing them otherwise.
void check_variant(const std::string& variant);

/// Fits the standardizer on `train` and trains the requested variant.
PredictorModel train_variant(const std::string& variant, std::span<const StepRecord> train, const TrainConfig& config,
                             std::uint64_t seed);

}  // namespace speckv
