#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "speckv/core.hpp"
#include "speckv/predictor.hpp"
#include "speckv/synth.hpp"

namespace speckv {

// a_hat * gamma + 1. Throws InvalidArgument unless a_hat is in [0, 1].
double expected_tokens(double a_hat, Gamma gamma);

struct CandidateEvaluation {
  Gamma gamma{1};
  double predicted_acceptance = 0.0;
  double expected_tokens = 1.0;
};

struct PolicyDecision {
  Gamma chosen_gamma{1};
  std::vector<CandidateEvaluation> candidates;
  std::string policy_name;
};

// Throws InvalidArgument unless candidates is a non-empty, duplicate-free subset of {2,4,6,8}.
void check_candidates(std::span<const int> candidates);

/// Argmax of a_hat * gamma + 1 over `candidates`; ties go to the smallest gamma.
PolicyDecision choose_from_predictions(std::span<const int> candidates, std::span<const double> a_hat,
                                       std::string policy_name = "speckv");

PolicyDecision select_gamma(const PredictorModel& model, const SignalVector& signals, CompressionLevel compression,
                            std::span<const int> candidates = kCandidateGammas);

enum class ProfileObjective { kExpectedTokens, kThroughput };

std::string_view to_string(ProfileObjective objective) noexcept;
ProfileObjective parse_profile_objective(std::string_view s);

struct ProfileEntry {
  int gamma = 4;
  double objective = 0.0;  // mean objective value attained at `gamma`
  friend bool operator==(const ProfileEntry&, const ProfileEntry&) = default;
};

struct ProfileTable {
  ProfileObjective objective = ProfileObjective::kExpectedTokens;
  std::map<CompressionLevel, ProfileEntry> fixed_best;
  std::map<std::pair<CompressionLevel, TaskCategory>, ProfileEntry> task_oracle;
  friend bool operator==(const ProfileTable&, const ProfileTable&) = default;
};

/// Per compression level (and per compression x task) picks the gamma with the highest mean
/// objective over matching records. Expected tokens uses the observed tokens per step;
/// throughput divides them by the cost model's step latency and requires `cost`.
/// Throws IncompleteProfileError listing every (key, gamma) cell without records.
ProfileTable build_profile(std::span<const StepRecord> corpus, ProfileObjective objective,
                           const CostModel* cost = nullptr, std::span<const int> candidates = kCandidateGammas);

// Chooses gamma for one step. Implementations are immutable and thread-safe.
class GammaPolicy {
 public:
  virtual ~GammaPolicy() = default;
  virtual const std::string& name() const noexcept = 0;
  virtual Gamma choose(const StepRecord& step) const = 0;
};

std::unique_ptr<GammaPolicy> fixed_policy(Gamma gamma);
std::unique_ptr<GammaPolicy> fixed_best_policy(ProfileTable profile);
std::unique_ptr<GammaPolicy> task_oracle_policy(ProfileTable profile);
std::unique_ptr<GammaPolicy> speckv_policy(std::shared_ptr<const PredictorModel> model, std::string name);

struct OverheadMeasurement {
  double min_us = 0.0;
  double median_us = 0.0;
  std::vector<double> per_repetition_us;
  std::int64_t n_decisions = 0;
};

/// Wall-clock cost of full decisions (featurize + predict for each of the four candidates, then
/// argmax), cycling through the signals of `inputs` (or the standardizer's means when empty).
/// Throws InvalidArgument for n_decisions < 1000 or repetitions < 5.
OverheadMeasurement measure_overhead(const PredictorModel& model, std::span<const StepRecord> inputs,
                                     std::int64_t n_decisions, int repetitions = 5);

}  // namespace speckv
