#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "speckv/core.hpp"
#include "speckv/policy.hpp"
#include "speckv/predictor.hpp"

namespace speckv {

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 20250611;
};

struct Split {
  std::vector<StepRecord> train;
  std::vector<StepRecord> test;
  std::vector<std::size_t> test_index;  // positions in the input corpus, ascending
};

/// Holds out round(test_fraction * size) records of every (compression, task) stratum. Both
/// halves keep corpus order. Throws InvalidArgument naming any stratum with fewer than 5 records.
Split stratified_split(std::span<const StepRecord> corpus, const SplitSpec& spec);

/// Per-step expected tokens under the scorer's acceptance estimate at the policy's gamma.
std::vector<double> score_policy(const GammaPolicy& policy, std::span<const StepRecord> test,
                                 const PredictorModel& scorer);

struct BootstrapResult {
  double mean_diff = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  int resamples = 0;
};

/// Paired bootstrap of mean(a - b): percentile 95% interval, two-sided p-value
/// 2 * min(P(mean* <= 0), P(mean* >= 0)) clamped to [1/resamples, 1]. Resample r draws its
/// indices from a generator seeded by (seed, r), so the result does not depend on `threads`
/// (0 picks the hardware concurrency).
BootstrapResult paired_bootstrap(std::span<const double> a, std::span<const double> b, int resamples = 10000,
                                 std::uint64_t seed = 20250611, unsigned threads = 0);

struct MeanInterval {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Percentile bootstrap interval of a plain mean; a single value yields a degenerate interval.
MeanInterval bootstrap_mean_ci(std::span<const double> values, int resamples, std::uint64_t seed, unsigned threads = 0);

// 100 * (candidate - baseline) / baseline. Throws InvalidArgument for a non-positive baseline.
double improvement_pct(double candidate_mean, double baseline_mean);
// Gross improvement less the controller overhead as a share of step time, in percentage points.
double net_improvement_pct(double gross_pct, double overhead_ms, double step_time_ms);

// Lowercase with '-' and '_' removed, so "SpecKV-fast", "speckv_fast" and "speckvfast" match.
std::string normalize_policy_name(std::string_view name);

struct PolicyScores {
  std::string policy;
  std::vector<double> scores;  // paired with the report's labels
  double overhead_ms = 0.0;    // per-decision controller cost
};

struct CellSummary {
  std::string policy;
  CompressionLevel compression;
  TaskCategory task;
  double mean = 0.0;
  std::int64_t count = 0;
};

struct CompressionSummary {
  std::string policy;
  CompressionLevel compression;
  MeanInterval interval;
  std::int64_t count = 0;
};

struct PolicySummary {
  std::string policy;
  MeanInterval interval;
  std::int64_t count = 0;
  std::optional<double> improvement_pct;      // against fixed-4
  std::optional<double> net_improvement_pct;  // after this policy's overhead
  double overhead_ms = 0.0;
};

struct ReportOptions {
  int resamples = 10000;
  std::uint64_t seed = 20250611;
  double step_time_ms = 70.0;
  unsigned threads = 0;
};

struct EvalReport {
  std::vector<PolicyScores> scores;
  std::vector<StepRecord> labels;
  std::vector<CellSummary> cells;
  std::vector<CompressionSummary> per_compression;
  std::vector<PolicySummary> overall;
  std::optional<BootstrapResult> fast_vs_fixed4;
  ReportOptions options;

  const PolicySummary* find(std::string_view policy) const;
};

/// Aggregates paired score vectors. Throws InvalidArgument if any vector's length differs from
/// labels.size().
EvalReport build_report(std::vector<PolicyScores> scores, std::span<const StepRecord> labels,
                        const ReportOptions& options);

struct EvaluationInputs {
  std::shared_ptr<const PredictorModel> fast;      // SpecKV-fast decision model
  std::shared_ptr<const PredictorModel> accurate;  // SpecKV-accurate decision model (optional)
  std::optional<ProfileTable> profile;             // needed by fixed-best and task-oracle
  bool score_with_accurate = false;                // score every policy with the accurate model
};

// Policy names accepted by evaluate_policies, in report order.
const std::vector<std::string>& known_policy_names();
const std::vector<std::string>& default_policy_names();

/// Scores each requested policy on `test` with one shared scorer and builds the report. Unknown
/// names raise UsageError; policies whose inputs are missing raise InvalidArgument.
EvalReport evaluate_policies(std::span<const StepRecord> test, const std::vector<std::string>& policies,
                             const EvaluationInputs& inputs, const ReportOptions& options,
                             const std::map<std::string, double>& overhead_ms = {});

}  // namespace speckv
