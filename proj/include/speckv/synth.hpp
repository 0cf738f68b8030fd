#pragma once

// Desk-scale stand-in for GPU profiling runs.
//
// Each (task, prompt) pair owns a latent token sequence: per position a draft-side difficulty
// (which sets the draft distribution's temperature, hence its entropy and confidence), a
// target-side difficulty (the draft's difficulty plus noise the draft cannot see), and a uniform
// draw deciding whether draft and target agree there. Difficulty follows a two-state easy/hard
// regime chain so that spans of text are uniformly easy or hard.
//
// Greedy decoding is deterministic, so every experiment on the same prompt walks the same
// sequence no matter the speculation length or compression level; experiments differ only in
// how the sequence is cut into steps and in the compression's small agreement offset.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "speckv/core.hpp"

namespace speckv {

struct DifficultyMixture {
  double easy_weight = 0.8;  // stationary share of positions in the easy regime
  double easy_mean = 0.0;
  double easy_sd = 0.09;
  double hard_mean = 0.4;
  double hard_sd = 0.11;
};

struct WorldParams {
  int vocab_size = 512;
  std::array<DifficultyMixture, 4> difficulty = {{
      {0.84, -0.02, 0.09, 0.40, 0.11},  // code
      {0.89, -0.02, 0.09, 0.40, 0.11},  // math
      {0.74, -0.02, 0.09, 0.40, 0.11},  // chat
      {0.79, -0.02, 0.09, 0.40, 0.11},  // summarization
  }};
  double agreement_slope = 1.1;
  double entropy_coupling = 2.4;
  double base_temperature = 0.9;
  double logit_zipf_exponent = 1.6;
  double logit_noise = 0.3;
  double target_noise = 0.09;
  double regime_persistence = 0.9;
  std::array<double, 3> compression_agreement_offset = {0.0, -0.01, 0.0};
  int prompts_per_task = 5;
  std::uint64_t seed = 20250611;
};

// Throws InvalidArgument naming the offending field.
void validate(const WorldParams& world);

struct LatencyCoefficients {
  double base_ms = 30.0;
  double per_gamma_ms = 10.0;
};

struct CostModel {
  std::array<LatencyCoefficients, 3> per_compression = {{{30.0, 10.0}, {120.0, 10.0}, {50.0, 10.0}}};
  double controller_overhead_ms = 0.34;
};

void validate(const CostModel& cost);

double step_latency_ms(const CostModel& cost, CompressionLevel compression, Gamma gamma);
double throughput_toks_per_s(double expected_tokens, double latency_ms);

// Agreement probability for a target-side difficulty, clamped to [0.01, 0.99].
double agreement_probability(const WorldParams& world, double difficulty, CompressionLevel compression);

/// One step drawn from a fresh context: a difficulty from the task's mixture (or `forced_difficulty`)
/// shared by all gamma positions, with independent agreement draws per position.
StepRecord sample_step(const WorldParams& world, TaskCategory task, CompressionLevel compression, Gamma gamma,
                       std::mt19937_64& rng, std::optional<double> forced_difficulty = std::nullopt);

struct PlanCell {
  TaskCategory task;
  CompressionLevel compression;
  Gamma gamma;
  int steps;
};

// Every task x compression x {2,4,6,8} cell with `steps_per_cell` steps each.
std::vector<PlanCell> full_grid_plan(int steps_per_cell);

/// Replays speculative decoding over each prompt's latent sequence. A cell's steps are spread
/// round-robin-by-block over the task's prompts; experiment ids read "<task>-<comp>-g<gamma>-p<prompt>".
/// With `cost` set, records carry the modeled step latency.
std::vector<StepRecord> generate_corpus(const WorldParams& world, const std::vector<PlanCell>& plan,
                                        const CostModel* cost = nullptr);

// Mean over records of 1000 * tokens_produced / latency, per (compression, gamma in {2,4,6,8}).
// Cells without records hold NaN.
std::array<std::array<double, 4>, 3> mean_throughput_table(const std::vector<StepRecord>& corpus,
                                                           const CostModel& cost);

struct ThroughputTarget {
  CompressionLevel compression;
  TaskCategory task;
  int best_gamma;
  double toks_per_s;
};

// Reference per-task optima used to calibrate the cost model.
const std::vector<ThroughputTarget>& default_throughput_targets();

struct CostCalibration {
  CostModel cost;
  std::array<double, 3> raw_base_ms{};  // least-squares base before anchoring
  double anchor_shift_ms = 0.0;
};

/// Back-solves each compression's base_ms from per-task throughput targets with per_gamma_ms held
/// fixed: latency = 1000 * E[tokens | task, gamma*] / target. Every base then moves by the same
/// offset so that the FP16 step at gamma = 4 takes `anchor_ms_fp16_gamma4`.
CostCalibration calibrate_cost_model(const std::vector<StepRecord>& corpus,
                                     const std::vector<ThroughputTarget>& targets, double per_gamma_ms,
                                     double anchor_ms_fp16_gamma4);

}  // namespace speckv
