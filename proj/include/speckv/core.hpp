#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "speckv/signals.hpp"

namespace speckv {

enum class CompressionLevel : std::uint8_t { kFp16 = 0, kInt8 = 1, kNf4 = 2 };
enum class TaskCategory : std::uint8_t { kCode = 0, kMath = 1, kChat = 2, kSummarization = 3 };

inline constexpr std::array<CompressionLevel, 3> kAllCompressions = {
    CompressionLevel::kFp16, CompressionLevel::kInt8, CompressionLevel::kNf4};
inline constexpr std::array<TaskCategory, 4> kAllTasks = {
    TaskCategory::kCode, TaskCategory::kMath, TaskCategory::kChat, TaskCategory::kSummarization};

std::string_view to_string(CompressionLevel c) noexcept;
std::string_view to_string(TaskCategory t) noexcept;
// Case-insensitive; throws InvalidArgument on unknown names.
CompressionLevel parse_compression(std::string_view s);
TaskCategory parse_task(std::string_view s);

inline constexpr std::size_t index_of(CompressionLevel c) noexcept { return static_cast<std::size_t>(c); }
inline constexpr std::size_t index_of(TaskCategory t) noexcept { return static_cast<std::size_t>(t); }

/// Number of draft tokens proposed per speculation step. Always >= 1.
class Gamma {
 public:
  explicit Gamma(int value);
  int value() const noexcept { return value_; }
  friend auto operator<=>(const Gamma&, const Gamma&) = default;

 private:
  int value_;
};

inline constexpr std::array<int, 4> kCandidateGammas = {2, 4, 6, 8};
inline constexpr int kMaxCandidateGamma = 8;
bool is_candidate_gamma(int gamma) noexcept;

struct StepOutcome {
  Gamma gamma{1};
  int accepted = 0;
  int tokens_produced = 1;
  double acceptance_rate = 0.0;

  friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

/// Accepted-prefix length under greedy verification. Both sequences must have the same length >= 1.
int verify_greedy(std::span<const std::int64_t> draft_tokens, std::span<const std::int64_t> target_predictions);

/// Outcome of a step that accepted `accepted` of `gamma` draft tokens; the extra token is the
/// target's correction (or bonus token after full acceptance).
StepOutcome step_outcome(Gamma gamma, int accepted);

struct StepRecord {
  std::string experiment_id;
  CompressionLevel compression = CompressionLevel::kFp16;
  TaskCategory task = TaskCategory::kCode;
  Gamma gamma{1};
  std::int64_t step_index = 0;
  StepOutcome outcome;
  SignalVector signals;
  std::optional<double> step_latency_ms;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

// Throws ValidationError describing the first violated StepRecord invariant.
void validate_record(const StepRecord& record);

}  // namespace speckv
