#include "speckv/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "speckv/errors.hpp"

namespace speckv {
namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string_view to_string(CompressionLevel c) noexcept {
  switch (c) {
    case CompressionLevel::kFp16: return "fp16";
    case CompressionLevel::kInt8: return "int8";
    case CompressionLevel::kNf4: return "nf4";
  }
  return "?";
}

std::string_view to_string(TaskCategory t) noexcept {
  switch (t) {
    case TaskCategory::kCode: return "code";
    case TaskCategory::kMath: return "math";
    case TaskCategory::kChat: return "chat";
    case TaskCategory::kSummarization: return "summarization";
  }
  return "?";
}

CompressionLevel parse_compression(std::string_view s) {
  for (CompressionLevel c : kAllCompressions) {
    if (iequals(s, to_string(c))) return c;
  }
  throw InvalidArgument("unknown compression level '" + std::string(s) + "' (expected fp16, int8 or nf4)");
}

TaskCategory parse_task(std::string_view s) {
  for (TaskCategory t : kAllTasks) {
    if (iequals(s, to_string(t))) return t;
  }
  throw InvalidArgument("unknown task category '" + std::string(s) +
                        "' (expected code, math, chat or summarization)");
}

Gamma::Gamma(int value) : value_(value) {
  if (value < 1) throw InvalidArgument("gamma must be >= 1, got " + std::to_string(value));
}

bool is_candidate_gamma(int gamma) noexcept {
  return std::find(kCandidateGammas.begin(), kCandidateGammas.end(), gamma) != kCandidateGammas.end();
}

int verify_greedy(std::span<const std::int64_t> draft_tokens, std::span<const std::int64_t> target_predictions) {
  if (draft_tokens.size() != target_predictions.size()) {
    throw InvalidArgument("verify_greedy: draft has " + std::to_string(draft_tokens.size()) +
                          " tokens but target has " + std::to_string(target_predictions.size()));
  }
  if (draft_tokens.empty()) throw InvalidArgument("verify_greedy: empty draft");
  const auto mismatch = std::mismatch(draft_tokens.begin(), draft_tokens.end(), target_predictions.begin());
  return static_cast<int>(mismatch.first - draft_tokens.begin());
}

StepOutcome step_outcome(Gamma gamma, int accepted) {
  if (accepted < 0 || accepted > gamma.value()) {
    throw InvalidArgument("accepted count " + std::to_string(accepted) + " outside [0, " +
                          std::to_string(gamma.value()) + "]");
  }
  return StepOutcome{gamma, accepted, accepted + 1, static_cast<double>(accepted) / gamma.value()};
}

void validate_record(const StepRecord& r) {
  const StepOutcome& o = r.outcome;
  if (o.gamma != r.gamma) throw ValidationError("outcome gamma differs from record gamma");
  if (o.accepted < 0 || o.accepted > r.gamma.value()) {
    throw ValidationError("accepted=" + std::to_string(o.accepted) + " violates 0 <= accepted <= gamma=" +
                          std::to_string(r.gamma.value()));
  }
  if (o.tokens_produced != o.accepted + 1) {
    throw ValidationError("tokens_produced=" + std::to_string(o.tokens_produced) + " must equal accepted+1=" +
                          std::to_string(o.accepted + 1));
  }
  if (!(o.acceptance_rate >= 0.0 && o.acceptance_rate <= 1.0)) {
    throw ValidationError("acceptance_rate " + std::to_string(o.acceptance_rate) + " outside [0, 1]");
  }
  const double expected_rate = static_cast<double>(o.accepted) / r.gamma.value();
  if (std::fabs(o.acceptance_rate - expected_rate) > 1e-9) {
    throw ValidationError("acceptance_rate " + std::to_string(o.acceptance_rate) + " != accepted/gamma = " +
                          std::to_string(expected_rate));
  }
  if (r.step_index < 0) throw ValidationError("negative step_index");
  const SignalVector& s = r.signals;
  const bool finite = std::isfinite(s.mean_entropy_bits) && std::isfinite(s.max_entropy_bits) &&
                      std::isfinite(s.mean_confidence) && std::isfinite(s.min_confidence);
  if (!finite) throw ValidationError("non-finite signal value");
  if (s.mean_entropy_bits < 0.0 || s.max_entropy_bits < 0.0) throw ValidationError("negative entropy");
  if (!(s.mean_confidence > 0.0 && s.mean_confidence <= 1.0) || !(s.min_confidence > 0.0 && s.min_confidence <= 1.0)) {
    throw ValidationError("confidence outside (0, 1]");
  }
  // Aggregates are computed in floating point; allow rounding slack on the orderings.
  if (s.max_entropy_bits + 1e-9 < s.mean_entropy_bits) throw ValidationError("max_entropy_bits < mean_entropy_bits");
  if (s.min_confidence > s.mean_confidence + 1e-9) throw ValidationError("min_confidence > mean_confidence");
  if (r.step_latency_ms && !(*r.step_latency_ms > 0.0 && std::isfinite(*r.step_latency_ms))) {
    throw ValidationError("step_latency_ms must be positive");
  }
}

}  // namespace speckv
