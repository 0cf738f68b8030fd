#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace speckv {

// Sum-to-one tolerance for a draft distribution.
inline constexpr double kDistributionTolerance = 1e-9;

/// A draft model's next-token distribution over a vocabulary of V >= 2 entries.
/// Construction validates non-negativity and normalization.
class TokenDistribution {
 public:
  explicit TokenDistribution(std::vector<double> probabilities);

  std::span<const double> probabilities() const noexcept { return probabilities_; }
  std::size_t vocab_size() const noexcept { return probabilities_.size(); }

 private:
  std::vector<double> probabilities_;
};

/// Aggregate draft signals for one speculation step (entropies in bits).
struct SignalVector {
  double mean_entropy_bits = 0.0;
  double mean_confidence = 1.0;
  double max_entropy_bits = 0.0;
  double min_confidence = 1.0;

  friend bool operator==(const SignalVector&, const SignalVector&) = default;
};

/// Per-token entropy and top-1 probability, the two quantities every signal is built from.
struct TokenSignal {
  double entropy_bits = 0.0;
  double confidence = 1.0;
};

// Throws InvalidArgument if `probabilities` is not a valid distribution.
void validate_distribution(std::span<const double> probabilities);

double entropy_bits(const TokenDistribution& dist);
double top1_confidence(const TokenDistribution& dist);

// Single pass over the vocabulary; validates like the two functions above.
TokenSignal token_signal(std::span<const double> probabilities);

SignalVector aggregate_signals(std::span<const TokenDistribution> dists);
SignalVector aggregate_token_signals(std::span<const TokenSignal> tokens);

}  // namespace speckv
