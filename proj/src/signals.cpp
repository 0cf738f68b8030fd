#include "speckv/signals.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "speckv/errors.hpp"
#include "speckv/kernels.hpp"

namespace speckv {
namespace {

void check_stats(const kernels::EntropyStats& stats, std::size_t n) {
  if (n < 2) throw InvalidArgument("distribution needs a vocabulary of at least 2 entries, got " + std::to_string(n));
  if (!(stats.min >= 0.0)) throw InvalidArgument("distribution has a negative or NaN entry");
  if (!(std::fabs(stats.sum - 1.0) <= kDistributionTolerance)) {
    throw InvalidArgument("distribution sums to " + std::to_string(stats.sum) + ", not 1");
  }
}

}  // namespace

void validate_distribution(std::span<const double> probabilities) {
  check_stats(kernels::entropy_stats(probabilities), probabilities.size());
}

TokenDistribution::TokenDistribution(std::vector<double> probabilities) : probabilities_(std::move(probabilities)) {
  validate_distribution(probabilities_);
}

TokenSignal token_signal(std::span<const double> probabilities) {
  const kernels::EntropyStats stats = kernels::entropy_stats(probabilities);
  check_stats(stats, probabilities.size());
  return {std::max(0.0, stats.entropy_bits), stats.max};
}

double entropy_bits(const TokenDistribution& dist) { return token_signal(dist.probabilities()).entropy_bits; }

double top1_confidence(const TokenDistribution& dist) { return token_signal(dist.probabilities()).confidence; }

SignalVector aggregate_token_signals(std::span<const TokenSignal> tokens) {
  if (tokens.empty()) throw InvalidArgument("aggregate_signals: empty step");
  SignalVector out{0.0, 0.0, tokens.front().entropy_bits, tokens.front().confidence};
  for (const TokenSignal& t : tokens) {
    out.mean_entropy_bits += t.entropy_bits;
    out.mean_confidence += t.confidence;
    out.max_entropy_bits = std::max(out.max_entropy_bits, t.entropy_bits);
    out.min_confidence = std::min(out.min_confidence, t.confidence);
  }
  const double n = static_cast<double>(tokens.size());
  out.mean_entropy_bits /= n;
  out.mean_confidence /= n;
  // A mean of equal values can round one ulp past them.
  out.mean_entropy_bits = std::min(out.mean_entropy_bits, out.max_entropy_bits);
  out.mean_confidence = std::max(out.mean_confidence, out.min_confidence);
  return out;
}

SignalVector aggregate_signals(std::span<const TokenDistribution> dists) {
  if (dists.empty()) throw InvalidArgument("aggregate_signals: empty step");
  std::vector<TokenSignal> tokens;
  tokens.reserve(dists.size());
  for (const TokenDistribution& d : dists) tokens.push_back(token_signal(d.probabilities()));
  return aggregate_token_signals(tokens);
}

}  // namespace speckv
