#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels_internal.hpp"

namespace speckv::kernels {
namespace {

// Neumaier-compensated accumulator; uniform distributions over 10^5 entries otherwise drift
// past 1e-12 in the entropy.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};

EntropyStats entropy_stats_scalar(const double* p, std::size_t n) {
  CompensatedSum h;
  CompensatedSum total;
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = p[i];
    hi = std::max(hi, v);
    lo = std::min(lo, v);
    total.add(v);
    if (v > 0.0) h.add(-v * std::log2(v));
  }
  return {h.value(), hi, lo, total.value()};
}

void softmax_tempered_scalar(const double* logits, std::size_t n, double inv_temperature, double* out) {
  const double hi = *std::max_element(logits, logits + n);
  CompensatedSum z;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp((logits[i] - hi) * inv_temperature);
    z.add(out[i]);
  }
  const double scale = 1.0 / z.value();
  for (std::size_t i = 0; i < n; ++i) out[i] *= scale;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double gather_sum_scalar(const double* values, const std::uint32_t* index, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += values[index[i]];
  return acc;
}

constexpr KernelTable kScalarTable{
    Isa::kScalar, "scalar", entropy_stats_scalar, softmax_tempered_scalar, dot_scalar, gather_sum_scalar,
};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalarTable; }

}  // namespace speckv::kernels
