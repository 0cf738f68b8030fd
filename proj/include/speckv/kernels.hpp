#pragma once

// Data-parallel inner loops used across the pipeline. Every kernel has a scalar reference
// implementation; SIMD variants are compiled per ISA and chosen once at startup from the CPU's
// capabilities. The SPECKV_KERNELS environment variable ("scalar" or "avx2") overrides the choice.
//
// Variants agree with the scalar reference to a few ulps, not bit-for-bit: reductions run in a
// different association order. Anything that must be bit-reproducible has to run on one table.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace speckv::kernels {

enum class Isa { kScalar, kAvx2 };

struct EntropyStats {
  double entropy_bits = 0.0;  // -sum p log2 p over entries with p > 0
  double max = 0.0;
  double min = 0.0;
  double sum = 0.0;
};

struct KernelTable {
  Isa isa;
  std::string_view name;
  EntropyStats (*entropy_stats)(const double* p, std::size_t n);
  // out[i] = exp((logits[i] - max) * inv_temperature) / Z. Requires n >= 1.
  void (*softmax_tempered)(const double* logits, std::size_t n, double inv_temperature, double* out);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*gather_sum)(const double* values, const std::uint32_t* index, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
// nullptr when the variant was not compiled into this binary.
const KernelTable* avx2_table() noexcept;

bool cpu_supports_avx2() noexcept;

// The table in use. First call resolves the environment override and CPU detection.
const KernelTable& active() noexcept;
// Forces a table; returns false (and leaves the selection alone) if it is unavailable here.
bool select(Isa isa) noexcept;

inline EntropyStats entropy_stats(std::span<const double> p) {
  return active().entropy_stats(p.data(), p.size());
}
inline void softmax_tempered(std::span<const double> logits, double inv_temperature, std::span<double> out) {
  active().softmax_tempered(logits.data(), logits.size(), inv_temperature, out.data());
}
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double gather_sum(std::span<const double> values, std::span<const std::uint32_t> index) {
  return active().gather_sum(values.data(), index.data(), index.size());
}

}  // namespace speckv::kernels
