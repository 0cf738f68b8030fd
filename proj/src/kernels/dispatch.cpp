#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace speckv::kernels {

const KernelTable* avx2_table() noexcept {
#ifdef SPECKV_HAVE_AVX2
  return detail::avx2_table_impl();
#else
  return nullptr;
#endif
}

bool cpu_supports_avx2() noexcept {
#if defined(SPECKV_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelTable* resolve() noexcept {
  const KernelTable* best = (avx2_table() != nullptr && cpu_supports_avx2()) ? avx2_table() : &scalar_table();
  if (const char* env = std::getenv("SPECKV_KERNELS")) {
    const std::string_view want(env);
    if (want == "scalar") return &scalar_table();
  }
  return best;
}

std::atomic<const KernelTable*>& current() noexcept {
  static std::atomic<const KernelTable*> table{resolve()};
  return table;
}

}  // namespace

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

bool select(Isa isa) noexcept {
  const KernelTable* table = nullptr;
  if (isa == Isa::kScalar) {
    table = &scalar_table();
  } else if (isa == Isa::kAvx2 && avx2_table() != nullptr && cpu_supports_avx2()) {
    table = avx2_table();
  }
  if (table == nullptr) return false;
  current().store(table, std::memory_order_release);
  return true;
}

}  // namespace speckv::kernels
