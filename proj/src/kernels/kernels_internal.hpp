#pragma once

#include "speckv/kernels.hpp"

namespace speckv::kernels::detail {

// Defined in avx2.cpp, which is only compiled when the toolchain targets x86-64.
const KernelTable* avx2_table_impl() noexcept;

}  // namespace speckv::kernels::detail
