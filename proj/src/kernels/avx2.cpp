// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and must only be
// entered after cpu_supports_avx2() returned true.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels_internal.hpp"

namespace speckv::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d m = _mm_max_pd(_mm256_castpd256_pd128(v), _mm256_extractf128_pd(v, 1));
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

inline double hmin(__m256d v) {
  const __m128d m = _mm_min_pd(_mm256_castpd256_pd128(v), _mm256_extractf128_pd(v, 1));
  return _mm_cvtsd_f64(_mm_min_sd(m, _mm_unpackhi_pd(m, m)));
}

inline __m256d vabs(__m256d x) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x); }

// Lane-wise Neumaier step.
inline void neumaier_add(__m256d& sum, __m256d& carry, __m256d x) {
  const __m256d t = _mm256_add_pd(sum, x);
  const __m256d big_sum = _mm256_cmp_pd(vabs(sum), vabs(x), _CMP_GE_OQ);
  const __m256d c_sum = _mm256_add_pd(_mm256_sub_pd(sum, t), x);
  const __m256d c_x = _mm256_add_pd(_mm256_sub_pd(x, t), sum);
  carry = _mm256_add_pd(carry, _mm256_blendv_pd(c_x, c_sum, big_sum));
  sum = t;
}

inline void neumaier_scalar(double& sum, double& carry, double x) {
  const double t = sum + x;
  carry += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
  sum = t;
}

// Integer-valued doubles in [0, 2^52) <-> their int64 bit patterns, via the 2^52 magic constant.
inline __m256d magic() { return _mm256_set1_pd(4503599627370496.0); }

// log2 for positive finite doubles, subnormals included. ln(m) on m in [sqrt(1/2), sqrt(2)) uses
// the atanh series 2s(1 + s^2/3 + ... + s^20/21) with s = (m-1)/(m+1); |s| <= 0.1716 so the
// truncation error sits below 1e-17.
inline __m256d log2_pd(__m256d x) {
  const __m256d tiny = _mm256_cmp_pd(x, _mm256_set1_pd(std::numeric_limits<double>::min()), _CMP_LT_OQ);
  x = _mm256_blendv_pd(x, _mm256_mul_pd(x, _mm256_set1_pd(4503599627370496.0)), tiny);
  const __m256d e_adjust = _mm256_and_pd(tiny, _mm256_set1_pd(-52.0));

  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i biased = _mm256_srli_epi64(bits, 52);
  __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(biased, _mm256_castpd_si256(magic()))), magic());
  e = _mm256_add_pd(_mm256_sub_pd(e, _mm256_set1_pd(1023.0)), e_adjust);

  const __m256i mant_bits =
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                      _mm256_set1_epi64x(0x3FF0000000000000LL));
  __m256d m = _mm256_castsi256_pd(mant_bits);
  const __m256d above = _mm256_cmp_pd(m, _mm256_set1_pd(1.4142135623730951), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), above);
  e = _mm256_add_pd(e, _mm256_and_pd(above, _mm256_set1_pd(1.0)));

  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d z = _mm256_mul_pd(s, s);
  __m256d poly = _mm256_set1_pd(1.0 / 21.0);
  poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 19.0));
  poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 17.0));
  poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 15.0));
  poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 13.0));
  poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 11.0));
  poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 9.0));
  poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 7.0));
  poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 5.0));
  poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 3.0));
  // ln m = 2s + 2s*z*poly; keep the leading 2s term exact.
  const __m256d two_s = _mm256_add_pd(s, s);
  const __m256d ln_m = _mm256_fmadd_pd(_mm256_mul_pd(two_s, z), poly, two_s);
  return _mm256_fmadd_pd(ln_m, _mm256_set1_pd(1.4426950408889634), e);
}

// exp for x <= 0. Results below the smallest normal double flush to zero.
inline __m256d exp_nonpositive_pd(__m256d x) {
  const __m256d underflow = _mm256_cmp_pd(x, _mm256_set1_pd(-708.0), _CMP_LT_OQ);
  x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

  // Taylor series to r^13; |r| <= ln2/2.
  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^n with n in [-1022, 0]: (n + 1023) << 52.
  const __m256d biased = _mm256_add_pd(n, _mm256_set1_pd(1023.0));
  const __m256d clamped = _mm256_max_pd(biased, _mm256_set1_pd(1.0));
  const __m256i pow_bits = _mm256_slli_epi64(_mm256_castpd_si256(_mm256_add_pd(clamped, magic())), 52);
  const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(pow_bits));
  const __m256d flush = _mm256_or_pd(underflow, _mm256_cmp_pd(biased, _mm256_set1_pd(1.0), _CMP_LT_OQ));
  return _mm256_andnot_pd(flush, result);
}

EntropyStats entropy_stats_avx2(const double* p, std::size_t n) {
  __m256d h_sum = _mm256_setzero_pd(), h_carry = _mm256_setzero_pd();
  __m256d t_sum = _mm256_setzero_pd(), t_carry = _mm256_setzero_pd();
  __m256d vmax = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  __m256d vmin = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(p + i);
    vmax = _mm256_max_pd(vmax, v);
    vmin = _mm256_min_pd(vmin, v);
    neumaier_add(t_sum, t_carry, v);
    const __m256d positive = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    const __m256d safe = _mm256_blendv_pd(one, v, positive);
    const __m256d term = _mm256_and_pd(positive, _mm256_mul_pd(_mm256_sub_pd(zero, v), log2_pd(safe)));
    neumaier_add(h_sum, h_carry, term);
  }

  alignas(32) double hs[4], hc[4], ts[4], tc[4];
  _mm256_store_pd(hs, h_sum);
  _mm256_store_pd(hc, h_carry);
  _mm256_store_pd(ts, t_sum);
  _mm256_store_pd(tc, t_carry);
  double h = 0.0, hcarry = 0.0, t = 0.0, tcarry = 0.0;
  for (int lane = 0; lane < 4; ++lane) {
    neumaier_scalar(h, hcarry, hs[lane]);
    hcarry += hc[lane];
    neumaier_scalar(t, tcarry, ts[lane]);
    tcarry += tc[lane];
  }
  double hi = hmax(vmax);
  double lo = hmin(vmin);
  for (; i < n; ++i) {
    const double v = p[i];
    hi = std::max(hi, v);
    lo = std::min(lo, v);
    neumaier_scalar(t, tcarry, v);
    if (v > 0.0) neumaier_scalar(h, hcarry, -v * std::log2(v));
  }
  return {h + hcarry, hi, lo, t + tcarry};
}

void softmax_tempered_avx2(const double* logits, std::size_t n, double inv_temperature, double* out) {
  __m256d vmax = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vmax = _mm256_max_pd(vmax, _mm256_loadu_pd(logits + i));
  double hi = hmax(vmax);
  for (; i < n; ++i) hi = std::max(hi, logits[i]);

  const __m256d vhi = _mm256_set1_pd(hi);
  const __m256d vinv = _mm256_set1_pd(inv_temperature);
  __m256d z_sum = _mm256_setzero_pd(), z_carry = _mm256_setzero_pd();
  i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = exp_nonpositive_pd(_mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(logits + i), vhi), vinv));
    _mm256_storeu_pd(out + i, e);
    neumaier_add(z_sum, z_carry, e);
  }
  alignas(32) double zs[4], zc[4];
  _mm256_store_pd(zs, z_sum);
  _mm256_store_pd(zc, z_carry);
  double z = 0.0, zcarry = 0.0;
  for (int lane = 0; lane < 4; ++lane) {
    neumaier_scalar(z, zcarry, zs[lane]);
    zcarry += zc[lane];
  }
  for (; i < n; ++i) {
    out[i] = std::exp((logits[i] - hi) * inv_temperature);
    neumaier_scalar(z, zcarry, out[i]);
  }

  const double scale = 1.0 / (z + zcarry);
  const __m256d vscale = _mm256_set1_pd(scale);
  i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(out + i), vscale));
  for (; i < n; ++i) out[i] *= scale;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double gather_sum_avx2(const double* values, const std::uint32_t* index, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m128i i0 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(index + i));
    const __m128i i1 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(index + i + 4));
    acc0 = _mm256_add_pd(acc0, _mm256_i32gather_pd(values, i0, 8));
    acc1 = _mm256_add_pd(acc1, _mm256_i32gather_pd(values, i1, 8));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += values[index[i]];
  return acc;
}

const KernelTable kAvx2Table{
    Isa::kAvx2, "avx2", entropy_stats_avx2, softmax_tempered_avx2, dot_avx2, gather_sum_avx2,
};

}  // namespace

namespace detail {
const KernelTable* avx2_table_impl() noexcept { return &kAvx2Table; }
}  // namespace detail

}  // namespace speckv::kernels
