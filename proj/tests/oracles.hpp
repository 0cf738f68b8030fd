#pragma once
// Independent reference computations used by the unit tests and the acceptance binary. None of
// these call into the library's numerical code.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace speckv::oracle {

// Count of leading positions where the two sequences agree, by plain indexing.
inline int naive_prefix(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  int k = 0;
  while (k < static_cast<int>(a.size()) && a[k] == b[k]) ++k;
  return k;
}

inline double naive_entropy_bits(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return h;
}

inline double naive_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Sum of squared residuals plus lambda * |w|^2 (intercept unpenalized).
template <std::size_t D>
double ridge_objective(const std::vector<std::array<double, D>>& x, const std::vector<double>& y,
                       const std::array<double, D>& w, double b, double lambda) {
  double obj = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = b - y[i];
    for (std::size_t j = 0; j < D; ++j) r += w[j] * x[i][j];
    obj += r * r;
  }
  for (double v : w) obj += lambda * v * v;
  return obj;
}

// Full-batch gradient descent on the ridge objective with a step of 1/L, L bounded by the
// Frobenius norm of the augmented design. Runs until the gradient norm drops below tol.
template <std::size_t D>
void ridge_gradient_descent(const std::vector<std::array<double, D>>& x, const std::vector<double>& y, double lambda,
                            std::array<double, D>& w, double& b, double tol = 1e-11, int max_iter = 200000) {
  w.fill(0.0);
  b = 0.0;
  double frob = static_cast<double>(x.size());
  for (const auto& row : x) {
    for (double v : row) frob += v * v;
  }
  const double step = 1.0 / (2.0 * (frob + lambda));
  for (int it = 0; it < max_iter; ++it) {
    std::array<double, D> gw{};
    double gb = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double r = b - y[i];
      for (std::size_t j = 0; j < D; ++j) r += w[j] * x[i][j];
      gb += 2.0 * r;
      for (std::size_t j = 0; j < D; ++j) gw[j] += 2.0 * r * x[i][j];
    }
    double norm = gb * gb;
    for (std::size_t j = 0; j < D; ++j) {
      gw[j] += 2.0 * lambda * w[j];
      norm += gw[j] * gw[j];
    }
    if (std::sqrt(norm) < tol) return;
    b -= step * gb;
    for (std::size_t j = 0; j < D; ++j) w[j] -= step * gw[j];
  }
}

// Percentile of a sorted sample by linear interpolation between order statistics.
inline double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace speckv::oracle
