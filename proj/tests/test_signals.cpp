#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "speckv/errors.hpp"
#include "speckv/kernels.hpp"
#include "speckv/signals.hpp"

using namespace speckv;

namespace {

std::vector<double> one_hot(std::size_t v, std::size_t at) {
  std::vector<double> p(v, 0.0);
  p[at] = 1.0;
  return p;
}

std::vector<double> uniform(std::size_t v) { return std::vector<double>(v, 1.0 / static_cast<double>(v)); }

std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t v) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(v);
  double s = 0.0;
  for (double& x : p) s += (x = e(rng));
  for (double& x : p) x /= s;
  return p;
}

}  // namespace

TEST(Entropy, OneHotIsZero) {
  EXPECT_EQ(entropy_bits(TokenDistribution(one_hot(16, 3))), 0.0);
  EXPECT_EQ(entropy_bits(TokenDistribution(one_hot(2, 0))), 0.0);
}

TEST(Entropy, UniformIsLog2V) {
  EXPECT_NEAR(entropy_bits(TokenDistribution(uniform(8))), 3.0, 1e-12);
  EXPECT_NEAR(entropy_bits(TokenDistribution(uniform(128256))), std::log2(128256.0), 1e-9);
  EXPECT_NEAR(std::log2(128256.0), 16.9687, 1e-4);
}

TEST(Entropy, ZeroPaddingInvariance) {
  std::mt19937_64 rng(3);
  auto p = random_distribution(rng, 37);
  const double h = entropy_bits(TokenDistribution(p));
  p.resize(300, 0.0);
  EXPECT_NEAR(entropy_bits(TokenDistribution(p)), h, 1e-13);
}

TEST(Entropy, MatchesNaiveOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto p = random_distribution(rng, 2 + t * 7);
    EXPECT_NEAR(entropy_bits(TokenDistribution(p)), oracle::naive_entropy_bits(p), 1e-11);
  }
}

TEST(Confidence, Examples) {
  EXPECT_EQ(top1_confidence(TokenDistribution(one_hot(5, 1))), 1.0);
  EXPECT_DOUBLE_EQ(top1_confidence(TokenDistribution(uniform(40))), 1.0 / 40.0);
  EXPECT_EQ(top1_confidence(TokenDistribution({0.5, 0.3, 0.2})), 0.5);
}

TEST(Distribution, RejectsInvalid) {
  EXPECT_THROW(TokenDistribution({1.0}), InvalidArgument);
  EXPECT_THROW(TokenDistribution({0.6, 0.6}), InvalidArgument);
  EXPECT_THROW(TokenDistribution({1.2, -0.2}), InvalidArgument);
  EXPECT_THROW(TokenDistribution({NAN, 1.0}), InvalidArgument);
}

TEST(Aggregate, SingleOneHot) {
  const std::vector<TokenDistribution> d = {TokenDistribution(one_hot(4, 0))};
  const SignalVector s = aggregate_signals(d);
  EXPECT_EQ(s, (SignalVector{0.0, 1.0, 0.0, 1.0}));
}

TEST(Aggregate, TwoTokenArithmetic) {
  const std::vector<TokenSignal> t = {{1.0, 0.9}, {3.0, 0.4}};
  const SignalVector s = aggregate_token_signals(t);
  EXPECT_DOUBLE_EQ(s.mean_entropy_bits, 2.0);
  EXPECT_DOUBLE_EQ(s.mean_confidence, 0.65);
  EXPECT_EQ(s.max_entropy_bits, 3.0);
  EXPECT_EQ(s.min_confidence, 0.4);
}

TEST(Aggregate, IdenticalTokensCollapse) {
  const std::vector<double> p = {0.7, 0.2, 0.1};
  const std::vector<TokenDistribution> d(6, TokenDistribution(p));
  const SignalVector s = aggregate_signals(d);
  EXPECT_NEAR(s.mean_entropy_bits, s.max_entropy_bits, 1e-15);
  EXPECT_NEAR(s.mean_confidence, 0.7, 1e-15);
  EXPECT_EQ(s.min_confidence, 0.7);
}

TEST(Aggregate, EmptyStepRejected) {
  EXPECT_THROW(aggregate_token_signals(std::vector<TokenSignal>{}), InvalidArgument);
}

TEST(Aggregate, OrderingInvariantsOnRandomSteps) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> gamma(1, 8);
  for (int t = 0; t < 2000; ++t) {
    std::vector<TokenDistribution> d;
    const int g = gamma(rng);
    for (int i = 0; i < g; ++i) d.emplace_back(random_distribution(rng, 16));
    const SignalVector s = aggregate_signals(d);
    ASSERT_GE(s.max_entropy_bits, s.mean_entropy_bits);
    ASSERT_LE(s.min_confidence, s.mean_confidence);
  }
}

// ---- kernel variants ----

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (kernels::avx2_table() == nullptr || !kernels::cpu_supports_avx2()) GTEST_SKIP() << "no AVX2 on this host";
    simd_ = kernels::avx2_table();
  }
  const kernels::KernelTable& scalar_ = kernels::scalar_table();
  const kernels::KernelTable* simd_ = nullptr;
};

TEST_F(KernelEquivalence, EntropyStats) {
  std::mt19937_64 rng(21);
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 64u, 511u, 512u, 4099u}) {
    auto p = random_distribution(rng, std::max<std::size_t>(n, 1));
    if (n > 3) p[n / 2] = 0.0;  // exercise the p == 0 branch
    const auto a = scalar_.entropy_stats(p.data(), n);
    const auto b = simd_->entropy_stats(p.data(), n);
    EXPECT_NEAR(a.entropy_bits, b.entropy_bits, 1e-12 * std::max(1.0, a.entropy_bits)) << n;
    EXPECT_EQ(a.max, b.max) << n;
    EXPECT_EQ(a.min, b.min) << n;
    EXPECT_NEAR(a.sum, b.sum, 1e-14) << n;
  }
}

TEST_F(KernelEquivalence, SoftmaxTempered) {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> z(0.0, 3.0);
  for (std::size_t n : {1u, 3u, 4u, 6u, 13u, 512u, 1000u}) {
    std::vector<double> logits(n), a(n), b(n);
    for (double& v : logits) v = z(rng);
    for (double inv_t : {0.25, 1.0, 3.7}) {
      scalar_.softmax_tempered(logits.data(), n, inv_t, a.data());
      simd_->softmax_tempered(logits.data(), n, inv_t, b.data());
      for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(a[i], b[i], 1e-14 + 1e-12 * a[i]) << n << " " << i;
    }
  }
}

TEST_F(KernelEquivalence, DotAndGatherSum) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::size_t n : {0u, 1u, 5u, 8u, 9u, 33u, 1000u}) {
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = z(rng);
      b[i] = z(rng);
    }
    EXPECT_NEAR(scalar_.dot(a.data(), b.data(), n), simd_->dot(a.data(), b.data(), n), 1e-12);
  }
  std::vector<double> values(777);
  for (double& v : values) v = z(rng);
  std::uniform_int_distribution<std::uint32_t> pick(0, 776);
  for (std::size_t n : {0u, 1u, 3u, 4u, 17u, 1000u, 10001u}) {
    std::vector<std::uint32_t> idx(n);
    for (auto& i : idx) i = pick(rng);
    EXPECT_NEAR(scalar_.gather_sum(values.data(), idx.data(), n), simd_->gather_sum(values.data(), idx.data(), n),
                1e-10);
  }
}

TEST(KernelSelection, ScalarAlwaysAvailable) {
  const auto previous = kernels::active().isa;
  EXPECT_TRUE(kernels::select(kernels::Isa::kScalar));
  EXPECT_EQ(kernels::active().name, "scalar");
  EXPECT_NEAR(entropy_bits(TokenDistribution(uniform(8))), 3.0, 1e-12);
  kernels::select(previous);
}

TEST(KernelSelection, SignalsAgreeAcrossTables) {
  if (kernels::avx2_table() == nullptr || !kernels::cpu_supports_avx2()) GTEST_SKIP() << "no AVX2 on this host";
  const auto previous = kernels::active().isa;
  std::mt19937_64 rng(31);
  std::vector<std::vector<double>> ps;
  for (int i = 0; i < 50; ++i) ps.push_back(random_distribution(rng, 512));
  std::vector<TokenSignal> a, b;
  kernels::select(kernels::Isa::kScalar);
  for (const auto& p : ps) a.push_back(token_signal(p));
  kernels::select(kernels::Isa::kAvx2);
  for (const auto& p : ps) b.push_back(token_signal(p));
  kernels::select(previous);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_NEAR(a[i].entropy_bits, b[i].entropy_bits, 1e-12);
    EXPECT_EQ(a[i].confidence, b[i].confidence);
  }
}
