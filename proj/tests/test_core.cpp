#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "speckv/core.hpp"
#include "speckv/errors.hpp"

using namespace speckv;

TEST(VerifyGreedy, IdenticalSequencesAcceptAll) {
  const std::vector<std::int64_t> a = {5, 9, 2, 7};
  EXPECT_EQ(verify_greedy(a, a), 4);
}

TEST(VerifyGreedy, StopsAtFirstMismatch) {
  const std::vector<std::int64_t> a = {5, 9, 2, 7}, b = {5, 9, 3, 7};
  EXPECT_EQ(verify_greedy(a, b), 2);
}

TEST(VerifyGreedy, ImmediateRejection) {
  const std::vector<std::int64_t> a = {5}, b = {6};
  EXPECT_EQ(verify_greedy(a, b), 0);
}

TEST(VerifyGreedy, RejectsEmptyAndMismatchedLengths) {
  const std::vector<std::int64_t> empty, one = {1}, two = {1, 2};
  EXPECT_THROW(verify_greedy(empty, empty), InvalidArgument);
  EXPECT_THROW(verify_greedy(one, two), InvalidArgument);
}

TEST(VerifyGreedy, MatchesNaiveOracleOnRandomPairs) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1, 8);
  std::uniform_int_distribution<std::int64_t> tok(0, 3);
  for (int t = 0; t < 10000; ++t) {
    const int n = len(rng);
    std::vector<std::int64_t> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = tok(rng);
      b[i] = tok(rng) == 0 ? tok(rng) : a[i];
    }
    ASSERT_EQ(verify_greedy(a, b), oracle::naive_prefix(a, b));
  }
}

TEST(StepOutcome, FullAcceptance) {
  const StepOutcome o = step_outcome(Gamma(4), 4);
  EXPECT_EQ(o.tokens_produced, 5);
  EXPECT_EQ(o.acceptance_rate, 1.0);
}

TEST(StepOutcome, FullRejectionStillYieldsOneToken) {
  const StepOutcome o = step_outcome(Gamma(4), 0);
  EXPECT_EQ(o.tokens_produced, 1);
  EXPECT_EQ(o.acceptance_rate, 0.0);
}

TEST(StepOutcome, PartialAcceptance) {
  const StepOutcome o = step_outcome(Gamma(8), 5);
  EXPECT_EQ(o.tokens_produced, 6);
  EXPECT_DOUBLE_EQ(o.acceptance_rate, 0.625);
}

TEST(StepOutcome, ExhaustiveSmallGrid) {
  for (int g = 1; g <= 8; ++g) {
    for (int k = 0; k <= g; ++k) {
      const StepOutcome o = step_outcome(Gamma(g), k);
      EXPECT_EQ(o.tokens_produced, k + 1);
      EXPECT_EQ(o.acceptance_rate, static_cast<double>(k) / g);
    }
  }
}

TEST(StepOutcome, RejectsOutOfRange) {
  EXPECT_THROW(step_outcome(Gamma(4), 5), InvalidArgument);
  EXPECT_THROW(step_outcome(Gamma(4), -1), InvalidArgument);
  EXPECT_THROW(Gamma(0), InvalidArgument);
}

TEST(Names, RoundTripAndCaseInsensitive) {
  for (CompressionLevel c : kAllCompressions) EXPECT_EQ(parse_compression(to_string(c)), c);
  for (TaskCategory t : kAllTasks) EXPECT_EQ(parse_task(to_string(t)), t);
  EXPECT_EQ(parse_compression("INT8"), CompressionLevel::kInt8);
  EXPECT_EQ(parse_task("Summarization"), TaskCategory::kSummarization);
  EXPECT_THROW(parse_compression("int4"), InvalidArgument);
}

TEST(ValidateRecord, CatchesBrokenInvariants) {
  StepRecord r;
  r.experiment_id = "x";
  r.gamma = Gamma(4);
  r.outcome = step_outcome(Gamma(4), 2);
  r.signals = {1.0, 0.6, 1.5, 0.4};
  EXPECT_NO_THROW(validate_record(r));

  StepRecord bad = r;
  bad.outcome.accepted = 5;
  EXPECT_THROW(validate_record(bad), ValidationError);
  bad = r;
  bad.signals.max_entropy_bits = 0.5;  // below the mean
  EXPECT_THROW(validate_record(bad), ValidationError);
  bad = r;
  bad.signals.min_confidence = 0.9;  // above the mean
  EXPECT_THROW(validate_record(bad), ValidationError);
}
