#include "speckv/policy.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "speckv/errors.hpp"

namespace speckv {

double expected_tokens(double a_hat, Gamma gamma) {
  if (!(a_hat >= 0.0 && a_hat <= 1.0)) {
    throw InvalidArgument("expected_tokens: acceptance estimate " + std::to_string(a_hat) + " outside [0, 1]");
  }
  return a_hat * gamma.value() + 1.0;
}

void check_candidates(std::span<const int> candidates) {
  if (candidates.empty()) throw InvalidArgument("candidate set is empty");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!is_candidate_gamma(candidates[i])) {
      throw InvalidArgument("candidate gamma " + std::to_string(candidates[i]) + " is not in {2,4,6,8}");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (candidates[j] == candidates[i]) throw InvalidArgument("duplicate candidate gamma " + std::to_string(candidates[i]));
    }
  }
}

PolicyDecision choose_from_predictions(std::span<const int> candidates, std::span<const double> a_hat,
                                       std::string policy_name) {
  check_candidates(candidates);
  if (a_hat.size() != candidates.size()) throw InvalidArgument("one prediction per candidate required");
  PolicyDecision d;
  d.policy_name = std::move(policy_name);
  d.candidates.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Gamma g(candidates[i]);
    d.candidates.push_back({g, a_hat[i], expected_tokens(a_hat[i], g)});
  }
  const CandidateEvaluation* best = &d.candidates.front();
  for (const CandidateEvaluation& c : d.candidates) {
    if (c.expected_tokens > best->expected_tokens ||
        (c.expected_tokens == best->expected_tokens && c.gamma < best->gamma)) {
      best = &c;
    }
  }
  d.chosen_gamma = best->gamma;
  return d;
}

PolicyDecision select_gamma(const PredictorModel& model, const SignalVector& signals, CompressionLevel compression,
                            std::span<const int> candidates) {
  check_candidates(candidates);
  std::vector<double> a(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    a[i] = predict(model, featurize(signals, compression, Gamma(candidates[i]), model.standardizer));
  }
  return choose_from_predictions(candidates, a, model.variant);
}

std::string_view to_string(ProfileObjective objective) noexcept {
  return objective == ProfileObjective::kThroughput ? "throughput" : "expected-tokens";
}

ProfileObjective parse_profile_objective(std::string_view s) {
  if (s == "expected-tokens" || s == "tokens") return ProfileObjective::kExpectedTokens;
  if (s == "throughput") return ProfileObjective::kThroughput;
  throw InvalidArgument("unknown profile objective '" + std::string(s) + "' (expected-tokens | throughput)");
}

namespace {

struct Accumulator {
  double sum = 0.0;
  std::int64_t count = 0;
};

template <typename Key>
ProfileEntry best_of(const std::map<std::pair<Key, int>, Accumulator>& cells, const Key& key,
                     std::span<const int> candidates) {
  std::vector<int> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  ProfileEntry best{sorted.front(), -1.0};
  bool first = true;
  for (int g : sorted) {
    const Accumulator& a = cells.at({key, g});
    const double mean = a.sum / static_cast<double>(a.count);
    if (first || mean > best.objective) {
      best = {g, mean};
      first = false;
    }
  }
  return best;
}

}  // namespace

ProfileTable build_profile(std::span<const StepRecord> corpus, ProfileObjective objective, const CostModel* cost,
                           std::span<const int> candidates) {
  check_candidates(candidates);
  if (objective == ProfileObjective::kThroughput && cost == nullptr) {
    throw InvalidArgument("build_profile: the throughput objective needs a cost model");
  }
  using TaskKey = std::pair<CompressionLevel, TaskCategory>;
  std::map<std::pair<CompressionLevel, int>, Accumulator> by_comp;
  std::map<std::pair<TaskKey, int>, Accumulator> by_task;
  std::map<CompressionLevel, bool> comps;
  std::map<TaskKey, bool> tasks;
  for (const StepRecord& r : corpus) {
    comps[r.compression] = true;
    tasks[{r.compression, r.task}] = true;
    const int g = r.gamma.value();
    if (std::find(candidates.begin(), candidates.end(), g) == candidates.end()) continue;
    double value = r.outcome.tokens_produced;
    if (objective == ProfileObjective::kThroughput) {
      value = throughput_toks_per_s(value, step_latency_ms(*cost, r.compression, r.gamma));
    }
    auto& a = by_comp[{r.compression, g}];
    a.sum += value;
    ++a.count;
    auto& b = by_task[{{r.compression, r.task}, g}];
    b.sum += value;
    ++b.count;
  }
  if (comps.empty()) throw IncompleteProfileError("build_profile: empty corpus");

  std::vector<std::string> missing;
  for (const auto& [c, _] : comps) {
    for (int g : candidates) {
      if (!by_comp.count({c, g})) missing.push_back(std::string(to_string(c)) + "/g" + std::to_string(g));
    }
  }
  for (const auto& [k, _] : tasks) {
    for (int g : candidates) {
      if (!by_task.count({k, g})) {
        missing.push_back(std::string(to_string(k.first)) + "/" + std::string(to_string(k.second)) + "/g" +
                          std::to_string(g));
      }
    }
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "build_profile: no records for";
    for (const std::string& m : missing) msg << ' ' << m;
    throw IncompleteProfileError(msg.str());
  }

  ProfileTable t;
  t.objective = objective;
  for (const auto& [c, _] : comps) t.fixed_best[c] = best_of(by_comp, c, candidates);
  for (const auto& [k, _] : tasks) t.task_oracle[k] = best_of(by_task, k, candidates);
  return t;
}

namespace {

class FixedPolicy final : public GammaPolicy {
 public:
  explicit FixedPolicy(Gamma g) : gamma_(g), name_("fixed-" + std::to_string(g.value())) {}
  const std::string& name() const noexcept override { return name_; }
  Gamma choose(const StepRecord&) const override { return gamma_; }

 private:
  Gamma gamma_;
  std::string name_;
};

class FixedBestPolicy final : public GammaPolicy {
 public:
  explicit FixedBestPolicy(ProfileTable p) : profile_(std::move(p)) {}
  const std::string& name() const noexcept override { return name_; }
  Gamma choose(const StepRecord& step) const override {
    auto it = profile_.fixed_best.find(step.compression);
    if (it == profile_.fixed_best.end()) {
      throw IncompleteProfileError("fixed-best: profile has no entry for " + std::string(to_string(step.compression)));
    }
    return Gamma(it->second.gamma);
  }

 private:
  ProfileTable profile_;
  std::string name_ = "fixed-best";
};

class TaskOraclePolicy final : public GammaPolicy {
 public:
  explicit TaskOraclePolicy(ProfileTable p) : profile_(std::move(p)) {}
  const std::string& name() const noexcept override { return name_; }
  Gamma choose(const StepRecord& step) const override {
    auto it = profile_.task_oracle.find({step.compression, step.task});
    if (it == profile_.task_oracle.end()) {
      throw IncompleteProfileError("task-oracle: profile has no entry for " + std::string(to_string(step.compression)) +
                                   "/" + std::string(to_string(step.task)));
    }
    return Gamma(it->second.gamma);
  }

 private:
  ProfileTable profile_;
  std::string name_ = "task-oracle";
};

class SpecKvPolicy final : public GammaPolicy {
 public:
  SpecKvPolicy(std::shared_ptr<const PredictorModel> m, std::string name) : model_(std::move(m)), name_(std::move(name)) {
    if (!model_) throw InvalidArgument("speckv policy needs a model");
    if (!model_->standardizer.fitted()) throw StateError("speckv policy: model '" + model_->variant + "' has no fitted standardizer");
  }
  const std::string& name() const noexcept override { return name_; }
  Gamma choose(const StepRecord& step) const override {
    return select_gamma(*model_, step.signals, step.compression).chosen_gamma;
  }

 private:
  std::shared_ptr<const PredictorModel> model_;
  std::string name_;
};

}  // namespace

std::unique_ptr<GammaPolicy> fixed_policy(Gamma gamma) {
  if (!is_candidate_gamma(gamma.value())) {
    throw InvalidArgument("fixed policy: gamma " + std::to_string(gamma.value()) + " is not in {2,4,6,8}");
  }
  return std::make_unique<FixedPolicy>(gamma);
}

std::unique_ptr<GammaPolicy> fixed_best_policy(ProfileTable profile) {
  return std::make_unique<FixedBestPolicy>(std::move(profile));
}

std::unique_ptr<GammaPolicy> task_oracle_policy(ProfileTable profile) {
  return std::make_unique<TaskOraclePolicy>(std::move(profile));
}

std::unique_ptr<GammaPolicy> speckv_policy(std::shared_ptr<const PredictorModel> model, std::string name) {
  return std::make_unique<SpecKvPolicy>(std::move(model), std::move(name));
}

OverheadMeasurement measure_overhead(const PredictorModel& model, std::span<const StepRecord> inputs,
                                     std::int64_t n_decisions, int repetitions) {
  if (n_decisions < 1000) {
    throw InvalidArgument("measure_overhead: n_decisions must be >= 1000, got " + std::to_string(n_decisions));
  }
  if (repetitions < 5) throw InvalidArgument("measure_overhead: repetitions must be >= 5");
  std::vector<std::pair<SignalVector, CompressionLevel>> contexts;
  for (const StepRecord& r : inputs) contexts.emplace_back(r.signals, r.compression);
  if (contexts.empty()) {
    const auto m = model.standardizer.mean();
    contexts.emplace_back(SignalVector{m[0], m[1], m[2], m[3]}, CompressionLevel::kFp16);
  }

  OverheadMeasurement out;
  out.n_decisions = n_decisions;
  volatile int sink = 0;
  using Clock = std::chrono::steady_clock;
  for (int rep = 0; rep < repetitions; ++rep) {
    const auto start = Clock::now();
    for (std::int64_t i = 0; i < n_decisions; ++i) {
      const auto& [signals, comp] = contexts[static_cast<std::size_t>(i) % contexts.size()];
      sink = sink + select_gamma(model, signals, comp).chosen_gamma.value();
    }
    const double us = std::chrono::duration<double, std::micro>(Clock::now() - start).count();
    out.per_repetition_us.push_back(us / static_cast<double>(n_decisions));
  }
  std::vector<double> sorted = out.per_repetition_us;
  std::sort(sorted.begin(), sorted.end());
  out.min_us = sorted.front();
  const std::size_t mid = sorted.size() / 2;
  out.median_us = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return out;
}

}  // namespace speckv
