#include "speckv/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "speckv/errors.hpp"
#include "speckv/kernels.hpp"

namespace speckv {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// SplitMix64 stream; cheap to seed once per resample.
struct StreamRng {
  std::uint64_t state;
  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  std::uint32_t below(std::uint32_t n) {
    return static_cast<std::uint32_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }
};

unsigned resolve_threads(unsigned threads, int work) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  return std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::max(1, work / 64))));
}

// Bootstrap distribution of the mean of `values`, one entry per resample, sorted.
std::vector<double> resampled_means(std::span<const double> values, int resamples, std::uint64_t seed,
                                    unsigned threads) {
  const std::size_t n = values.size();
  std::vector<double> means(static_cast<std::size_t>(resamples));
  auto work = [&](int begin, int end) {
    std::vector<std::uint32_t> index(n);
    for (int r = begin; r < end; ++r) {
      StreamRng rng{splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(r) + 1))};
      for (auto& i : index) i = rng.below(static_cast<std::uint32_t>(n));
      means[r] = kernels::gather_sum(values, index) / static_cast<double>(n);
    }
  };
  const unsigned t = resolve_threads(threads, resamples);
  if (t == 1) {
    work(0, resamples);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (resamples + static_cast<int>(t) - 1) / static_cast<int>(t);
    for (unsigned i = 0; i < t; ++i) {
      const int b = static_cast<int>(i) * chunk;
      const int e = std::min(resamples, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  std::sort(means.begin(), means.end());
  return means;
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

Split stratified_split(std::span<const StepRecord> corpus, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw InvalidArgument("stratified_split: test_fraction must lie in (0, 1)");
  }
  std::map<std::pair<CompressionLevel, TaskCategory>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < corpus.size(); ++i) strata[{corpus[i].compression, corpus[i].task}].push_back(i);

  std::vector<bool> is_test(corpus.size(), false);
  for (auto& [key, rows] : strata) {
    if (rows.size() < 5) {
      throw InvalidArgument("stratified_split: stratum " + std::string(to_string(key.first)) + "/" +
                            std::string(to_string(key.second)) + " has " + std::to_string(rows.size()) +
                            " records, need >= 5");
    }
    const std::uint64_t stratum = index_of(key.first) * 16 + index_of(key.second);
    std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(stratum + 1)));
    for (std::size_t i = rows.size() - 1; i > 0; --i) std::swap(rows[i], rows[rng() % (i + 1)]);
    const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(rows.size())));
    for (std::size_t i = 0; i < n_test; ++i) is_test[rows[i]] = true;
  }
  Split s;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (is_test[i]) {
      s.test.push_back(corpus[i]);
      s.test_index.push_back(i);
    } else {
      s.train.push_back(corpus[i]);
    }
  }
  return s;
}

std::vector<double> score_policy(const GammaPolicy& policy, std::span<const StepRecord> test,
                                 const PredictorModel& scorer) {
  std::vector<double> out;
  out.reserve(test.size());
  for (const StepRecord& step : test) {
    const Gamma g = policy.choose(step);
    const double a = predict(scorer, featurize(step.signals, step.compression, g, scorer.standardizer));
    out.push_back(expected_tokens(a, g));
  }
  return out;
}

BootstrapResult paired_bootstrap(std::span<const double> a, std::span<const double> b, int resamples,
                                 std::uint64_t seed, unsigned threads) {
  if (a.size() != b.size()) {
    throw InvalidArgument("paired_bootstrap: length mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw InvalidArgument("paired_bootstrap: need at least 2 pairs");
  if (resamples < 1) throw InvalidArgument("paired_bootstrap: resamples must be >= 1");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];

  const std::vector<double> means = resampled_means(d, resamples, seed, threads);
  BootstrapResult r;
  r.resamples = resamples;
  r.mean_diff = mean_of(d);
  r.ci_low = std::min(quantile_sorted(means, 0.025), r.mean_diff);
  r.ci_high = std::max(quantile_sorted(means, 0.975), r.mean_diff);
  const auto at_most_zero = std::upper_bound(means.begin(), means.end(), 0.0) - means.begin();
  const auto at_least_zero = means.end() - std::lower_bound(means.begin(), means.end(), 0.0);
  const double p = 2.0 * static_cast<double>(std::min(at_most_zero, at_least_zero)) / resamples;
  r.p_value = std::clamp(p, 1.0 / resamples, 1.0);
  return r;
}

MeanInterval bootstrap_mean_ci(std::span<const double> values, int resamples, std::uint64_t seed, unsigned threads) {
  if (values.empty()) throw InvalidArgument("bootstrap_mean_ci: no values");
  MeanInterval m;
  m.mean = mean_of(values);
  if (values.size() == 1 || resamples < 1) {
    m.ci_low = m.ci_high = m.mean;
    return m;
  }
  const std::vector<double> means = resampled_means(values, resamples, seed, threads);
  m.ci_low = std::min(quantile_sorted(means, 0.025), m.mean);
  m.ci_high = std::max(quantile_sorted(means, 0.975), m.mean);
  return m;
}

double improvement_pct(double candidate_mean, double baseline_mean) {
  if (!(baseline_mean > 0.0)) throw InvalidArgument("improvement_pct: baseline mean must be positive");
  return 100.0 * (candidate_mean - baseline_mean) / baseline_mean;
}

double net_improvement_pct(double gross_pct, double overhead_ms, double step_time_ms) {
  if (!(step_time_ms > 0.0) || !(overhead_ms >= 0.0)) {
    throw InvalidArgument("net_improvement_pct: need step_time_ms > 0 and overhead_ms >= 0");
  }
  return gross_pct - 100.0 * overhead_ms / step_time_ms;
}

std::string normalize_policy_name(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == '-' || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

const PolicySummary* EvalReport::find(std::string_view policy) const {
  const std::string want = normalize_policy_name(policy);
  for (const PolicySummary& s : overall) {
    if (normalize_policy_name(s.policy) == want) return &s;
  }
  return nullptr;
}

EvalReport build_report(std::vector<PolicyScores> scores, std::span<const StepRecord> labels,
                        const ReportOptions& options) {
  for (const PolicyScores& p : scores) {
    if (p.scores.size() != labels.size()) {
      throw InvalidArgument("build_report: policy '" + p.policy + "' has " + std::to_string(p.scores.size()) +
                            " scores for " + std::to_string(labels.size()) + " steps");
    }
  }
  EvalReport r;
  r.options = options;
  r.labels.assign(labels.begin(), labels.end());

  const PolicyScores* fixed4 = nullptr;
  const PolicyScores* fast = nullptr;
  for (const PolicyScores& p : scores) {
    const std::string n = normalize_policy_name(p.policy);
    if (n == "fixed4") fixed4 = &p;
    if (n == "speckvfast") fast = &p;
  }
  const double fixed4_mean = fixed4 && !labels.empty() ? mean_of(fixed4->scores) : 0.0;

  for (std::size_t pi = 0; pi < scores.size(); ++pi) {
    const PolicyScores& p = scores[pi];
    const std::uint64_t policy_seed = splitmix64(options.seed ^ splitmix64(pi + 101));
    for (CompressionLevel c : kAllCompressions) {
      std::vector<double> comp_values;
      for (TaskCategory t : kAllTasks) {
        double sum = 0.0;
        std::int64_t count = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
          if (labels[i].compression != c || labels[i].task != t) continue;
          sum += p.scores[i];
          ++count;
          comp_values.push_back(p.scores[i]);
        }
        if (count > 0) r.cells.push_back({p.policy, c, t, sum / static_cast<double>(count), count});
      }
      if (!comp_values.empty()) {
        r.per_compression.push_back(
            {p.policy, c,
             bootstrap_mean_ci(comp_values, options.resamples, splitmix64(policy_seed + index_of(c) + 1),
                               options.threads),
             static_cast<std::int64_t>(comp_values.size())});
      }
    }
    PolicySummary s;
    s.policy = p.policy;
    s.count = static_cast<std::int64_t>(p.scores.size());
    s.overhead_ms = p.overhead_ms;
    if (!p.scores.empty()) {
      s.interval = bootstrap_mean_ci(p.scores, options.resamples, policy_seed, options.threads);
      if (fixed4 && fixed4_mean > 0.0) {
        s.improvement_pct = improvement_pct(s.interval.mean, fixed4_mean);
        s.net_improvement_pct = net_improvement_pct(*s.improvement_pct, p.overhead_ms, options.step_time_ms);
      }
    }
    r.overall.push_back(std::move(s));
  }
  if (fast && fixed4 && labels.size() >= 2) {
    r.fast_vs_fixed4 = paired_bootstrap(fast->scores, fixed4->scores, options.resamples, options.seed, options.threads);
  }
  r.scores = std::move(scores);
  return r;
}

const std::vector<std::string>& known_policy_names() {
  static const std::vector<std::string> names = {"fixed-2",     "fixed-4",    "fixed-6",     "fixed-8",
                                                 "fixed-best",  "task-oracle", "speckv-fast", "speckv-accurate"};
  return names;
}

const std::vector<std::string>& default_policy_names() {
  static const std::vector<std::string> names = {"fixed-4", "fixed-best", "task-oracle", "speckv-fast",
                                                 "speckv-accurate"};
  return names;
}

EvalReport evaluate_policies(std::span<const StepRecord> test, const std::vector<std::string>& policies,
                             const EvaluationInputs& inputs, const ReportOptions& options,
                             const std::map<std::string, double>& overhead_ms) {
  std::vector<std::string> canonical;
  for (const std::string& name : policies) {
    const std::string n = normalize_policy_name(name);
    auto it = std::find_if(known_policy_names().begin(), known_policy_names().end(),
                           [&](const std::string& k) { return normalize_policy_name(k) == n; });
    if (it == known_policy_names().end()) {
      std::string valid;
      for (const std::string& k : known_policy_names()) valid += (valid.empty() ? "" : ", ") + k;
      throw UsageError("unknown policy '" + name + "'; valid policies: " + valid);
    }
    if (std::find(canonical.begin(), canonical.end(), *it) == canonical.end()) canonical.push_back(*it);
  }
  if (canonical.empty()) throw UsageError("no policies selected");

  const PredictorModel* scorer = inputs.score_with_accurate ? inputs.accurate.get() : inputs.fast.get();
  if (!scorer) {
    throw InvalidArgument(std::string("evaluate_policies: the ") + (inputs.score_with_accurate ? "accurate" : "fast") +
                          " model is required as scorer");
  }

  std::vector<PolicyScores> scores;
  for (const std::string& name : canonical) {
    std::unique_ptr<GammaPolicy> policy;
    if (name.starts_with("fixed-") && name != "fixed-best") {
      policy = fixed_policy(Gamma(std::stoi(name.substr(6))));
    } else if (name == "fixed-best" || name == "task-oracle") {
      if (!inputs.profile) throw InvalidArgument("evaluate_policies: policy '" + name + "' needs a profile table");
      policy = name == "fixed-best" ? fixed_best_policy(*inputs.profile) : task_oracle_policy(*inputs.profile);
    } else {
      const auto& model = name == "speckv-fast" ? inputs.fast : inputs.accurate;
      if (!model) throw InvalidArgument("evaluate_policies: policy '" + name + "' needs a decision model");
      policy = speckv_policy(model, name);
    }
    PolicyScores ps;
    ps.policy = name;
    ps.scores = score_policy(*policy, test, *scorer);
    if (auto it = overhead_ms.find(name); it != overhead_ms.end()) ps.overhead_ms = it->second;
    scores.push_back(std::move(ps));
  }
  return build_report(std::move(scores), test, options);
}

}  // namespace speckv
