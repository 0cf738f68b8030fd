#include "speckv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

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

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

struct Site {
  double draft_difficulty;
  double target_difficulty;
  double agreement_draw;
  TokenSignal signal;
};

// Draws the draft distribution for one position and reduces it to its entropy and top-1 mass.
class DraftSampler {
 public:
  explicit DraftSampler(const WorldParams& world) : world_(world), logits_(world.vocab_size), probs_(world.vocab_size) {
    base_.resize(world.vocab_size);
    for (int v = 0; v < world.vocab_size; ++v) base_[v] = -world.logit_zipf_exponent * std::log(v + 1.0);
  }

  TokenSignal draw(double difficulty, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t v = 0; v < logits_.size(); ++v) logits_[v] = base_[v] + world_.logit_noise * noise(rng);
    const double temperature = world_.base_temperature * (1.0 + world_.entropy_coupling * difficulty);
    kernels::softmax_tempered(logits_, 1.0 / temperature, probs_);
    return token_signal(probs_);
  }

 private:
  const WorldParams& world_;
  std::vector<double> base_;
  std::vector<double> logits_;
  std::vector<double> probs_;
};

double draw_difficulty(const DifficultyMixture& mix, bool easy, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return easy ? clamp01(mix.easy_mean + mix.easy_sd * normal(rng)) : clamp01(mix.hard_mean + mix.hard_sd * normal(rng));
}

Site draw_site(const WorldParams& world, DraftSampler& sampler, double difficulty, bool target_noise,
               std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Site site{};
  site.draft_difficulty = difficulty;
  site.target_difficulty = target_noise ? clamp01(difficulty + world.target_noise * normal(rng)) : difficulty;
  site.agreement_draw = uniform(rng);
  site.signal = sampler.draw(difficulty, rng);
  return site;
}

// Accepted prefix over sites [0, gamma) and the step's aggregate signals.
std::pair<int, SignalVector> speculate(const WorldParams& world, std::span<const Site> window,
                                       CompressionLevel compression) {
  int accepted = 0;
  while (accepted < static_cast<int>(window.size()) &&
         window[accepted].agreement_draw <
             agreement_probability(world, window[accepted].target_difficulty, compression)) {
    ++accepted;
  }
  std::vector<TokenSignal> tokens;
  tokens.reserve(window.size());
  for (const Site& s : window) tokens.push_back(s.signal);
  return {accepted, aggregate_token_signals(tokens)};
}

class PromptSequence {
 public:
  PromptSequence(const WorldParams& world, TaskCategory task, int prompt)
      : world_(world),
        mix_(world.difficulty[index_of(task)]),
        rng_(splitmix64(world.seed ^ splitmix64(0x51ED0000ULL + index_of(task) * 1024 + prompt))) {
    std::bernoulli_distribution start(mix_.easy_weight);
    easy_ = start(rng_);
  }

  std::span<const Site> window(DraftSampler& sampler, std::size_t pos, std::size_t len) {
    while (sites_.size() < pos + len) {
      std::uniform_real_distribution<double> uniform(0.0, 1.0);
      if (uniform(rng_) >= world_.regime_persistence) easy_ = uniform(rng_) < mix_.easy_weight;
      const double d = draw_difficulty(mix_, easy_, rng_);
      sites_.push_back(draw_site(world_, sampler, d, true, rng_));
    }
    return std::span<const Site>(sites_).subspan(pos, len);
  }

 private:
  const WorldParams& world_;
  DifficultyMixture mix_;
  std::mt19937_64 rng_;
  bool easy_ = true;
  std::vector<Site> sites_;
};

}  // namespace

void validate(const WorldParams& w) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw InvalidArgument("world." + field + ": " + why);
  };
  if (w.vocab_size < 2 || w.vocab_size > 128256) fail("vocab_size", "must lie in [2, 128256]");
  if (!(w.agreement_slope > 0.0)) fail("agreement_slope", "must be > 0");
  if (!(w.entropy_coupling > 0.0)) fail("entropy_coupling", "must be > 0");
  if (!(w.base_temperature > 0.0)) fail("base_temperature", "must be > 0");
  if (!(w.logit_zipf_exponent >= 0.0)) fail("logit_zipf_exponent", "must be >= 0");
  if (!(w.logit_noise >= 0.0)) fail("logit_noise", "must be >= 0");
  if (!(w.target_noise >= 0.0)) fail("target_noise", "must be >= 0");
  if (!(w.regime_persistence >= 0.0 && w.regime_persistence <= 1.0)) fail("regime_persistence", "must lie in [0, 1]");
  if (w.prompts_per_task < 1) fail("prompts_per_task", "must be >= 1");
  for (TaskCategory t : kAllTasks) {
    const DifficultyMixture& m = w.difficulty[index_of(t)];
    const std::string name = "difficulty." + std::string(to_string(t));
    if (!(m.easy_weight >= 0.0 && m.easy_weight <= 1.0)) fail(name + ".easy_weight", "must lie in [0, 1]");
    if (!(m.easy_sd >= 0.0) || !(m.hard_sd >= 0.0)) fail(name, "spreads must be >= 0");
    if (!std::isfinite(m.easy_mean) || !std::isfinite(m.hard_mean)) fail(name, "means must be finite");
  }
  for (double off : w.compression_agreement_offset) {
    if (!(std::fabs(off) < 0.5)) fail("compression_agreement_offset", "must lie in (-0.5, 0.5)");
  }
}

void validate(const CostModel& cost) {
  for (CompressionLevel c : kAllCompressions) {
    const LatencyCoefficients& k = cost.per_compression[index_of(c)];
    if (!(k.base_ms > 0.0) || !(k.per_gamma_ms > 0.0)) {
      throw InvalidArgument("cost." + std::string(to_string(c)) + ": base_ms and per_gamma_ms must be > 0");
    }
  }
  if (!(cost.controller_overhead_ms >= 0.0)) throw InvalidArgument("cost.controller_overhead_ms must be >= 0");
}

double step_latency_ms(const CostModel& cost, CompressionLevel compression, Gamma gamma) {
  const LatencyCoefficients& k = cost.per_compression[index_of(compression)];
  return k.base_ms + k.per_gamma_ms * gamma.value();
}

double throughput_toks_per_s(double expected_tokens, double latency_ms) {
  if (!(latency_ms > 0.0)) throw InvalidArgument("latency must be positive, got " + std::to_string(latency_ms));
  return 1000.0 * expected_tokens / latency_ms;
}

double agreement_probability(const WorldParams& world, double difficulty, CompressionLevel compression) {
  const double p = 1.0 - world.agreement_slope * difficulty + world.compression_agreement_offset[index_of(compression)];
  return std::clamp(p, 0.01, 0.99);
}

StepRecord sample_step(const WorldParams& world, TaskCategory task, CompressionLevel compression, Gamma gamma,
                       std::mt19937_64& rng, std::optional<double> forced_difficulty) {
  DraftSampler sampler(world);
  const DifficultyMixture& mix = world.difficulty[index_of(task)];
  double d = 0.0;
  if (forced_difficulty) {
    if (!(*forced_difficulty >= 0.0 && *forced_difficulty <= 1.0)) {
      throw InvalidArgument("forced difficulty must lie in [0, 1]");
    }
    d = *forced_difficulty;
  } else {
    std::bernoulli_distribution easy(mix.easy_weight);
    d = draw_difficulty(mix, easy(rng), rng);
  }
  std::vector<Site> sites;
  sites.reserve(gamma.value());
  for (int i = 0; i < gamma.value(); ++i) sites.push_back(draw_site(world, sampler, d, !forced_difficulty, rng));
  auto [accepted, signals] = speculate(world, sites, compression);

  StepRecord r;
  r.experiment_id = std::string(to_string(task)) + "-" + std::string(to_string(compression)) + "-g" +
                    std::to_string(gamma.value()) + "-sampled";
  r.compression = compression;
  r.task = task;
  r.gamma = gamma;
  r.outcome = step_outcome(gamma, accepted);
  r.signals = signals;
  return r;
}

std::vector<PlanCell> full_grid_plan(int steps_per_cell) {
  std::vector<PlanCell> plan;
  for (CompressionLevel c : kAllCompressions) {
    for (TaskCategory t : kAllTasks) {
      for (int g : kCandidateGammas) plan.push_back({t, c, Gamma(g), steps_per_cell});
    }
  }
  return plan;
}

std::vector<StepRecord> generate_corpus(const WorldParams& world, const std::vector<PlanCell>& plan,
                                        const CostModel* cost) {
  validate(world);
  if (cost) validate(*cost);
  if (plan.empty()) throw InvalidArgument("generate_corpus: empty plan");
  for (const PlanCell& cell : plan) {
    if (cell.steps < 0) throw InvalidArgument("generate_corpus: negative step count");
  }

  DraftSampler sampler(world);
  std::map<std::pair<std::size_t, int>, PromptSequence> prompts;
  auto sequence = [&](TaskCategory t, int p) -> PromptSequence& {
    auto key = std::make_pair(index_of(t), p);
    auto it = prompts.find(key);
    if (it == prompts.end()) it = prompts.emplace(key, PromptSequence(world, t, p)).first;
    return it->second;
  };
  // Materialize sequences in a fixed order so the result does not depend on plan order.
  for (TaskCategory t : kAllTasks) {
    for (int p = 0; p < world.prompts_per_task; ++p) sequence(t, p);
  }

  std::vector<StepRecord> out;
  const int prompts_per_task = world.prompts_per_task;
  for (const PlanCell& cell : plan) {
    const int g = cell.gamma.value();
    for (int p = 0; p < prompts_per_task; ++p) {
      const int steps = cell.steps / prompts_per_task + (p < cell.steps % prompts_per_task ? 1 : 0);
      PromptSequence& seq = sequence(cell.task, p);
      const std::string id = std::string(to_string(cell.task)) + "-" + std::string(to_string(cell.compression)) +
                             "-g" + std::to_string(g) + "-p" + std::to_string(p);
      std::size_t pos = 0;
      for (int s = 0; s < steps; ++s) {
        auto [accepted, signals] = speculate(world, seq.window(sampler, pos, g), cell.compression);
        StepRecord r;
        r.experiment_id = id;
        r.compression = cell.compression;
        r.task = cell.task;
        r.gamma = cell.gamma;
        r.step_index = s;
        r.outcome = step_outcome(cell.gamma, accepted);
        r.signals = signals;
        if (cost) r.step_latency_ms = step_latency_ms(*cost, cell.compression, cell.gamma);
        out.push_back(std::move(r));
        pos += static_cast<std::size_t>(accepted) + 1;
      }
    }
  }
  return out;
}

std::array<std::array<double, 4>, 3> mean_throughput_table(const std::vector<StepRecord>& corpus, const CostModel& cost) {
  std::array<std::array<double, 4>, 3> sum{};
  std::array<std::array<int, 4>, 3> count{};
  for (const StepRecord& r : corpus) {
    const auto gi = std::find(kCandidateGammas.begin(), kCandidateGammas.end(), r.gamma.value());
    if (gi == kCandidateGammas.end()) continue;
    const std::size_t g = gi - kCandidateGammas.begin();
    const std::size_t c = index_of(r.compression);
    sum[c][g] += throughput_toks_per_s(r.outcome.tokens_produced, step_latency_ms(cost, r.compression, r.gamma));
    ++count[c][g];
  }
  std::array<std::array<double, 4>, 3> out{};
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t g = 0; g < 4; ++g) {
      out[c][g] = count[c][g] ? sum[c][g] / count[c][g] : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

const std::vector<ThroughputTarget>& default_throughput_targets() {
  using C = CompressionLevel;
  using T = TaskCategory;
  static const std::vector<ThroughputTarget> targets = {
      {C::kFp16, T::kCode, 2, 64.7}, {C::kFp16, T::kMath, 4, 69.2},
      {C::kFp16, T::kChat, 2, 61.5}, {C::kFp16, T::kSummarization, 2, 63.3},
      {C::kInt8, T::kCode, 8, 33.0}, {C::kInt8, T::kMath, 8, 38.6},
      {C::kInt8, T::kChat, 6, 25.7}, {C::kInt8, T::kSummarization, 6, 29.6},
      {C::kNf4, T::kCode, 4, 48.9},  {C::kNf4, T::kMath, 6, 57.7},
      {C::kNf4, T::kChat, 4, 43.1},  {C::kNf4, T::kSummarization, 4, 47.5},
  };
  return targets;
}

CostCalibration calibrate_cost_model(const std::vector<StepRecord>& corpus, const std::vector<ThroughputTarget>& targets,
                                     double per_gamma_ms, double anchor_ms_fp16_gamma4) {
  if (!(per_gamma_ms > 0.0) || !(anchor_ms_fp16_gamma4 > 0.0)) {
    throw InvalidArgument("calibrate_cost_model: per_gamma_ms and anchor must be positive");
  }
  std::array<double, 3> base_sum{};
  std::array<int, 3> base_n{};
  for (const ThroughputTarget& t : targets) {
    double tokens = 0.0;
    int n = 0;
    for (const StepRecord& r : corpus) {
      if (r.compression == t.compression && r.task == t.task && r.gamma.value() == t.best_gamma) {
        tokens += r.outcome.tokens_produced;
        ++n;
      }
    }
    if (n == 0) {
      throw IncompleteProfileError("calibrate_cost_model: corpus has no records for " +
                                   std::string(to_string(t.compression)) + "/" + std::string(to_string(t.task)) +
                                   "/g" + std::to_string(t.best_gamma));
    }
    const double latency = 1000.0 * (tokens / n) / t.toks_per_s;
    // With the slope fixed, the least-squares intercept is the mean of the per-target residuals.
    base_sum[index_of(t.compression)] += latency - per_gamma_ms * t.best_gamma;
    ++base_n[index_of(t.compression)];
  }

  CostCalibration out;
  for (std::size_t c = 0; c < 3; ++c) {
    if (base_n[c] == 0) throw IncompleteProfileError("calibrate_cost_model: no target for a compression level");
    out.raw_base_ms[c] = base_sum[c] / base_n[c];
  }
  out.anchor_shift_ms = anchor_ms_fp16_gamma4 - (out.raw_base_ms[0] + 4.0 * per_gamma_ms);
  for (std::size_t c = 0; c < 3; ++c) {
    out.cost.per_compression[c].base_ms = out.raw_base_ms[c] + out.anchor_shift_ms;
    out.cost.per_compression[c].per_gamma_ms = per_gamma_ms;
    if (!(out.cost.per_compression[c].base_ms > 0.0)) {
      throw NumericError("calibrate_cost_model: anchored base latency is not positive");
    }
  }
  return out;
}

}  // namespace speckv
