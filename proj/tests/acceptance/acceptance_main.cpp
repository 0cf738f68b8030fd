// Acceptance runner: one PASS/FAIL/SKIP line per criterion, non-zero exit if anything fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "speckv/errors.hpp"
#include "speckv/eval.hpp"
#include "speckv/io.hpp"
#include "speckv/kernels.hpp"
#include "speckv/policy.hpp"
#include "speckv/predictor.hpp"
#include "speckv/signals.hpp"
#include "speckv/synth.hpp"

using namespace speckv;
namespace fs = std::filesystem;

namespace {

enum class Verdict { kPass, kFail, kSkip };

struct Outcome {
  Verdict verdict = Verdict::kPass;
  std::string detail;
};

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  Outcome result() const {
    if (failures_.empty()) return {Verdict::kPass, notes_};
    std::string d;
    for (const auto& f : failures_) d += (d.empty() ? "" : "; ") + f;
    return {Verdict::kFail, d + (notes_.empty() ? "" : " | " + notes_)};
  }

 private:
  std::vector<std::string> failures_;
  std::string notes_;
};

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Shared state built once: the default corpus, its split, and the five trained predictors.
struct World {
  std::vector<StepRecord> corpus;
  Split split;
  std::map<std::string, std::shared_ptr<const PredictorModel>> models;
  std::map<std::string, PredictorMetrics> metrics;

  static World& get() {
    static World w = [] {
      World x;
      const RunConfig cfg;
      x.corpus = generate_corpus(cfg.world, full_grid_plan(cfg.steps_per_cell), &cfg.cost);
      x.split = stratified_split(x.corpus, cfg.split);
      return x;
    }();
    return w;
  }

  const PredictorModel& model(const std::string& v) {
    if (!models.count(v)) {
      const RunConfig cfg;
      auto m = std::make_shared<PredictorModel>(train_variant(v, split.train, cfg.train, cfg.seed));
      metrics[v] = eval_metrics(*m, make_dataset(split.test, m->standardizer));
      models[v] = std::move(m);
    }
    return *models[v];
  }
};

// ---- 1 ----
Outcome core_semantics() {
  Checker c;
  int bad = 0;
  for (int g = 1; g <= 8; ++g) {
    for (int k = 0; k <= g; ++k) {
      const StepOutcome o = step_outcome(Gamma(g), k);
      if (o.tokens_produced != k + 1 || o.acceptance_rate != static_cast<double>(k) / g) ++bad;
    }
  }
  c.expect(bad == 0, std::to_string(bad) + " (gamma, k) cells wrong");
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> len(1, 8), tok(0, 4);
  int mismatches = 0;
  for (int t = 0; t < 10000; ++t) {
    const int n = len(rng);
    std::vector<std::int64_t> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = tok(rng);
      b[i] = tok(rng) < 4 ? a[i] : tok(rng);
    }
    if (verify_greedy(a, b) != oracle::naive_prefix(a, b)) ++mismatches;
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " of 10000 verify_greedy mismatches");
  c.note("44 (gamma, k) cells, 10000 random pairs");
  return c.result();
}

// ---- 2 ----
Outcome signal_math() {
  Checker c;
  for (std::size_t v : {2u, 8u, 1000u, 128256u}) {
    std::vector<double> p(v, 0.0);
    p[v / 3] = 1.0;
    c.expect(entropy_bits(TokenDistribution(p)) == 0.0, "one-hot entropy not exactly 0 at V=" + std::to_string(v));
    const double h = entropy_bits(TokenDistribution(std::vector<double>(v, 1.0 / static_cast<double>(v))));
    c.expect(std::abs(h - std::log2(static_cast<double>(v))) <= 1e-12, "uniform entropy off at V=" + std::to_string(v));
  }
  std::mt19937_64 rng(2);
  std::exponential_distribution<double> e(1.0);
  std::uniform_int_distribution<int> gamma(1, 8);
  double worst_pad = 0.0;
  int violations = 0;
  for (int t = 0; t < 10000; ++t) {
    const int g = gamma(rng);
    std::vector<TokenDistribution> step;
    for (int i = 0; i < g; ++i) {
      std::vector<double> p(32);
      double s = 0.0;
      for (double& x : p) s += (x = e(rng));
      for (double& x : p) x /= s;
      if (i == 0 && t % 10 == 0) {
        const double h = entropy_bits(TokenDistribution(p));
        std::vector<double> padded = p;
        padded.resize(97, 0.0);
        worst_pad = std::max(worst_pad, std::abs(entropy_bits(TokenDistribution(padded)) - h));
      }
      step.emplace_back(std::move(p));
    }
    const SignalVector s = aggregate_signals(step);
    if (s.max_entropy_bits < s.mean_entropy_bits || s.min_confidence > s.mean_confidence) ++violations;
  }
  c.expect(worst_pad <= 1e-12, "zero padding moved entropy by " + sci(worst_pad));
  c.expect(violations == 0, std::to_string(violations) + " ordering violations");
  c.note("10000 random steps, kernels=" + std::string(kernels::active().name));
  return c.result();
}

// ---- 3 ----
Outcome correlation_calibration() {
  Checker c;
  const RunConfig cfg;
  const auto corpus = generate_corpus(cfg.world, full_grid_plan(cfg.steps_per_cell));
  std::vector<double> a, h, conf;
  for (const StepRecord& r : corpus) {
    a.push_back(r.outcome.acceptance_rate);
    h.push_back(r.signals.mean_entropy_bits);
    conf.push_back(r.signals.mean_confidence);
  }
  const double ch = oracle::naive_pearson(h, a);
  const double cc = oracle::naive_pearson(conf, a);
  c.expect(ch >= -0.65 && ch <= -0.45, "entropy correlation " + num(ch) + " outside [-0.65, -0.45]");
  c.expect(cc >= 0.45 && cc <= 0.65, "confidence correlation " + num(cc) + " outside [0.45, 0.65]");
  c.note(std::to_string(corpus.size()) + " records, r(H)=" + num(ch) + ", r(c)=" + num(cc));
  return c.result();
}

// ---- 4 ----
Outcome predictor_correctness() {
  Checker c;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset d;
  for (int i = 0; i < 200; ++i) {
    FeatureVector x;
    for (double& v : x) v = z(rng);
    d.x.push_back(x);
    d.y.push_back(u(rng));
  }
  double worst_obj = 0.0;
  for (double lambda : {0.0, 0.1, 1.0, 10.0}) {
    const auto m = ridge_fit(d, lambda);
    const auto& p = std::get<RidgeParams>(m.params);
    std::array<double, kFeatureDim> w;
    double b = 0.0;
    oracle::ridge_gradient_descent(d.x, d.y, lambda, w, b);
    worst_obj = std::max(worst_obj, std::abs(oracle::ridge_objective(d.x, d.y, p.weights, p.intercept, lambda) -
                                             oracle::ridge_objective(d.x, d.y, w, b, lambda)));
  }
  c.expect(worst_obj <= 1e-6, "ridge objective gap " + sci(worst_obj));

  double worst_fd = 0.0;
  for (int hidden : {16, 32}) {
    MlpParams p;
    p.hyper.hidden_units = hidden;
    std::normal_distribution<double> w0(0.0, 0.5);
    p.w1.resize(static_cast<std::size_t>(hidden) * kFeatureDim);
    p.b1.resize(hidden);
    p.w2.resize(hidden);
    for (double& v : p.w1) v = w0(rng);
    for (double& v : p.b1) v = w0(rng);
    for (double& v : p.w2) v = w0(rng);
    p.b2 = 0.2;
    const std::span<const FeatureVector> xs(d.x.data(), 10);
    const std::span<const double> ys(d.y.data(), 10);
    MlpParams g;
    mlp_loss_and_gradient(p, xs, ys, &g);
    auto check = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + 1e-5;
      const double up = mlp_loss_and_gradient(p, xs, ys, nullptr);
      param = saved - 1e-5;
      const double down = mlp_loss_and_gradient(p, xs, ys, nullptr);
      param = saved;
      const double numeric = (up - down) / 2e-5;
      worst_fd = std::max(worst_fd, std::abs(analytic - numeric) /
                                        std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
    };
    for (std::size_t i = 0; i < p.w1.size(); ++i) check(p.w1[i], g.w1[i]);
    for (std::size_t i = 0; i < p.b1.size(); ++i) check(p.b1[i], g.b1[i]);
    for (std::size_t i = 0; i < p.w2.size(); ++i) check(p.w2[i], g.w2[i]);
    check(p.b2, g.b2);
  }
  c.expect(worst_fd <= 1e-4, "MLP gradient relative error " + sci(worst_fd));

  const auto dir = fs::temp_directory_path() / ("speckv_accept_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  const auto small = generate_corpus(WorldParams{}, full_grid_plan(20));
  int mismatched = 0;
  for (const std::string v : {"ridge", "mlp16", "mlp32", "rf10", "rf100"}) {
    TrainConfig cfg;
    cfg.mlp.epochs = 20;
    const PredictorModel m = train_variant(v, small, cfg, 5);
    const std::string path = (dir / (v + ".json")).string();
    save_model(m, path);
    const PredictorModel back = load_model(path);
    for (int i = 0; i < 1000; ++i) {
      FeatureVector x;
      for (double& e : x) e = 1.5 * z(rng);
      if (predict(back, x) != predict(m, x) || back.raw(x) != m.raw(x)) ++mismatched;
    }
  }
  fs::remove_all(dir);
  c.expect(mismatched == 0, std::to_string(mismatched) + " round-tripped predictions differ");
  c.note("ridge objective gap " + sci(worst_obj) + ", max FD rel err " + sci(worst_fd) +
         ", 5 variants x 1000 inputs bit-exact");
  return c.result();
}

// ---- 5 ----
Outcome predictor_ordering() {
  Checker c;
  World& w = World::get();
  const RunConfig cfg;
  std::map<std::string, double> pearson, overhead;
  for (const std::string v : {"ridge", "mlp16", "mlp32", "rf10", "rf100"}) {
    const PredictorModel& m = w.model(v);
    pearson[v] = w.metrics[v].test_pearson;
    overhead[v] = measure_overhead(m, w.split.test, cfg.overhead_decisions, cfg.overhead_repetitions).median_us;
  }
  const double fast_max = std::max({pearson["ridge"], pearson["mlp16"], pearson["mlp32"]});
  const double fast_min = std::min({pearson["ridge"], pearson["mlp16"], pearson["mlp32"]});
  const double fast_overhead = std::max({overhead["ridge"], overhead["mlp16"], overhead["mlp32"]});
  c.expect(pearson["rf100"] > pearson["rf10"], "RF-100 not above RF-10");
  c.expect(pearson["rf10"] > fast_max, "RF-10 not above the fast group");
  c.expect(fast_min > 0.4, "fast-group Pearson " + num(fast_min) + " not > 0.4");
  c.expect(fast_overhead < 1000.0, "fast-group overhead " + num(fast_overhead, 1) + " us >= 1 ms");
  c.expect(overhead["rf100"] > fast_overhead, "RF-100 overhead not above the fast group");
  std::string n;
  for (const auto& [v, p] : pearson) n += v + " r=" + num(p, 3) + " " + num(overhead[v], 1) + "us ";
  c.note(n);
  return c.result();
}

// ---- 6 ----
Outcome policy_dominance() {
  Checker c;
  World& w = World::get();
  const RunConfig cfg;
  w.model(cfg.fast_variant);
  w.model(cfg.accurate_variant);
  const auto fast = w.models[cfg.fast_variant];
  const auto accurate = w.models[cfg.accurate_variant];
  const ProfileTable profile = build_profile(w.split.train, ProfileObjective::kExpectedTokens);

  int violations = 0;
  for (const auto& [model, name] : {std::pair{fast, std::string("speckv-fast")}, {accurate, "speckv-accurate"}}) {
    const auto s = score_policy(*speckv_policy(model, name), w.split.test, *model);
    std::vector<std::unique_ptr<GammaPolicy>> fixed;
    for (int g : kCandidateGammas) fixed.push_back(fixed_policy(Gamma(g)));
    fixed.push_back(fixed_best_policy(profile));
    fixed.push_back(task_oracle_policy(profile));
    for (const auto& f : fixed) {
      const auto other = score_policy(*f, w.split.test, *model);
      for (std::size_t i = 0; i < s.size(); ++i) violations += other[i] > s[i] ? 1 : 0;
    }
  }
  c.expect(violations == 0, std::to_string(violations) + " per-step dominance violations");

  EvaluationInputs in;
  in.fast = fast;
  in.accurate = accurate;
  in.profile = profile;
  ReportOptions opts;
  opts.resamples = 10000;
  opts.seed = cfg.seed;
  const EvalReport r = evaluate_policies(w.split.test, default_policy_names(), in, opts);
  const double m_fast = r.find("speckv-fast")->interval.mean;
  const double m_best = r.find("fixed-best")->interval.mean;
  const double m_four = r.find("fixed-4")->interval.mean;
  c.expect(m_fast >= m_best, "speckv-fast mean below fixed-best");
  c.expect(m_best >= m_four, "fixed-best mean below fixed-4");
  const BootstrapResult& b = *r.fast_vs_fixed4;
  c.expect(b.p_value < 0.01, "p = " + sci(b.p_value));
  c.expect(b.ci_low > 0.0 || b.ci_high < 0.0, "CI includes 0");
  c.note("means fast " + num(m_fast, 3) + " >= best " + num(m_best, 3) + " >= fixed-4 " + num(m_four, 3) +
         "; diff " + num(b.mean_diff, 3) + " CI [" + num(b.ci_low, 3) + ", " + num(b.ci_high, 3) + "] p=" +
         sci(b.p_value) + " (" + std::to_string(w.split.test.size()) + " held-out steps)");
  return c.result();
}

// ---- 7 ----
Outcome gamma_shift() {
  Checker c;
  const RunConfig cfg;
  const auto corpus = generate_corpus(cfg.world, full_grid_plan(cfg.steps_per_cell));
  const ProfileTable p = build_profile(corpus, ProfileObjective::kThroughput, &cfg.cost);
  const int fp16 = p.fixed_best.at(CompressionLevel::kFp16).gamma;
  const int int8 = p.fixed_best.at(CompressionLevel::kInt8).gamma;
  c.expect(fp16 <= 4, "FP16 best gamma " + std::to_string(fp16));
  c.expect(int8 >= 6, "INT8 best gamma " + std::to_string(int8));
  c.note("best fixed gamma fp16=" + std::to_string(fp16) + " int8=" + std::to_string(int8) +
         " nf4=" + std::to_string(p.fixed_best.at(CompressionLevel::kNf4).gamma));
  return c.result();
}

// ---- 8 ----
Outcome bootstrap_calibration() {
  Checker c;
  const int reps = 200, n = 1000, resamples = 10000;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0.0, 1.0);
  int false_pos = 0, covered = 0;
  const double shift = 0.25;
  std::vector<double> a(n), b(n);
  for (int r = 0; r < reps; ++r) {
    // Paired scores with a shared per-step component, like two policies scored on the same steps.
    for (int i = 0; i < n; ++i) {
      const double base = 4.0 + z(rng);
      a[i] = base + z(rng);
      b[i] = base + z(rng);
    }
    if (paired_bootstrap(a, b, resamples, 1000 + r).p_value < 0.05) ++false_pos;
    for (int i = 0; i < n; ++i) a[i] += shift;
    const BootstrapResult s = paired_bootstrap(a, b, resamples, 5000 + r);
    // The interval targets the population shift; the sample mean difference carries its own noise.
    if (s.ci_low <= shift && shift <= s.ci_high) ++covered;
  }
  const double fpr = static_cast<double>(false_pos) / reps;
  const double coverage = static_cast<double>(covered) / reps;
  c.expect(fpr >= 0.01 && fpr <= 0.10, "false-positive rate " + num(fpr, 3));
  c.expect(coverage >= 0.90, "coverage " + num(coverage, 3));
  c.note("FPR " + num(fpr, 3) + ", coverage " + num(coverage, 3) + " over " + std::to_string(reps) + " reps");
  return c.result();
}

// ---- 9 ----
std::vector<std::string> dataset_files(const std::string& root) {
  std::vector<std::string> files;
  if (fs::is_directory(root)) {
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(root)) {
    files.push_back(root);
  }
  return files;
}

Outcome dataset_replay() {
  const char* root = std::getenv("SPECKV_DATASET");
  if (!root || !*root) return {Verdict::kSkip, "SPECKV_DATASET not set; released step records not supplied"};
  const auto files = dataset_files(root);
  if (files.empty()) return {Verdict::kSkip, std::string("no CSV files under ") + root};
  Checker c;
  std::vector<StepRecord> corpus;
  for (const std::string& f : files) {
    auto part = read_step_records(f);
    corpus.insert(corpus.end(), part.begin(), part.end());
  }
  c.expect(corpus.size() == 5112, "ingested " + std::to_string(corpus.size()) + " records, expected 5112");
  const std::array<std::pair<double, double>, 3> table = {{{-0.549, 0.563}, {-0.559, 0.566}, {-0.567, 0.582}}};
  std::string cells;
  for (CompressionLevel comp : kAllCompressions) {
    std::vector<double> a, h, conf;
    for (const StepRecord& r : corpus) {
      if (r.compression != comp) continue;
      a.push_back(r.outcome.acceptance_rate);
      h.push_back(r.signals.mean_entropy_bits);
      conf.push_back(r.signals.mean_confidence);
    }
    if (a.size() < 3) {
      c.expect(false, std::string("no records for ") + std::string(to_string(comp)));
      continue;
    }
    const double ch = oracle::naive_pearson(h, a), cc = oracle::naive_pearson(conf, a);
    const auto [eh, ec] = table[index_of(comp)];
    c.expect(std::abs(ch - eh) <= 0.03, std::string(to_string(comp)) + " entropy r " + num(ch, 3));
    c.expect(std::abs(cc - ec) <= 0.03, std::string(to_string(comp)) + " confidence r " + num(cc, 3));
    cells += std::string(to_string(comp)) + " " + num(ch, 3) + "/" + num(cc, 3) + " ";
  }
  const RunConfig cfg;
  const Split split = stratified_split(corpus, cfg.split);
  const PredictorModel ridge = train_variant("ridge", split.train, cfg.train, cfg.seed);
  const double pr = eval_metrics(ridge, make_dataset(split.test, ridge.standardizer)).test_pearson;
  c.expect(std::abs(pr - 0.681) <= 0.05, "ridge test Pearson " + num(pr, 3));
  c.note(std::to_string(corpus.size()) + " records; " + cells + "; ridge r=" + num(pr, 3));
  return c.result();
}

// ---- 10 ----
Outcome overhead_accounting() {
  Checker c;
  const double net = net_improvement_pct(56.0, 0.34, 70.0);
  c.expect(std::abs(net - 55.5) <= 0.1, "net " + num(net, 3));
  const double gross = improvement_pct(5.82, 3.73);
  c.expect(std::abs(gross - 56.0) <= 0.1, "gross " + num(gross, 3));
  const double share = 100.0 * 0.34 / 70.0;
  c.expect(share < 0.5, "overhead share " + num(share, 3) + "% of step time");
  c.note("gross " + num(gross, 2) + "%, net " + num(net, 3) + "%, overhead " + num(share, 3) + "% of step");
  return c.result();
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0 means no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "core-semantics", 1.0, core_semantics},
      {2, "signal-math", 1.0, signal_math},
      {3, "correlation-calibration", 10.0, correlation_calibration},
      {4, "predictor-correctness", 30.0, predictor_correctness},
      {5, "predictor-ordering", 120.0, predictor_ordering},
      {6, "policy-dominance", 60.0, policy_dominance},
      {7, "optimal-gamma-shift", 10.0, gamma_shift},
      {8, "bootstrap-calibration", 60.0, bootstrap_calibration},
      {9, "dataset-replay", 0.0, dataset_replay},
      {10, "overhead-accounting", 1.0, overhead_accounting},
  };
  int failed = 0;
  for (const Criterion& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {Verdict::kFail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.verdict == Verdict::kPass && cr.limit_s > 0.0 && secs > cr.limit_s) {
      o = {Verdict::kFail, "runtime " + num(secs, 2) + " s over the " + num(cr.limit_s, 0) + " s bound; " + o.detail};
    }
    const char* tag = o.verdict == Verdict::kPass ? "PASS" : o.verdict == Verdict::kFail ? "FAIL" : "SKIP";
    if (o.verdict == Verdict::kFail) ++failed;
    std::printf("%s %2d %-24s %7.2fs  %s\n", tag, cr.id, cr.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
