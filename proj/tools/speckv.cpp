// speckv: batch entry points for the speculation-length controller pipeline.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "speckv/errors.hpp"
#include "speckv/eval.hpp"
#include "speckv/hash.hpp"
#include "speckv/io.hpp"
#include "speckv/kernels.hpp"
#include "speckv/policy.hpp"
#include "speckv/predictor.hpp"
#include "speckv/synth.hpp"

#ifndef SPECKV_TOOL_VERSION
#define SPECKV_TOOL_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace speckv;

namespace {

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kUsage = 2,
  kValidation = 3,
  kNumeric = 4,
  kIo = 5,
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return kUsage;
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kValidation:
    case ErrorKind::kMalformed:
    case ErrorKind::kIntegrity:
    case ErrorKind::kIncompleteProfile: return kValidation;
    case ErrorKind::kNumeric: return kNumeric;
    case ErrorKind::kIo: return kIo;
    case ErrorKind::kState: return kOther;
  }
  return kOther;
}

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct Context {
  RunConfig config;
  std::map<std::string, std::string> environment;
  std::string data_dir;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

Context resolve(const CommonFlags& flags) {
  Context ctx;
  if (!flags.config.empty()) ctx.config = load_config(flags.config);
  ctx.config.propagate_seed();
  ctx.environment = apply_environment(ctx.config, &ctx.data_dir);
  if (flags.seed) {
    ctx.config.seed = *flags.seed;
    ctx.config.propagate_seed();
  }
  return ctx;
}

// Relative outputs land under SPECKV_DATA_DIR when it is set.
std::string output_path(const Context& ctx, const std::string& path, const std::string& fallback) {
  const std::string p = path.empty() ? fallback : path;
  if (ctx.data_dir.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(ctx.data_dir) / p).string();
}

// Inputs resolve against the working directory first, then SPECKV_DATA_DIR.
std::string input_path(const Context& ctx, const std::string& path) {
  if (fs::exists(path) || ctx.data_dir.empty() || fs::path(path).is_absolute()) return path;
  const fs::path alt = fs::path(ctx.data_dir) / path;
  return fs::exists(alt) ? alt.string() : path;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing required ") + what + " path");
  if (!fs::is_regular_file(path)) throw IoError(std::string(what) + " not found: " + path);
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

void finish(const Context& ctx, const std::string& command, const std::vector<std::string>& inputs,
            const std::vector<std::string>& outputs, const std::string& manifest_path) {
  RunManifest m;
  m.command = command;
  m.config = config_to_json(ctx.config);
  m.environment = ctx.environment;
  m.environment["SPECKV_KERNELS_ACTIVE"] = std::string(kernels::active().name);
  for (const std::string& in : inputs) m.input_hashes[in] = sha256_file_hex(in);
  m.outputs = outputs;
  m.tool_version = SPECKV_TOOL_VERSION;
  m.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
  ensure_parent(manifest_path);
  write_manifest(m, manifest_path);
}

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<StepRecord> synthesize(const RunConfig& c) {
  return generate_corpus(c.world, full_grid_plan(c.steps_per_cell), &c.cost);
}

// Pearson correlation of each signal with the acceptance rate, per compression level and overall.
std::string correlation_table(const std::vector<StepRecord>& corpus) {
  std::string out = "compression,n,mean_acceptance,mean_entropy_bits,mean_confidence,max_entropy_bits,min_confidence\n";
  auto row = [&](const std::string& label, auto keep) {
    std::vector<double> a, s0, s1, s2, s3;
    for (const StepRecord& r : corpus) {
      if (!keep(r)) continue;
      a.push_back(r.outcome.acceptance_rate);
      s0.push_back(r.signals.mean_entropy_bits);
      s1.push_back(r.signals.mean_confidence);
      s2.push_back(r.signals.max_entropy_bits);
      s3.push_back(r.signals.min_confidence);
    }
    if (a.size() < 2) return;
    double mean = 0.0;
    for (double v : a) mean += v;
    mean /= static_cast<double>(a.size());
    auto corr = [&](const std::vector<double>& s) {
      try {
        return fmt(pearson(s, a), 4);
      } catch (const NumericError&) {
        return std::string("nan");
      }
    };
    out += label + "," + std::to_string(a.size()) + "," + fmt(mean, 4) + "," + corr(s0) + "," + corr(s1) + "," +
           corr(s2) + "," + corr(s3) + "\n";
  };
  for (CompressionLevel c : kAllCompressions) {
    row(std::string(to_string(c)), [c](const StepRecord& r) { return r.compression == c; });
  }
  row("all", [](const StepRecord&) { return true; });
  return out;
}

// ---- commands ----

int cmd_synth(const CommonFlags& flags, std::optional<int> steps_per_cell) {
  Context ctx = resolve(flags);
  if (steps_per_cell) ctx.config.steps_per_cell = *steps_per_cell;
  const std::string out = output_path(ctx, flags.out, "corpus.csv");
  ensure_parent(out);
  const auto corpus = synthesize(ctx.config);
  write_step_records(corpus, out);
  std::cout << "wrote " << corpus.size() << " step records to " << out << "\n";
  std::cout << correlation_table(corpus);
  finish(ctx, "synth", {}, {out}, out + ".manifest.json");
  return kOk;
}

int cmd_ingest(const CommonFlags& flags, const std::string& input) {
  Context ctx = resolve(flags);
  const std::string in = input_path(ctx, input);
  require_file(in, "corpus");
  const CorpusTable table = read_step_table(in);
  std::cout << "read " << table.records.size() << " valid step records from " << in;
  if (!table.extra_columns.empty()) std::cout << " (" << table.extra_columns.size() << " extra columns kept)";
  std::cout << "\n" << correlation_table(table.records);
  std::vector<std::string> outputs;
  if (!flags.out.empty()) {
    const std::string out = output_path(ctx, flags.out, "");
    ensure_parent(out);
    write_step_table(table, out);
    outputs.push_back(out);
    std::cout << "wrote canonical corpus to " << out << "\n";
  }
  const std::string manifest = (outputs.empty() ? in : outputs[0]) + ".manifest.json";
  finish(ctx, "ingest", {in}, outputs, manifest);
  return kOk;
}

struct TrainOutcome {
  std::shared_ptr<const PredictorModel> model;
  PredictorMetrics metrics;
};

TrainOutcome train_and_score(const Context& ctx, const std::string& variant, const Split& split) {
  TrainOutcome t;
  auto model = std::make_shared<PredictorModel>(train_variant(variant, split.train, ctx.config.train, ctx.config.seed));
  t.metrics = eval_metrics(*model, make_dataset(split.test, model->standardizer));
  t.model = std::move(model);
  return t;
}

nlohmann::json metrics_json(const std::string& variant, const PredictorMetrics& m, const Split& split) {
  return {{"variant", variant},
          {"test_mse", m.test_mse},
          {"test_pearson", m.test_pearson},
          {"overhead_us_per_decision", m.overhead_us_per_decision},
          {"train_rows", split.train.size()},
          {"test_rows", split.test.size()}};
}

int cmd_train(const CommonFlags& flags, const std::string& corpus_arg, const std::string& variant,
              std::optional<double> test_fraction) {
  check_variant(variant);
  Context ctx = resolve(flags);
  if (test_fraction) ctx.config.split.test_fraction = *test_fraction;
  const std::string corpus_path = input_path(ctx, corpus_arg);
  require_file(corpus_path, "corpus");
  const auto corpus = read_step_records(corpus_path);
  const Split split = stratified_split(corpus, ctx.config.split);
  TrainOutcome t = train_and_score(ctx, variant, split);

  const std::string out = output_path(ctx, flags.out, variant + ".model.json");
  ensure_parent(out);
  save_model(*t.model, out);
  const std::string metrics_path = out + ".metrics.json";
  write_text_file(metrics_path, metrics_json(variant, t.metrics, split).dump(2) + "\n");
  std::cout << variant << ": test MSE " << fmt(t.metrics.test_mse, 4) << ", test Pearson "
            << fmt(t.metrics.test_pearson, 4) << " (" << split.train.size() << " train / " << split.test.size()
            << " test)\n";
  if (const auto* f = std::get_if<ForestParams>(&t.model->params)) {
    std::cout << "feature importance:";
    for (std::size_t j = 0; j < kFeatureDim; ++j) std::cout << " " << kFeatureNames[j] << "=" << fmt(f->importance[j]);
    std::cout << "\n";
  }
  finish(ctx, "train", {corpus_path}, {out, metrics_path}, out + ".manifest.json");
  return kOk;
}

int cmd_profile(const CommonFlags& flags, const std::string& corpus_arg, const std::string& objective_name,
                bool whole_corpus, std::optional<double> test_fraction) {
  Context ctx = resolve(flags);
  if (test_fraction) ctx.config.split.test_fraction = *test_fraction;
  if (!objective_name.empty()) {
    try {
      ctx.config.profile_objective = parse_profile_objective(objective_name);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
  const std::string corpus_path = input_path(ctx, corpus_arg);
  require_file(corpus_path, "corpus");
  const auto corpus = read_step_records(corpus_path);
  const std::vector<StepRecord> rows = whole_corpus ? corpus : stratified_split(corpus, ctx.config.split).train;
  const ProfileTable profile = build_profile(rows, ctx.config.profile_objective, &ctx.config.cost);
  const std::string out = output_path(ctx, flags.out, "profile.json");
  ensure_parent(out);
  save_profile(profile, out);
  std::cout << "objective " << to_string(profile.objective) << "\n";
  for (const auto& [c, e] : profile.fixed_best) {
    std::cout << "fixed-best " << to_string(c) << ": gamma " << e.gamma << " (" << fmt(e.objective) << ")\n";
  }
  for (const auto& [k, e] : profile.task_oracle) {
    std::cout << "task-oracle " << to_string(k.first) << "/" << to_string(k.second) << ": gamma " << e.gamma << " ("
              << fmt(e.objective) << ")\n";
  }
  finish(ctx, "profile", {corpus_path}, {out}, out + ".manifest.json");
  return kOk;
}

struct EvaluateFlags {
  std::string corpus;
  std::string fast_model;
  std::string accurate_model;
  std::string profile;
  std::string policies;
  std::optional<int> resamples;
  std::optional<double> test_fraction;
  bool score_with_accurate = false;
  bool measure_overhead = false;
};

std::vector<std::string> split_policies(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  return out;
}

int cmd_evaluate(const CommonFlags& flags, const EvaluateFlags& e) {
  Context ctx = resolve(flags);
  if (e.resamples) ctx.config.resamples = *e.resamples;
  if (e.test_fraction) ctx.config.split.test_fraction = *e.test_fraction;
  if (!e.policies.empty()) ctx.config.policies = split_policies(e.policies);
  if (e.score_with_accurate) ctx.config.score_with_accurate = true;

  // Every input is checked before any computation starts.
  const std::string corpus_path = input_path(ctx, e.corpus);
  require_file(corpus_path, "corpus");
  const std::string fast_path = input_path(ctx, e.fast_model);
  require_file(fast_path, "fast model");
  std::vector<std::string> inputs = {corpus_path, fast_path};
  std::string accurate_path;
  if (!e.accurate_model.empty()) {
    accurate_path = input_path(ctx, e.accurate_model);
    require_file(accurate_path, "accurate model");
    inputs.push_back(accurate_path);
  }
  std::string profile_path;
  if (!e.profile.empty()) {
    profile_path = input_path(ctx, e.profile);
    require_file(profile_path, "profile");
    inputs.push_back(profile_path);
  }

  EvaluationInputs in;
  in.fast = std::make_shared<PredictorModel>(load_model(fast_path));
  if (!accurate_path.empty()) in.accurate = std::make_shared<PredictorModel>(load_model(accurate_path));
  in.score_with_accurate = ctx.config.score_with_accurate;
  const auto corpus = read_step_records(corpus_path);
  const Split split = stratified_split(corpus, ctx.config.split);
  in.profile = profile_path.empty() ? build_profile(split.train, ctx.config.profile_objective, &ctx.config.cost)
                                    : load_profile(profile_path);

  std::map<std::string, double> overhead;
  auto overhead_for = [&](const std::shared_ptr<const PredictorModel>& m) {
    if (!e.measure_overhead || !m) return ctx.config.cost.controller_overhead_ms;
    return measure_overhead(*m, split.test, ctx.config.overhead_decisions, ctx.config.overhead_repetitions).median_us /
           1000.0;
  };
  overhead["speckv-fast"] = overhead_for(in.fast);
  overhead["speckv-accurate"] = overhead_for(in.accurate);

  ReportOptions opts;
  opts.resamples = ctx.config.resamples;
  opts.seed = ctx.config.seed;
  opts.step_time_ms = ctx.config.step_time_ms;
  const EvalReport report = evaluate_policies(split.test, ctx.config.policies, in, opts, overhead);

  const std::string dir = output_path(ctx, flags.out, "report");
  const std::string note = "Scorer: " + std::string(in.score_with_accurate ? in.accurate->variant : in.fast->variant) +
                           ". Profile objective: " + std::string(to_string(in.profile->objective)) + ".";
  OutputPaths paths = write_report(report, dir, ctx.config, note);
  for (const PolicySummary& p : report.overall) {
    std::cout << p.policy << ": mean " << fmt(p.interval.mean) << " [" << fmt(p.interval.ci_low) << ", "
              << fmt(p.interval.ci_high) << "]";
    if (p.improvement_pct) std::cout << ", " << fmt(*p.improvement_pct, 1) << "% vs fixed-4";
    std::cout << "\n";
  }
  if (report.fast_vs_fixed4) {
    const BootstrapResult& b = *report.fast_vs_fixed4;
    std::cout << "speckv-fast vs fixed-4: diff " << fmt(b.mean_diff) << " CI [" << fmt(b.ci_low) << ", "
              << fmt(b.ci_high) << "] p=" << format_double(b.p_value) << "\n";
  }
  std::cout << "report written to " << dir << "\n";
  finish(ctx, "evaluate", inputs, paths.files, (fs::path(dir) / "manifest.json").string());
  return kOk;
}

int cmd_bench(const CommonFlags& flags, const std::vector<std::string>& models, std::int64_t n,
              const std::string& corpus_arg) {
  if (n < 1000) throw UsageError("--n must be >= 1000, got " + std::to_string(n));
  if (models.empty()) throw UsageError("at least one --model is required");
  Context ctx = resolve(flags);
  std::vector<std::string> inputs;
  for (const std::string& m : models) {
    inputs.push_back(input_path(ctx, m));
    require_file(inputs.back(), "model");
  }
  std::vector<StepRecord> contexts;
  if (!corpus_arg.empty()) {
    const std::string corpus_path = input_path(ctx, corpus_arg);
    require_file(corpus_path, "corpus");
    contexts = read_step_records(corpus_path);
    inputs.push_back(corpus_path);
  }
  std::string table = "model,variant,n_decisions,repetitions,min_us,median_us\n";
  std::cout << "kernels: " << kernels::active().name << "\n";
  for (std::size_t i = 0; i < models.size(); ++i) {
    const PredictorModel model = load_model(inputs[i]);
    const OverheadMeasurement m = measure_overhead(model, contexts, n, ctx.config.overhead_repetitions);
    table += inputs[i] + "," + model.variant + "," + std::to_string(n) + "," +
             std::to_string(ctx.config.overhead_repetitions) + "," + format_double(m.min_us) + "," +
             format_double(m.median_us) + "\n";
    std::cout << model.variant << ": median " << fmt(m.median_us, 2) << " us/decision (min " << fmt(m.min_us, 2)
              << ")\n";
  }
  const std::string out = output_path(ctx, flags.out, "overhead.csv");
  ensure_parent(out);
  write_text_file(out, table);
  finish(ctx, "bench-overhead", inputs, {out}, out + ".manifest.json");
  return kOk;
}

int cmd_calibrate(const CommonFlags& flags) {
  Context ctx = resolve(flags);
  const auto corpus = generate_corpus(ctx.config.world, full_grid_plan(ctx.config.steps_per_cell));
  const double per_gamma = ctx.config.cost.per_compression[0].per_gamma_ms;
  const double anchor = step_latency_ms(ctx.config.cost, CompressionLevel::kFp16, Gamma(4));
  const CostCalibration cal = calibrate_cost_model(corpus, default_throughput_targets(), per_gamma, anchor);
  std::string ini = "[cost]\n";
  for (CompressionLevel c : kAllCompressions) {
    const auto& k = cal.cost.per_compression[index_of(c)];
    std::cout << to_string(c) << ": raw base " << fmt(cal.raw_base_ms[index_of(c)], 2) << " ms, anchored base "
              << fmt(k.base_ms, 2) << " ms, per gamma " << fmt(k.per_gamma_ms, 2) << " ms\n";
    ini += std::string(to_string(c)) + "_base_ms = " + format_double(k.base_ms) + "\n";
    ini += std::string(to_string(c)) + "_per_gamma_ms = " + format_double(k.per_gamma_ms) + "\n";
  }
  ini += "controller_overhead_ms = " + format_double(ctx.config.cost.controller_overhead_ms) + "\n";
  const auto table = mean_throughput_table(corpus, cal.cost);
  std::cout << "mean throughput (tok/s) at gamma 2/4/6/8 with the anchored costs:\n";
  for (CompressionLevel c : kAllCompressions) {
    std::cout << "  " << to_string(c) << ":";
    for (double v : table[index_of(c)]) std::cout << " " << fmt(v, 2);
    std::cout << "\n";
  }
  const std::string out = output_path(ctx, flags.out, "calibrated_cost.ini");
  ensure_parent(out);
  write_text_file(out, ini);
  finish(ctx, "calibrate", {}, {out}, out + ".manifest.json");
  return kOk;
}

int cmd_repro(const CommonFlags& flags, std::optional<int> resamples) {
  Context ctx = resolve(flags);
  if (resamples) ctx.config.resamples = *resamples;
  const fs::path dir = output_path(ctx, flags.out, "repro");
  std::error_code ec;
  fs::create_directories(dir / "models", ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::string> outputs;
  auto add = [&](const fs::path& p) {
    outputs.push_back(p.string());
    return p.string();
  };

  const auto corpus = synthesize(ctx.config);
  write_step_records(corpus, add(dir / "corpus.csv"));
  const std::string correlations = correlation_table(corpus);
  write_text_file(add(dir / "signal_correlations.csv"), correlations);
  std::cout << "corpus: " << corpus.size() << " records\n" << correlations;

  const Split split = stratified_split(corpus, ctx.config.split);
  std::vector<std::string> variants = {"ridge", "mlp16", "mlp32", "rf10", "rf100"};
  for (const std::string* v : {&ctx.config.fast_variant, &ctx.config.accurate_variant}) {
    if (std::find(variants.begin(), variants.end(), *v) == variants.end()) variants.push_back(*v);
  }
  std::map<std::string, TrainOutcome> trained;
  std::string predictors = "variant,test_mse,test_pearson,overhead_median_us,overhead_min_us\n";
  nlohmann::json importance;
  for (const std::string& v : variants) {
    TrainOutcome t = train_and_score(ctx, v, split);
    save_model(*t.model, add(dir / "models" / (v + ".model.json")));
    const OverheadMeasurement o =
        measure_overhead(*t.model, split.test, ctx.config.overhead_decisions, ctx.config.overhead_repetitions);
    t.metrics.overhead_us_per_decision = o.median_us;
    predictors += v + "," + format_double(t.metrics.test_mse) + "," + format_double(t.metrics.test_pearson) + "," +
                  format_double(o.median_us) + "," + format_double(o.min_us) + "\n";
    std::cout << v << ": MSE " << fmt(t.metrics.test_mse, 4) << " Pearson " << fmt(t.metrics.test_pearson, 4)
              << " overhead " << fmt(o.median_us, 1) << " us\n";
    if (std::holds_alternative<ForestParams>(t.model->params)) {
      const auto imp = feature_importance(*t.model);
      for (std::size_t j = 0; j < kFeatureDim; ++j) importance[v][kFeatureNames[j]] = imp[j];
    }
    trained.emplace(v, std::move(t));
  }
  write_text_file(add(dir / "predictors.csv"), predictors);
  write_text_file(add(dir / "feature_importance.json"), importance.dump(2) + "\n");

  const ProfileTable profile = build_profile(split.train, ctx.config.profile_objective, &ctx.config.cost);
  save_profile(profile, add(dir / "profile.json"));
  const ProfileTable throughput = build_profile(corpus, ProfileObjective::kThroughput, &ctx.config.cost);
  save_profile(throughput, add(dir / "throughput_profile.json"));
  std::string optimal = "compression,task,best_gamma,toks_per_s\n";
  for (const auto& [k, e] : throughput.task_oracle) {
    optimal += std::string(to_string(k.first)) + "," + std::string(to_string(k.second)) + "," +
               std::to_string(e.gamma) + "," + format_double(e.objective) + "\n";
  }
  for (const auto& [c, e] : throughput.fixed_best) {
    optimal += std::string(to_string(c)) + ",all," + std::to_string(e.gamma) + "," + format_double(e.objective) + "\n";
    std::cout << "throughput-optimal fixed gamma " << to_string(c) << ": " << e.gamma << "\n";
  }
  write_text_file(add(dir / "optimal_gamma.csv"), optimal);

  EvaluationInputs in;
  in.fast = trained.at(ctx.config.fast_variant).model;
  in.accurate = trained.at(ctx.config.accurate_variant).model;
  in.profile = profile;
  in.score_with_accurate = ctx.config.score_with_accurate;
  std::map<std::string, double> overhead = {
      {"speckv-fast", trained.at(ctx.config.fast_variant).metrics.overhead_us_per_decision / 1000.0},
      {"speckv-accurate", trained.at(ctx.config.accurate_variant).metrics.overhead_us_per_decision / 1000.0}};
  ReportOptions opts;
  opts.resamples = ctx.config.resamples;
  opts.seed = ctx.config.seed;
  opts.step_time_ms = ctx.config.step_time_ms;
  const EvalReport report = evaluate_policies(split.test, ctx.config.policies, in, opts, overhead);
  const std::string note = "Scorer: " + (in.score_with_accurate ? in.accurate->variant : in.fast->variant) +
                           ". Overheads are measured medians of this run.";
  for (const std::string& f : write_report(report, (dir / "report").string(), ctx.config, note).files) outputs.push_back(f);
  for (const PolicySummary& p : report.overall) {
    std::cout << p.policy << ": " << fmt(p.interval.mean) << " tokens/step";
    if (p.improvement_pct) std::cout << " (" << fmt(*p.improvement_pct, 1) << "% vs fixed-4)";
    std::cout << "\n";
  }
  if (report.fast_vs_fixed4) {
    std::cout << "speckv-fast vs fixed-4: p=" << format_double(report.fast_vs_fixed4->p_value) << "\n";
  }
  finish(ctx, "repro", {}, outputs, (dir / "manifest.json").string());
  return kOk;
}

int cmd_show_config(const CommonFlags& flags) {
  const Context ctx = resolve(flags);
  const std::string text = render_config(ctx.config);
  if (flags.out.empty()) {
    std::cout << text;
  } else {
    const std::string out = output_path(ctx, flags.out, "");
    ensure_parent(out);
    write_text_file(out, text);
  }
  return kOk;
}

void add_common(CLI::App* cmd, CommonFlags& flags, const std::string& out_help) {
  cmd->add_option("--config", flags.config, "Configuration file (sectioned key = value)");
  cmd->add_option("--seed", flags.seed, "Master seed (overrides config and SPECKV_SEED)");
  cmd->add_option("--out", flags.out, out_help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speckv: adaptive speculation-length controller pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SPECKV_TOOL_VERSION);
  app.footer(
      "Exit codes: 0 ok, 1 other, 2 usage, 3 validation, 4 numeric, 5 I/O.\n"
      "Environment: SPECKV_SEED, SPECKV_DATA_DIR, SPECKV_KERNELS=scalar|avx2.\n"
      "Defaults: seed 20250611, 107 steps per cell, test fraction 0.2, 10000 resamples, fast mlp16, accurate rf100.");

  CommonFlags flags;
  std::optional<int> steps_per_cell;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic step-record corpus");
  add_common(synth, flags, "Corpus CSV path (default corpus.csv)");
  synth->add_option("--steps-per-cell", steps_per_cell, "Steps per task x compression x gamma cell (default 107)");

  std::string ingest_input;
  auto* ingest = app.add_subcommand("ingest", "Validate a step-record CSV and optionally rewrite it canonically");
  add_common(ingest, flags, "Canonical CSV output path (optional)");
  ingest->add_option("input", ingest_input, "CSV to ingest")->required();

  std::string corpus;
  std::string variant;
  std::optional<double> test_fraction;
  auto* train = app.add_subcommand("train", "Train one predictor variant on the train split");
  add_common(train, flags, "Model file path (default <variant>.model.json)");
  train->add_option("--corpus", corpus, "Step-record CSV")->required();
  train->add_option("--variant", variant, "ridge | mlp16 | mlp32 | rf10 | rf100 | rf<N>")->required();
  train->add_option("--test-fraction", test_fraction, "Held-out share per stratum (default 0.2)");

  std::string objective;
  bool whole = false;
  auto* profile = app.add_subcommand("profile", "Build fixed-best and task-oracle tables");
  add_common(profile, flags, "Profile file path (default profile.json)");
  profile->add_option("--corpus", corpus, "Step-record CSV")->required();
  profile->add_option("--objective", objective, "expected-tokens | throughput (default expected-tokens)");
  profile->add_flag("--all-records", whole, "Profile the whole corpus instead of the train split");
  profile->add_option("--test-fraction", test_fraction, "Held-out share per stratum (default 0.2)");

  EvaluateFlags ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score policies on the held-out split and write the report");
  add_common(evaluate, flags, "Report directory (default report)");
  evaluate->add_option("--corpus", ev.corpus, "Step-record CSV")->required();
  evaluate->add_option("--fast-model", ev.fast_model, "SpecKV-fast decision model (also the default scorer)")
      ->required();
  evaluate->add_option("--accurate-model", ev.accurate_model, "SpecKV-accurate decision model");
  evaluate->add_option("--profile", ev.profile, "Profile file (default: built from the train split)");
  evaluate->add_option("--policies", ev.policies,
                       "Comma-separated subset of fixed-2,fixed-4,fixed-6,fixed-8,fixed-best,task-oracle,"
                       "speckv-fast,speckv-accurate (default fixed-4,fixed-best,task-oracle,speckv-fast,speckv-accurate)");
  evaluate->add_option("--resamples", ev.resamples, "Bootstrap resamples (default 10000)");
  evaluate->add_option("--test-fraction", ev.test_fraction, "Held-out share per stratum (default 0.2)");
  evaluate->add_flag("--score-with-accurate", ev.score_with_accurate, "Score every policy with the accurate model");
  evaluate->add_flag("--measure-overhead", ev.measure_overhead,
                     "Use measured decision overhead instead of cost.controller_overhead_ms");

  std::vector<std::string> models;
  std::int64_t n_decisions = 10000;
  std::string bench_corpus;
  auto* bench = app.add_subcommand("bench-overhead", "Measure per-decision controller overhead");
  add_common(bench, flags, "Overhead table path (default overhead.csv)");
  bench->add_option("--model", models, "Model file (repeatable)")->required();
  bench->add_option("--n", n_decisions, "Decisions per repetition, >= 1000 (default 10000)");
  bench->add_option("--corpus", bench_corpus, "Corpus whose signals feed the decisions");

  auto* calibrate = app.add_subcommand("calibrate", "Back-solve the cost model from per-task throughput targets");
  add_common(calibrate, flags, "Calibrated [cost] section path (default calibrated_cost.ini)");

  auto* show = app.add_subcommand("show-config", "Print the resolved configuration in config-file form");
  add_common(show, flags, "Write to this file instead of stdout");

  std::optional<int> resamples;
  auto* repro = app.add_subcommand("repro", "synth -> train all variants -> profile -> evaluate -> bench");
  add_common(repro, flags, "Output directory (default repro)");
  repro->add_option("--resamples", resamples, "Bootstrap resamples (default 10000)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(flags, steps_per_cell);
    if (*ingest) return cmd_ingest(flags, ingest_input);
    if (*train) return cmd_train(flags, corpus, variant, test_fraction);
    if (*profile) return cmd_profile(flags, corpus, objective, whole, test_fraction);
    if (*evaluate) return cmd_evaluate(flags, ev);
    if (*bench) return cmd_bench(flags, models, n_decisions, bench_corpus);
    if (*calibrate) return cmd_calibrate(flags);
    if (*repro) return cmd_repro(flags, resamples);
    if (*show) return cmd_show_config(flags);
  } catch (const Error& e) {
    std::cerr << "speckv: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "speckv: " << e.what() << "\n";
    return kOther;
  }
  return kUsage;
}
