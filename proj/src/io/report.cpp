#include <cstdio>
#include <filesystem>
#include <map>

#include "speckv/errors.hpp"
#include "speckv/io.hpp"

namespace speckv {
namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::string heading_name(CompressionLevel c) {
  std::string s(to_string(c));
  for (char& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

}  // namespace

OutputPaths write_report(const EvalReport& report, const std::string& dir, const RunConfig& config,
                         const std::string& extra_markdown) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create report directory " + dir + ": " + ec.message());
  OutputPaths out;

  std::map<std::pair<std::string, CompressionLevel>, const CompressionSummary*> by_comp;
  for (const CompressionSummary& s : report.per_compression) by_comp[{s.policy, s.compression}] = &s;
  std::map<std::tuple<std::string, CompressionLevel, TaskCategory>, const CellSummary*> by_cell;
  for (const CellSummary& s : report.cells) by_cell[{s.policy, s.compression, s.task}] = &s;

  // report.md
  std::string md = "# Offline policy evaluation\n\n";
  md += "Held-out steps: " + std::to_string(report.labels.size()) + ". Bootstrap resamples: " +
        std::to_string(report.options.resamples) + ". Seed: " + std::to_string(report.options.seed) + ".\n\n";
  if (!extra_markdown.empty()) md += extra_markdown + "\n\n";
  md += "## Mean expected tokens per step (95% bootstrap CI)\n\n| Policy |";
  for (CompressionLevel c : kAllCompressions) md += " " + heading_name(c) + " |";
  md += " Overall | vs fixed-4 |\n|---|";
  for (std::size_t i = 0; i < kAllCompressions.size(); ++i) md += "---|";
  md += "---|---|\n";
  for (const PolicySummary& p : report.overall) {
    md += "| " + p.policy + " |";
    for (CompressionLevel c : kAllCompressions) {
      auto it = by_comp.find({p.policy, c});
      md += it == by_comp.end() ? " - |"
                                : " " + fixed(it->second->interval.mean, 2) + " [" +
                                      fixed(it->second->interval.ci_low, 2) + ", " +
                                      fixed(it->second->interval.ci_high, 2) + "] |";
    }
    md += " " + fixed(p.interval.mean, 2) + " [" + fixed(p.interval.ci_low, 2) + ", " + fixed(p.interval.ci_high, 2) +
          "] |";
    md += p.improvement_pct ? " " + fixed(*p.improvement_pct, 1) + "% |" : " - |";
    md += "\n";
  }

  const PolicySummary* fast = report.find("speckv-fast");
  if (fast && report.find("fixed-4")) {
    md += "\n## Improvement of speckv-fast over fixed-4 by compression and task (%)\n\n| Compression |";
    for (TaskCategory t : kAllTasks) md += " " + std::string(to_string(t)) + " |";
    md += "\n|---|";
    for (std::size_t i = 0; i < kAllTasks.size(); ++i) md += "---|";
    md += "\n";
    for (CompressionLevel c : kAllCompressions) {
      md += "| " + heading_name(c) + " |";
      for (TaskCategory t : kAllTasks) {
        auto a = by_cell.find({fast->policy, c, t});
        auto b = by_cell.find({report.find("fixed-4")->policy, c, t});
        md += (a == by_cell.end() || b == by_cell.end() || !(b->second->mean > 0.0))
                  ? " - |"
                  : " " + fixed(improvement_pct(a->second->mean, b->second->mean), 1) + " |";
      }
      md += "\n";
    }
  }

  if (report.fast_vs_fixed4) {
    const BootstrapResult& b = *report.fast_vs_fixed4;
    md += "\n## Paired bootstrap: speckv-fast vs fixed-4\n\n";
    md += "Mean difference " + fixed(b.mean_diff, 3) + " tokens/step, 95% CI [" + fixed(b.ci_low, 3) + ", " +
          fixed(b.ci_high, 3) + "], two-sided p = " + format_double(b.p_value) + " (" + std::to_string(b.resamples) +
          " resamples; floor " + format_double(1.0 / b.resamples) + ").\n";
  }

  md += "\n## Overhead accounting (step time " + fixed(report.options.step_time_ms, 1) + " ms)\n\n";
  md += "| Policy | Overhead (ms/decision) | Gross improvement | Net improvement |\n|---|---|---|---|\n";
  for (const PolicySummary& p : report.overall) {
    md += "| " + p.policy + " | " + fixed(p.overhead_ms, 4) + " | " +
          (p.improvement_pct ? fixed(*p.improvement_pct, 2) + "%" : "-") + " | " +
          (p.net_improvement_pct ? fixed(*p.net_improvement_pct, 2) + "%" : "-") + " |\n";
  }
  md += "\n## Configuration\n\n```ini\n" + render_config(config) + "```\n";
  out.files.push_back(join_path(dir, "report.md"));
  write_text_file(out.files.back(), md);

  // cells.csv
  std::string cells = "policy,compression,task,mean_expected_tokens,count\n";
  for (const CellSummary& s : report.cells) {
    cells += s.policy + "," + std::string(to_string(s.compression)) + "," + std::string(to_string(s.task)) + "," +
             format_double(s.mean) + "," + std::to_string(s.count) + "\n";
  }
  out.files.push_back(join_path(dir, "cells.csv"));
  write_text_file(out.files.back(), cells);

  // policy_compression_ci.csv (plot data; "all" rows hold the overall mean)
  std::string ci = "policy,compression,mean,ci_low,ci_high,count\n";
  for (const CompressionSummary& s : report.per_compression) {
    ci += s.policy + "," + std::string(to_string(s.compression)) + "," + format_double(s.interval.mean) + "," +
          format_double(s.interval.ci_low) + "," + format_double(s.interval.ci_high) + "," + std::to_string(s.count) +
          "\n";
  }
  for (const PolicySummary& p : report.overall) {
    ci += p.policy + ",all," + format_double(p.interval.mean) + "," + format_double(p.interval.ci_low) + "," +
          format_double(p.interval.ci_high) + "," + std::to_string(p.count) + "\n";
  }
  out.files.push_back(join_path(dir, "policy_compression_ci.csv"));
  write_text_file(out.files.back(), ci);

  // improvement_heatmap.csv
  std::string heat = "policy,compression,task,improvement_pct\n";
  if (const PolicySummary* base = report.find("fixed-4")) {
    for (const PolicySummary& p : report.overall) {
      if (&p == base) continue;
      for (CompressionLevel c : kAllCompressions) {
        for (TaskCategory t : kAllTasks) {
          auto a = by_cell.find({p.policy, c, t});
          auto b = by_cell.find({base->policy, c, t});
          if (a == by_cell.end() || b == by_cell.end() || !(b->second->mean > 0.0)) continue;
          heat += p.policy + "," + std::string(to_string(c)) + "," + std::string(to_string(t)) + "," +
                  format_double(improvement_pct(a->second->mean, b->second->mean)) + "\n";
        }
      }
    }
  }
  out.files.push_back(join_path(dir, "improvement_heatmap.csv"));
  write_text_file(out.files.back(), heat);

  // bootstrap.csv
  std::string boot = "comparison,mean_diff,ci_low,ci_high,p_value,resamples\n";
  if (report.fast_vs_fixed4) {
    const BootstrapResult& b = *report.fast_vs_fixed4;
    boot += "speckv-fast vs fixed-4," + format_double(b.mean_diff) + "," + format_double(b.ci_low) + "," +
            format_double(b.ci_high) + "," + format_double(b.p_value) + "," + std::to_string(b.resamples) + "\n";
  }
  out.files.push_back(join_path(dir, "bootstrap.csv"));
  write_text_file(out.files.back(), boot);

  // step_scores.csv: the paired per-step vectors every aggregate above is computed from.
  std::string steps = "row,experiment_id,step_index,compression,task,gamma_logged";
  for (const PolicyScores& p : report.scores) steps += "," + p.policy;
  steps += "\n";
  for (std::size_t i = 0; i < report.labels.size(); ++i) {
    const StepRecord& r = report.labels[i];
    steps += std::to_string(i) + "," + r.experiment_id + "," + std::to_string(r.step_index) + "," +
             std::string(to_string(r.compression)) + "," + std::string(to_string(r.task)) + "," +
             std::to_string(r.gamma.value());
    for (const PolicyScores& p : report.scores) steps += "," + format_double(p.scores[i]);
    steps += "\n";
  }
  out.files.push_back(join_path(dir, "step_scores.csv"));
  write_text_file(out.files.back(), steps);
  return out;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  nlohmann::json j;
  j["command"] = m.command;
  j["config"] = m.config;
  j["seed"] = m.config.contains("run") ? m.config["run"].value("seed", "") : "";
  j["environment"] = m.environment;
  j["inputs"] = m.input_hashes;
  j["outputs"] = m.outputs;
  j["tool_version"] = m.tool_version;
  j["wall_clock_s"] = m.wall_clock_s;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace speckv
