#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "speckv/core.hpp"
#include "speckv/eval.hpp"
#include "speckv/policy.hpp"
#include "speckv/predictor.hpp"
#include "speckv/synth.hpp"

namespace speckv {

// ---- step-record CSV ----

inline constexpr const char* kCorpusFormatVersion = "speckv-steps/1";

// Fixed column order written by write_step_records.
const std::vector<std::string>& step_record_columns();

// Alternate header spellings (lowercased) accepted on read, mapped to the canonical column.
const std::map<std::string, std::string>& column_aliases();

/// Records plus any columns the reader did not recognize, kept in file order so that a
/// read/write cycle preserves them.
struct CorpusTable {
  std::vector<StepRecord> records;
  std::vector<std::string> extra_columns;
  std::vector<std::vector<std::string>> extra_values;  // one row per record
};

/// Parses and validates every row. Lines starting with '#' and blank lines are skipped.
/// Errors carry the 1-based file line and the column name: MalformedFileError for structural
/// or number problems, ValidationError for StepRecord invariant violations, IoError if unreadable.
CorpusTable read_step_table(const std::string& path);
std::vector<StepRecord> read_step_records(const std::string& path);

// Byte-deterministic: fixed columns, shortest round-trip floats, "\n" line endings, empty latency when absent.
void write_step_table(const CorpusTable& table, const std::string& path);
void write_step_records(std::span<const StepRecord> records, const std::string& path);

std::string format_double(double v);

// ---- model and profile files ----

inline constexpr const char* kModelFormatVersion = "speckv-model/1";
inline constexpr const char* kProfileFormatVersion = "speckv-profile/1";

nlohmann::json model_to_json(const PredictorModel& model);
PredictorModel model_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const ProfileTable& profile);
ProfileTable profile_from_json(const nlohmann::json& j);

/// Writes {format_version, ..., content_hash}; the hash is SHA-256 over the compact dump of the
/// document without the hash field.
void save_model(const PredictorModel& model, const std::string& path);
void save_profile(const ProfileTable& profile, const std::string& path);
/// MalformedFileError for unparsable or truncated files and version mismatches, IntegrityError
/// when the content hash does not match.
PredictorModel load_model(const std::string& path);
ProfileTable load_profile(const std::string& path);

// ---- configuration ----

struct RunConfig {
  std::uint64_t seed = 20250611;  // drives synthesis, splitting, training and resampling
  WorldParams world;
  CostModel cost;
  int steps_per_cell = 107;
  SplitSpec split;
  TrainConfig train;
  std::string fast_variant = "mlp16";
  std::string accurate_variant = "rf100";
  std::vector<std::string> policies = default_policy_names();
  bool score_with_accurate = false;
  ProfileObjective profile_objective = ProfileObjective::kExpectedTokens;
  int resamples = 10000;
  double step_time_ms = 70.0;
  std::int64_t overhead_decisions = 10000;
  int overhead_repetitions = 5;

  // Copies `seed` into the module-level seeds.
  void propagate_seed();
};

/// Sectioned key = value file. Unknown sections or keys raise UsageError naming them; values that
/// do not parse as the key's type raise UsageError naming key and value.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);
// Every key with its current value, in the same format load_config reads.
std::string render_config(const RunConfig& config);
nlohmann::json config_to_json(const RunConfig& config);

/// Applies SPECKV_SEED and SPECKV_DATA_DIR. Returns the overrides that were applied.
std::map<std::string, std::string> apply_environment(RunConfig& config, std::string* data_dir);

// ---- reports and manifests ----

struct OutputPaths {
  std::vector<std::string> files;
};

/// Emits report.md, cells.csv, policy_compression_ci.csv, improvement_heatmap.csv and
/// step_scores.csv into `dir`, plus the configuration echo. Returns the written paths.
OutputPaths write_report(const EvalReport& report, const std::string& dir, const RunConfig& config,
                         const std::string& extra_markdown = {});

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::map<std::string, std::string> environment;
  std::map<std::string, std::string> input_hashes;  // path -> sha256
  std::vector<std::string> outputs;
  std::string tool_version;
  double wall_clock_s = 0.0;
};

void write_manifest(const RunManifest& manifest, const std::string& path);

// Writes text with "\n" endings; IoError with the path on failure.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace speckv
