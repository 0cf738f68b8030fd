#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "speckv/errors.hpp"
#include "speckv/io.hpp"

namespace speckv {
namespace {

enum Column : int {
  kExperimentId,
  kCompression,
  kTask,
  kGamma,
  kStepIndex,
  kAccepted,
  kTokensProduced,
  kAcceptanceRate,
  kMeanEntropy,
  kMeanConfidence,
  kMaxEntropy,
  kMinConfidence,
  kStepLatency,
  kColumnCount,
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// One CSV line into fields; double quotes escape commas and are doubled inside quoted fields.
std::vector<std::string> split_csv(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw MalformedFileError("line " + std::to_string(line_no) + ": unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

const std::map<std::string, std::string>& compression_value_aliases() {
  static const std::map<std::string, std::string> m = {
      {"fp16", "fp16"}, {"float16", "fp16"}, {"half", "fp16"}, {"none", "fp16"}, {"baseline", "fp16"},
      {"int8", "int8"}, {"8bit", "int8"},    {"8-bit", "int8"}, {"llm.int8", "int8"},
      {"nf4", "nf4"},   {"4bit", "nf4"},     {"4-bit", "nf4"},  {"int4", "nf4"},
  };
  return m;
}

const std::map<std::string, std::string>& task_value_aliases() {
  static const std::map<std::string, std::string> m = {
      {"code", "code"},       {"coding", "code"},     {"math", "math"},
      {"mathematics", "math"}, {"chat", "chat"},       {"dialogue", "chat"},
      {"conversation", "chat"}, {"summarization", "summarization"}, {"summary", "summarization"},
      {"summarisation", "summarization"},
  };
  return m;
}

struct Cell {
  std::size_t line;
  const std::string& column;
  const std::string& text;

  [[noreturn]] void fail(const std::string& why) const {
    throw MalformedFileError("line " + std::to_string(line) + ", column '" + column + "': " + why + " (got '" + text +
                             "')");
  }

  double real() const {
    const std::string t = trim(text);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) fail("not a number");
    if (!std::isfinite(v)) fail("not finite");
    return v;
  }

  std::int64_t integer() const {
    const std::string t = trim(text);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
      // Accept integral reals such as "4.0" from spreadsheet exports.
      const double d = real();
      if (d != std::floor(d) || std::fabs(d) > 9.0e15) fail("not an integer");
      return static_cast<std::int64_t>(d);
    }
    return v;
  }
};

}  // namespace

const std::vector<std::string>& step_record_columns() {
  static const std::vector<std::string> cols = {
      "experiment_id",   "compression",       "task",              "gamma",
      "step_index",      "accepted",          "tokens_produced",   "acceptance_rate",
      "mean_entropy_bits", "mean_confidence", "max_entropy_bits",  "min_confidence",
      "step_latency_ms",
  };
  return cols;
}

const std::map<std::string, std::string>& column_aliases() {
  static const std::map<std::string, std::string> m = {
      {"exp_id", "experiment_id"},
      {"experiment", "experiment_id"},
      {"run_id", "experiment_id"},
      {"compression_level", "compression"},
      {"quantization", "compression"},
      {"precision", "compression"},
      {"task_category", "task"},
      {"category", "task"},
      {"spec_len", "gamma"},
      {"speculation_length", "gamma"},
      {"num_speculative_tokens", "gamma"},
      {"step", "step_index"},
      {"step_idx", "step_index"},
      {"num_accepted", "accepted"},
      {"accepted_tokens", "accepted"},
      {"n_accepted", "accepted"},
      {"tokens", "tokens_produced"},
      {"tokens_generated", "tokens_produced"},
      {"acceptance", "acceptance_rate"},
      {"accept_rate", "acceptance_rate"},
      {"draft_entropy", "mean_entropy_bits"},
      {"mean_entropy", "mean_entropy_bits"},
      {"avg_entropy", "mean_entropy_bits"},
      {"draft_confidence", "mean_confidence"},
      {"avg_confidence", "mean_confidence"},
      {"top1_confidence", "mean_confidence"},
      {"max_entropy", "max_entropy_bits"},
      {"min_conf", "min_confidence"},
      {"latency_ms", "step_latency_ms"},
      {"step_time_ms", "step_latency_ms"},
  };
  return m;
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CorpusTable read_step_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path);

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    header = split_csv(line, line_no);
    break;
  }
  if (header.empty()) throw MalformedFileError(path + ": missing header row");

  const auto& canonical = step_record_columns();
  std::vector<int> position(kColumnCount, -1);
  CorpusTable table;
  std::vector<std::size_t> extra_pos;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name = lower(trim(header[i]));
    if (auto a = column_aliases().find(name); a != column_aliases().end()) name = a->second;
    auto it = std::find(canonical.begin(), canonical.end(), name);
    if (it == canonical.end()) {
      table.extra_columns.push_back(trim(header[i]));
      extra_pos.push_back(i);
      continue;
    }
    const int col = static_cast<int>(it - canonical.begin());
    if (position[col] >= 0) throw MalformedFileError(path + ": column '" + name + "' appears twice");
    position[col] = static_cast<int>(i);
  }
  std::vector<std::string> missing;
  for (int c = 0; c < kColumnCount; ++c) {
    if (position[c] < 0 && c != kStepLatency) missing.push_back(canonical[c]);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw MalformedFileError(path + ": missing required column(s): " + list);
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    const std::vector<std::string> f = split_csv(line, line_no);
    if (f.size() != header.size()) {
      throw MalformedFileError(path + ": line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                               " fields, header has " + std::to_string(header.size()));
    }
    auto cell = [&](int c) { return Cell{line_no, canonical[c], f[position[c]]}; };

    StepRecord r;
    r.experiment_id = f[position[kExperimentId]];
    {
      const std::string v = lower(trim(f[position[kCompression]]));
      auto a = compression_value_aliases().find(v);
      if (a == compression_value_aliases().end()) cell(kCompression).fail("unknown compression level");
      r.compression = parse_compression(a->second);
    }
    {
      const std::string v = lower(trim(f[position[kTask]]));
      auto a = task_value_aliases().find(v);
      if (a == task_value_aliases().end()) cell(kTask).fail("unknown task category");
      r.task = parse_task(a->second);
    }
    const std::int64_t gamma = cell(kGamma).integer();
    if (gamma < 1 || gamma > 1024) cell(kGamma).fail("gamma must lie in [1, 1024]");
    r.gamma = Gamma(static_cast<int>(gamma));
    r.step_index = cell(kStepIndex).integer();
    const std::int64_t accepted = cell(kAccepted).integer();
    const std::int64_t tokens = cell(kTokensProduced).integer();
    if (accepted < -1 || accepted > 1 << 20 || tokens < -1 || tokens > 1 << 20) {
      cell(kAccepted).fail("count out of range");
    }
    r.outcome.gamma = r.gamma;
    r.outcome.accepted = static_cast<int>(accepted);
    r.outcome.tokens_produced = static_cast<int>(tokens);
    r.outcome.acceptance_rate = cell(kAcceptanceRate).real();
    r.signals.mean_entropy_bits = cell(kMeanEntropy).real();
    r.signals.mean_confidence = cell(kMeanConfidence).real();
    r.signals.max_entropy_bits = cell(kMaxEntropy).real();
    r.signals.min_confidence = cell(kMinConfidence).real();
    if (position[kStepLatency] >= 0 && !trim(f[position[kStepLatency]]).empty()) {
      r.step_latency_ms = cell(kStepLatency).real();
    }
    try {
      validate_record(r);
    } catch (const ValidationError& e) {
      throw ValidationError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    table.records.push_back(std::move(r));
    std::vector<std::string> extras;
    extras.reserve(extra_pos.size());
    for (std::size_t p : extra_pos) extras.push_back(f[p]);
    table.extra_values.push_back(std::move(extras));
  }
  return table;
}

std::vector<StepRecord> read_step_records(const std::string& path) { return read_step_table(path).records; }

void write_step_table(const CorpusTable& table, const std::string& path) {
  if (!table.extra_columns.empty() && table.extra_values.size() != table.records.size()) {
    throw InvalidArgument("write_step_table: extra column values do not match the record count");
  }
  std::string out;
  const auto& cols = step_record_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  for (const std::string& e : table.extra_columns) out += "," + quote_csv(e);
  out += '\n';
  for (std::size_t i = 0; i < table.records.size(); ++i) {
    const StepRecord& r = table.records[i];
    validate_record(r);
    out += quote_csv(r.experiment_id);
    out += ',';
    out += to_string(r.compression);
    out += ',';
    out += to_string(r.task);
    out += ',' + std::to_string(r.gamma.value());
    out += ',' + std::to_string(r.step_index);
    out += ',' + std::to_string(r.outcome.accepted);
    out += ',' + std::to_string(r.outcome.tokens_produced);
    out += ',' + format_double(r.outcome.acceptance_rate);
    out += ',' + format_double(r.signals.mean_entropy_bits);
    out += ',' + format_double(r.signals.mean_confidence);
    out += ',' + format_double(r.signals.max_entropy_bits);
    out += ',' + format_double(r.signals.min_confidence);
    out += ',';
    if (r.step_latency_ms) out += format_double(*r.step_latency_ms);
    if (!table.extra_columns.empty()) {
      for (const std::string& v : table.extra_values[i]) out += "," + quote_csv(v);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

void write_step_records(std::span<const StepRecord> records, const std::string& path) {
  CorpusTable t;
  t.records.assign(records.begin(), records.end());
  write_step_table(t, path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace speckv
