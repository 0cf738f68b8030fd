#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "speckv/errors.hpp"
#include "speckv/io.hpp"

namespace speckv {
namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* type) {
  throw UsageError("config key '" + key + "': cannot parse '" + value + "' as " + type);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value, const char* type) {
  T v{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, type);
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) bad_value(key, value, type);
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string v;
  for (char c : value) v.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "bool");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    }
  }
  return out;
}

struct Binding {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const std::string& full_key, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Binding real_key(std::string section, std::string key, Member member) {
  return {std::move(section), std::move(key),
          [member](RunConfig& c, const std::string& k, const std::string& v) {
            member(c) = parse_number<double>(k, v, "real");
          },
          [member](const RunConfig& c) { return format_double(member(const_cast<RunConfig&>(c))); }};
}

template <typename Int, typename Member>
Binding int_key(std::string section, std::string key, Member member) {
  return {std::move(section), std::move(key),
          [member](RunConfig& c, const std::string& k, const std::string& v) {
            member(c) = parse_number<Int>(k, v, "integer");
          },
          [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
}

template <typename Member>
Binding bool_key(std::string section, std::string key, Member member) {
  return {std::move(section), std::move(key),
          [member](RunConfig& c, const std::string& k, const std::string& v) { member(c) = parse_bool(k, v); },
          [member](const RunConfig& c) { return std::string(member(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

template <typename Member>
Binding string_key(std::string section, std::string key, Member member) {
  return {std::move(section), std::move(key),
          [member](RunConfig& c, const std::string&, const std::string& v) { member(c) = v; },
          [member](const RunConfig& c) { return member(const_cast<RunConfig&>(c)); }};
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> b;
    b.push_back(int_key<std::uint64_t>("run", "seed", [](RunConfig& c) -> std::uint64_t& { return c.seed; }));
    b.push_back(int_key<int>("run", "steps_per_cell", [](RunConfig& c) -> int& { return c.steps_per_cell; }));
    b.push_back(string_key("run", "fast_variant", [](RunConfig& c) -> std::string& { return c.fast_variant; }));
    b.push_back(string_key("run", "accurate_variant", [](RunConfig& c) -> std::string& { return c.accurate_variant; }));
    b.push_back({"run", "policies",
                 [](RunConfig& c, const std::string&, const std::string& v) { c.policies = split_list(v); },
                 [](const RunConfig& c) {
                   std::string s;
                   for (const auto& p : c.policies) s += (s.empty() ? "" : ",") + p;
                   return s;
                 }});
    b.push_back(bool_key("run", "score_with_accurate", [](RunConfig& c) -> bool& { return c.score_with_accurate; }));
    b.push_back({"run", "profile_objective",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   try {
                     c.profile_objective = parse_profile_objective(v);
                   } catch (const InvalidArgument&) {
                     bad_value(k, v, "profile objective (expected-tokens | throughput)");
                   }
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.profile_objective)); }});
    b.push_back(int_key<int>("run", "resamples", [](RunConfig& c) -> int& { return c.resamples; }));
    b.push_back(real_key("run", "step_time_ms", [](RunConfig& c) -> double& { return c.step_time_ms; }));
    b.push_back(int_key<std::int64_t>("run", "overhead_decisions",
                                      [](RunConfig& c) -> std::int64_t& { return c.overhead_decisions; }));
    b.push_back(int_key<int>("run", "overhead_repetitions", [](RunConfig& c) -> int& { return c.overhead_repetitions; }));

    b.push_back(int_key<int>("world", "vocab_size", [](RunConfig& c) -> int& { return c.world.vocab_size; }));
    b.push_back(real_key("world", "agreement_slope", [](RunConfig& c) -> double& { return c.world.agreement_slope; }));
    b.push_back(real_key("world", "entropy_coupling", [](RunConfig& c) -> double& { return c.world.entropy_coupling; }));
    b.push_back(real_key("world", "base_temperature", [](RunConfig& c) -> double& { return c.world.base_temperature; }));
    b.push_back(
        real_key("world", "logit_zipf_exponent", [](RunConfig& c) -> double& { return c.world.logit_zipf_exponent; }));
    b.push_back(real_key("world", "logit_noise", [](RunConfig& c) -> double& { return c.world.logit_noise; }));
    b.push_back(real_key("world", "target_noise", [](RunConfig& c) -> double& { return c.world.target_noise; }));
    b.push_back(
        real_key("world", "regime_persistence", [](RunConfig& c) -> double& { return c.world.regime_persistence; }));
    b.push_back(int_key<int>("world", "prompts_per_task", [](RunConfig& c) -> int& { return c.world.prompts_per_task; }));
    for (CompressionLevel comp : kAllCompressions) {
      const std::size_t i = index_of(comp);
      const std::string name(to_string(comp));
      b.push_back(real_key("world", "agreement_offset_" + name,
                           [i](RunConfig& c) -> double& { return c.world.compression_agreement_offset[i]; }));
      b.push_back(real_key("cost", name + "_base_ms",
                           [i](RunConfig& c) -> double& { return c.cost.per_compression[i].base_ms; }));
      b.push_back(real_key("cost", name + "_per_gamma_ms",
                           [i](RunConfig& c) -> double& { return c.cost.per_compression[i].per_gamma_ms; }));
    }
    b.push_back(
        real_key("cost", "controller_overhead_ms", [](RunConfig& c) -> double& { return c.cost.controller_overhead_ms; }));
    for (TaskCategory task : kAllTasks) {
      const std::size_t i = index_of(task);
      const std::string section = "difficulty_" + std::string(to_string(task));
      b.push_back(real_key(section, "easy_weight", [i](RunConfig& c) -> double& { return c.world.difficulty[i].easy_weight; }));
      b.push_back(real_key(section, "easy_mean", [i](RunConfig& c) -> double& { return c.world.difficulty[i].easy_mean; }));
      b.push_back(real_key(section, "easy_sd", [i](RunConfig& c) -> double& { return c.world.difficulty[i].easy_sd; }));
      b.push_back(real_key(section, "hard_mean", [i](RunConfig& c) -> double& { return c.world.difficulty[i].hard_mean; }));
      b.push_back(real_key(section, "hard_sd", [i](RunConfig& c) -> double& { return c.world.difficulty[i].hard_sd; }));
    }
    b.push_back(real_key("split", "test_fraction", [](RunConfig& c) -> double& { return c.split.test_fraction; }));
    b.push_back(real_key("ridge", "lambda", [](RunConfig& c) -> double& { return c.train.ridge_lambda; }));
    b.push_back(int_key<int>("mlp", "batch_size", [](RunConfig& c) -> int& { return c.train.mlp.batch_size; }));
    b.push_back(real_key("mlp", "learning_rate", [](RunConfig& c) -> double& { return c.train.mlp.learning_rate; }));
    b.push_back(real_key("mlp", "momentum", [](RunConfig& c) -> double& { return c.train.mlp.momentum; }));
    b.push_back(int_key<int>("mlp", "epochs", [](RunConfig& c) -> int& { return c.train.mlp.epochs; }));
    b.push_back(int_key<int>("forest", "max_features", [](RunConfig& c) -> int& { return c.train.forest.max_features; }));
    b.push_back(int_key<int>("forest", "min_leaf", [](RunConfig& c) -> int& { return c.train.forest.min_leaf; }));
    b.push_back(int_key<int>("forest", "max_depth", [](RunConfig& c) -> int& { return c.train.forest.max_depth; }));
    b.push_back(bool_key("forest", "bootstrap", [](RunConfig& c) -> bool& { return c.train.forest.bootstrap; }));
    return b;
  }();
  return table;
}

const Binding* find_binding(const std::string& section, const std::string& key) {
  for (const Binding& b : bindings()) {
    if (b.section == section && b.key == key) return &b;
  }
  return nullptr;
}

void check_config(const RunConfig& c) {
  validate(c.world);
  validate(c.cost);
  check_variant(c.fast_variant);
  check_variant(c.accurate_variant);
  if (c.steps_per_cell < 1) throw UsageError("config key 'run.steps_per_cell' must be >= 1");
  if (c.resamples < 1) throw UsageError("config key 'run.resamples' must be >= 1");
  if (!(c.step_time_ms > 0.0)) throw UsageError("config key 'run.step_time_ms' must be > 0");
  if (c.overhead_decisions < 1000) throw UsageError("config key 'run.overhead_decisions' must be >= 1000");
  if (c.overhead_repetitions < 5) throw UsageError("config key 'run.overhead_repetitions' must be >= 5");
  if (!(c.split.test_fraction > 0.0 && c.split.test_fraction < 1.0)) {
    throw UsageError("config key 'split.test_fraction' must lie in (0, 1)");
  }
}

}  // namespace

void RunConfig::propagate_seed() {
  world.seed = seed;
  split.seed = seed;
}

RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw UsageError("config: key '" + section + "' must belong to a section");
    }
    for (const auto& [key, value] : body) {
      const Binding* b = find_binding(section, key);
      if (!b) throw UsageError("config: unknown key '" + section + "." + key + "'");
      b->set(c, section + "." + key, value.data());
    }
  }
  c.propagate_seed();
  check_config(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError&) {
    throw IoError("cannot read config file " + path);
  }
  return parse_config(text);
}

std::string render_config(const RunConfig& config) {
  std::vector<std::string> sections;
  for (const Binding& b : bindings()) {
    if (std::find(sections.begin(), sections.end(), b.section) == sections.end()) sections.push_back(b.section);
  }
  std::string out;
  for (const std::string& section : sections) {
    out += (out.empty() ? "[" : "\n[") + section + "]\n";
    for (const Binding& b : bindings()) {
      if (b.section == section) out += b.key + " = " + b.get(config) + "\n";
    }
  }
  return out;
}

nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const Binding& b : bindings()) j[b.section][b.key] = b.get(config);
  return j;
}

std::map<std::string, std::string> apply_environment(RunConfig& config, std::string* data_dir) {
  std::map<std::string, std::string> applied;
  if (const char* s = std::getenv("SPECKV_SEED"); s && *s) {
    find_binding("run", "seed")->set(config, "SPECKV_SEED", s);
    config.propagate_seed();
    applied["SPECKV_SEED"] = s;
  }
  if (const char* d = std::getenv("SPECKV_DATA_DIR"); d && *d) {
    if (data_dir) *data_dir = d;
    applied["SPECKV_DATA_DIR"] = d;
  }
  return applied;
}

}  // namespace speckv
