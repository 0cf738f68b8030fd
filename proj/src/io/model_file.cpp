#include <cmath>

#include "speckv/errors.hpp"
#include "speckv/hash.hpp"
#include "speckv/io.hpp"

namespace speckv {

using nlohmann::json;

namespace {

json hyper_json(const MlpHyperparams& h) {
  return {{"hidden_units", h.hidden_units}, {"batch_size", h.batch_size}, {"learning_rate", h.learning_rate},
          {"momentum", h.momentum},         {"epochs", h.epochs}};
}

json hyper_json(const ForestHyperparams& h) {
  return {{"n_trees", h.n_trees},
          {"max_features", h.max_features},
          {"min_leaf", h.min_leaf},
          {"max_depth", h.max_depth},
          {"bootstrap", h.bootstrap}};
}

json matrix(const std::vector<double>& data, std::size_t rows, std::size_t cols) {
  return {{"shape", {rows, cols}}, {"data", data}};
}

std::vector<double> read_matrix(const json& j, std::size_t rows, std::size_t cols, const char* name) {
  const auto shape = j.at("shape").get<std::vector<std::size_t>>();
  auto data = j.at("data").get<std::vector<double>>();
  if (shape.size() != 2 || shape[0] != rows || shape[1] != cols || data.size() != rows * cols) {
    throw MalformedFileError(std::string("model file: array '") + name + "' has an unexpected shape");
  }
  return data;
}

json with_hash(json doc) {
  doc["content_hash"] = sha256_hex(doc.dump());
  return doc;
}

json load_checked(const std::string& path, const char* version) {
  const std::string text = read_text_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MalformedFileError(path + ": not a valid document (" + e.what() + ")");
  }
  if (!doc.is_object() || !doc.contains("format_version") || !doc.contains("content_hash")) {
    throw MalformedFileError(path + ": missing format_version or content_hash");
  }
  if (!doc["format_version"].is_string() || doc["format_version"].get<std::string>() != version) {
    throw MalformedFileError(path + ": format version " + doc["format_version"].dump() + ", expected \"" + version +
                             "\"");
  }
  const std::string stored = doc["content_hash"].is_string() ? doc["content_hash"].get<std::string>() : "";
  json body = doc;
  body.erase("content_hash");
  if (sha256_hex(body.dump()) != stored) throw IntegrityError(path + ": content hash mismatch");
  return body;
}

template <typename Fn>
auto parse_guarded(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw MalformedFileError(path + ": " + e.what());
  }
}

}  // namespace

json model_to_json(const PredictorModel& m) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = "model";
  j["variant"] = m.variant;
  j["standardizer"] = {{"fitted", m.standardizer.fitted()},
                       {"mean", m.standardizer.mean()},
                       {"sd", m.standardizer.sd()}};
  j["metadata"] = {{"seed", m.metadata.seed},
                   {"data_fingerprint", m.metadata.data_fingerprint},
                   {"training_rows", m.metadata.training_rows}};
  j["feature_names"] = kFeatureNames;
  if (const auto* r = std::get_if<RidgeParams>(&m.params)) {
    j["family"] = "ridge";
    j["hyperparameters"] = {{"lambda", r->lambda}};
    j["parameters"] = {{"weights", matrix({r->weights.begin(), r->weights.end()}, 1, kFeatureDim)},
                       {"intercept", r->intercept}};
  } else if (const auto* p = std::get_if<MlpParams>(&m.params)) {
    const std::size_t h = p->b1.size();
    j["family"] = "mlp";
    j["hyperparameters"] = hyper_json(p->hyper);
    j["parameters"] = {{"w1", matrix(p->w1, h, kFeatureDim)},
                       {"b1", matrix(p->b1, 1, h)},
                       {"w2", matrix(p->w2, 1, h)},
                       {"b2", p->b2}};
  } else {
    const auto& f = std::get<ForestParams>(m.params);
    j["family"] = "forest";
    j["hyperparameters"] = hyper_json(f.hyper);
    json trees = json::array();
    for (const RegressionTree& t : f.trees) {
      std::vector<int> feature, left, right;
      std::vector<double> threshold, value;
      for (const TreeNode& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
      }
      trees.push_back(
          {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}});
    }
    j["parameters"] = {{"trees", trees}, {"importance", f.importance}};
  }
  return j;
}

PredictorModel model_from_json(const json& j) {
  PredictorModel m;
  m.variant = j.at("variant").get<std::string>();
  const json& s = j.at("standardizer");
  if (s.at("fitted").get<bool>()) {
    m.standardizer = Standardizer::from_stats(s.at("mean").get<std::array<double, 4>>(),
                                              s.at("sd").get<std::array<double, 4>>());
  }
  const json& meta = j.at("metadata");
  m.metadata.seed = meta.at("seed").get<std::uint64_t>();
  m.metadata.data_fingerprint = meta.at("data_fingerprint").get<std::string>();
  m.metadata.training_rows = meta.at("training_rows").get<std::int64_t>();
  const std::string family = j.at("family").get<std::string>();
  const json& hp = j.at("hyperparameters");
  const json& p = j.at("parameters");
  if (family == "ridge") {
    RidgeParams r;
    r.lambda = hp.at("lambda").get<double>();
    const auto w = read_matrix(p.at("weights"), 1, kFeatureDim, "weights");
    std::copy(w.begin(), w.end(), r.weights.begin());
    r.intercept = p.at("intercept").get<double>();
    m.params = r;
  } else if (family == "mlp") {
    MlpParams q;
    q.hyper.hidden_units = hp.at("hidden_units").get<int>();
    q.hyper.batch_size = hp.at("batch_size").get<int>();
    q.hyper.learning_rate = hp.at("learning_rate").get<double>();
    q.hyper.momentum = hp.at("momentum").get<double>();
    q.hyper.epochs = hp.at("epochs").get<int>();
    if (q.hyper.hidden_units < 1) throw MalformedFileError("model file: hidden_units must be >= 1");
    const std::size_t h = static_cast<std::size_t>(q.hyper.hidden_units);
    q.w1 = read_matrix(p.at("w1"), h, kFeatureDim, "w1");
    q.b1 = read_matrix(p.at("b1"), 1, h, "b1");
    q.w2 = read_matrix(p.at("w2"), 1, h, "w2");
    q.b2 = p.at("b2").get<double>();
    m.params = std::move(q);
  } else if (family == "forest") {
    ForestParams f;
    f.hyper.n_trees = hp.at("n_trees").get<int>();
    f.hyper.max_features = hp.at("max_features").get<int>();
    f.hyper.min_leaf = hp.at("min_leaf").get<int>();
    f.hyper.max_depth = hp.at("max_depth").get<int>();
    f.hyper.bootstrap = hp.at("bootstrap").get<bool>();
    f.importance = p.at("importance").get<std::array<double, kFeatureDim>>();
    for (const json& t : p.at("trees")) {
      const auto feature = t.at("feature").get<std::vector<int>>();
      const auto threshold = t.at("threshold").get<std::vector<double>>();
      const auto left = t.at("left").get<std::vector<int>>();
      const auto right = t.at("right").get<std::vector<int>>();
      const auto value = t.at("value").get<std::vector<double>>();
      const std::size_t n = feature.size();
      if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n) {
        throw MalformedFileError("model file: inconsistent tree arrays");
      }
      RegressionTree tree;
      for (std::size_t i = 0; i < n; ++i) {
        const bool leaf = feature[i] < 0;
        if (!leaf && (feature[i] >= static_cast<int>(kFeatureDim) || left[i] <= static_cast<int>(i) ||
                      right[i] <= static_cast<int>(i) || left[i] >= static_cast<int>(n) ||
                      right[i] >= static_cast<int>(n))) {
          throw MalformedFileError("model file: tree node " + std::to_string(i) + " has invalid links");
        }
        tree.nodes.push_back({leaf ? -1 : feature[i], threshold[i], left[i], right[i], value[i]});
      }
      f.trees.push_back(std::move(tree));
    }
    if (f.trees.empty() || static_cast<int>(f.trees.size()) != f.hyper.n_trees) {
      throw MalformedFileError("model file: tree count does not match n_trees");
    }
    m.params = std::move(f);
  } else {
    throw MalformedFileError("model file: unknown family '" + family + "'");
  }
  return m;
}

json profile_to_json(const ProfileTable& t) {
  json j;
  j["format_version"] = kProfileFormatVersion;
  j["kind"] = "profile";
  j["objective"] = std::string(to_string(t.objective));
  json fixed = json::array();
  for (const auto& [c, e] : t.fixed_best) {
    fixed.push_back({{"compression", std::string(to_string(c))}, {"gamma", e.gamma}, {"objective", e.objective}});
  }
  json oracle = json::array();
  for (const auto& [k, e] : t.task_oracle) {
    oracle.push_back({{"compression", std::string(to_string(k.first))},
                      {"task", std::string(to_string(k.second))},
                      {"gamma", e.gamma},
                      {"objective", e.objective}});
  }
  j["fixed_best"] = fixed;
  j["task_oracle"] = oracle;
  return j;
}

ProfileTable profile_from_json(const json& j) {
  ProfileTable t;
  t.objective = parse_profile_objective(j.at("objective").get<std::string>());
  auto entry = [](const json& e) {
    ProfileEntry p{e.at("gamma").get<int>(), e.at("objective").get<double>()};
    if (!is_candidate_gamma(p.gamma)) throw MalformedFileError("profile file: gamma outside {2,4,6,8}");
    return p;
  };
  for (const json& e : j.at("fixed_best")) {
    t.fixed_best[parse_compression(e.at("compression").get<std::string>())] = entry(e);
  }
  for (const json& e : j.at("task_oracle")) {
    t.task_oracle[{parse_compression(e.at("compression").get<std::string>()),
                   parse_task(e.at("task").get<std::string>())}] = entry(e);
  }
  return t;
}

void save_model(const PredictorModel& model, const std::string& path) {
  write_text_file(path, with_hash(model_to_json(model)).dump(1) + "\n");
}

void save_profile(const ProfileTable& profile, const std::string& path) {
  write_text_file(path, with_hash(profile_to_json(profile)).dump(1) + "\n");
}

PredictorModel load_model(const std::string& path) {
  const json body = load_checked(path, kModelFormatVersion);
  return parse_guarded(path, [&] { return model_from_json(body); });
}

ProfileTable load_profile(const std::string& path) {
  const json body = load_checked(path, kProfileFormatVersion);
  return parse_guarded(path, [&] { return profile_from_json(body); });
}

}  // namespace speckv
