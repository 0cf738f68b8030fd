#include "speckv/predictor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

#include "speckv/errors.hpp"
#include "speckv/hash.hpp"
#include "speckv/kernels.hpp"

namespace speckv {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::array<double, 4> as_array(const SignalVector& s) {
  return {s.mean_entropy_bits, s.mean_confidence, s.max_entropy_bits, s.min_confidence};
}

void check_training_data(const Dataset& data, const char* who) {
  if (data.x.size() != data.y.size()) {
    throw InvalidArgument(std::string(who) + ": " + std::to_string(data.x.size()) + " rows but " +
                          std::to_string(data.y.size()) + " targets");
  }
  if (data.x.size() < kFeatureDim) {
    throw InvalidArgument(std::string(who) + ": need at least " + std::to_string(kFeatureDim) + " rows, got " +
                          std::to_string(data.x.size()));
  }
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    if (!(data.y[i] >= 0.0 && data.y[i] <= 1.0)) {
      throw InvalidArgument(std::string(who) + ": target " + std::to_string(i) + " outside [0, 1]");
    }
    for (double v : data.x[i]) {
      if (!std::isfinite(v)) throw InvalidArgument(std::string(who) + ": non-finite feature in row " + std::to_string(i));
    }
  }
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double mse_of(const MlpParams& p, const Dataset& data) {
  return mlp_loss_and_gradient(p, data.x, data.y, nullptr);
}

// ---- forest ----

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  std::size_t left_count = 0;
  double gain = 0.0;  // reduction in sum of squared errors
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const ForestHyperparams& hyper, std::uint64_t seed)
      : data_(data), hyper_(hyper), rng_(seed) {}

  RegressionTree build(std::vector<std::uint32_t> rows, std::array<double, kFeatureDim>& importance) {
    importance_ = &importance;
    tree_.nodes.clear();
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  static double sse(std::span<const double> y) {
    const double m = mean_of(y);
    double s = 0.0;
    for (double v : y) s += (v - m) * (v - m);
    return s;
  }

  int grow(std::vector<std::uint32_t>& rows, int depth) {
    std::vector<double> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) y[i] = data_.y[rows[i]];
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, mean_of(y)});

    const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, hyper_.min_leaf));
    const double node_sse = sse(y);
    if (rows.size() < 2 * min_leaf || node_sse <= 0.0 || (hyper_.max_depth > 0 && depth >= hyper_.max_depth)) {
      return id;
    }
    const SplitCandidate split = best_split(rows, node_sse, min_leaf);
    if (split.feature < 0) return id;

    std::vector<std::uint32_t> left;
    std::vector<std::uint32_t> right;
    left.reserve(split.left_count);
    right.reserve(rows.size() - split.left_count);
    for (std::uint32_t r : rows) {
      (data_.x[r][split.feature] <= split.threshold ? left : right).push_back(r);
    }
    (*importance_)[split.feature] += split.gain;
    std::vector<std::uint32_t>().swap(rows);

    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    TreeNode& node = tree_.nodes[id];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  SplitCandidate best_split(const std::vector<std::uint32_t>& rows, double node_sse, std::size_t min_leaf) {
    std::array<int, kFeatureDim> order{};
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = kFeatureDim - 1; i > 0; --i) std::swap(order[i], order[rng_() % (i + 1)]);
    const std::size_t mtry = hyper_.max_features <= 0 ? kFeatureDim
                                                      : std::min<std::size_t>(hyper_.max_features, kFeatureDim);

    const std::size_t n = rows.size();
    std::vector<std::pair<double, double>> xy(n);
    SplitCandidate best;
    double total = 0.0;
    for (std::uint32_t r : rows) total += data_.y[r];
    // Beyond the first mtry features, keep looking only until some split is valid.
    for (std::size_t k = 0; k < kFeatureDim && (k < mtry || best.feature < 0); ++k) {
      const int f = order[k];
      for (std::size_t i = 0; i < n; ++i) xy[i] = {data_.x[rows[i]][f], data_.y[rows[i]]};
      std::sort(xy.begin(), xy.end());
      if (xy.front().first == xy.back().first) continue;
      double left_sum = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        left_sum += xy[i - 1].second;
        if (i < min_leaf || n - i < min_leaf || xy[i - 1].first == xy[i].first) continue;
        const double nl = static_cast<double>(i);
        const double nr = static_cast<double>(n - i);
        const double right_sum = total - left_sum;
        // SSE(parent) - SSE(left) - SSE(right), from the sums alone.
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - total * total / n;
        if (gain > best.gain) {
          double threshold = 0.5 * (xy[i - 1].first + xy[i].first);
          if (!(threshold < xy[i].first)) threshold = xy[i - 1].first;
          best = {f, threshold, i, gain};
        }
      }
    }
    if (best.feature >= 0) best.gain = std::min(best.gain, node_sse);
    return best;
  }

  const Dataset& data_;
  const ForestHyperparams& hyper_;
  std::mt19937_64 rng_;
  RegressionTree tree_;
  std::array<double, kFeatureDim>* importance_ = nullptr;
};

double tree_predict(const RegressionTree& tree, const FeatureVector& x) {
  int i = 0;
  while (tree.nodes[i].feature >= 0) {
    const TreeNode& n = tree.nodes[i];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[i].value;
}

}  // namespace

Standardizer Standardizer::fit(std::span<const SignalVector> training_signals) {
  if (training_signals.empty()) throw InvalidArgument("standardizer: empty training set");
  std::array<double, 4> mean{};
  for (const SignalVector& s : training_signals) {
    const auto a = as_array(s);
    for (std::size_t j = 0; j < 4; ++j) mean[j] += a[j];
  }
  const double n = static_cast<double>(training_signals.size());
  for (double& m : mean) m /= n;
  std::array<double, 4> var{};
  for (const SignalVector& s : training_signals) {
    const auto a = as_array(s);
    for (std::size_t j = 0; j < 4; ++j) var[j] += (a[j] - mean[j]) * (a[j] - mean[j]);
  }
  std::array<double, 4> sd{};
  for (std::size_t j = 0; j < 4; ++j) {
    sd[j] = std::sqrt(var[j] / n);
    if (!(sd[j] > 0.0)) sd[j] = 1.0;
  }
  return from_stats(mean, sd);
}

Standardizer Standardizer::from_stats(const std::array<double, 4>& mean, const std::array<double, 4>& sd) {
  for (std::size_t j = 0; j < 4; ++j) {
    if (!std::isfinite(mean[j]) || !(sd[j] > 0.0) || !std::isfinite(sd[j])) {
      throw InvalidArgument("standardizer: statistics must be finite with positive spread");
    }
  }
  Standardizer s;
  s.fitted_ = true;
  s.mean_ = mean;
  s.sd_ = sd;
  return s;
}

std::array<double, 4> Standardizer::transform(const SignalVector& s) const {
  if (!fitted_) throw StateError("standardizer used before fitting");
  const auto a = as_array(s);
  std::array<double, 4> z{};
  for (std::size_t j = 0; j < 4; ++j) z[j] = (a[j] - mean_[j]) / sd_[j];
  return z;
}

SignalVector Standardizer::inverse(const std::array<double, 4>& z) const {
  if (!fitted_) throw StateError("standardizer used before fitting");
  return {z[0] * sd_[0] + mean_[0], z[1] * sd_[1] + mean_[1], z[2] * sd_[2] + mean_[2], z[3] * sd_[3] + mean_[3]};
}

FeatureVector featurize(const SignalVector& signals, CompressionLevel compression, Gamma gamma,
                        const Standardizer& standardizer) {
  if (gamma.value() > kMaxCandidateGamma) {
    throw InvalidArgument("featurize: gamma " + std::to_string(gamma.value()) + " exceeds " +
                          std::to_string(kMaxCandidateGamma));
  }
  const auto z = standardizer.transform(signals);
  FeatureVector x{};
  std::copy(z.begin(), z.end(), x.begin());
  x[4 + index_of(compression)] = 1.0;
  x[7] = gamma.value() / static_cast<double>(kMaxCandidateGamma);
  return x;
}

Dataset make_dataset(std::span<const StepRecord> records, const Standardizer& standardizer) {
  Dataset d;
  d.x.reserve(records.size());
  d.y.reserve(records.size());
  for (const StepRecord& r : records) {
    d.x.push_back(featurize(r.signals, r.compression, r.gamma, standardizer));
    d.y.push_back(r.outcome.acceptance_rate);
  }
  return d;
}

std::string fingerprint(const Dataset& data) {
  std::string bytes;
  bytes.reserve(data.x.size() * (kFeatureDim + 1) * sizeof(double));
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    bytes.append(reinterpret_cast<const char*>(data.x[i].data()), kFeatureDim * sizeof(double));
    if (i < data.y.size()) bytes.append(reinterpret_cast<const char*>(&data.y[i]), sizeof(double));
  }
  return sha256_hex(bytes);
}

double PredictorModel::raw(const FeatureVector& x) const {
  if (const auto* r = std::get_if<RidgeParams>(&params)) {
    return kernels::dot(r->weights, x) + r->intercept;
  }
  if (const auto* m = std::get_if<MlpParams>(&params)) {
    const std::size_t h = m->b1.size();
    double hidden[64];
    std::vector<double> big;
    double* act = hidden;
    if (h > 64) {
      big.resize(h);
      act = big.data();
    }
    for (std::size_t j = 0; j < h; ++j) {
      const double a = kernels::active().dot(&m->w1[j * kFeatureDim], x.data(), kFeatureDim) + m->b1[j];
      act[j] = a > 0.0 ? a : 0.0;
    }
    return kernels::active().dot(m->w2.data(), act, h) + m->b2;
  }
  const auto& f = std::get<ForestParams>(params);
  double s = 0.0;
  for (const RegressionTree& t : f.trees) s += tree_predict(t, x);
  return s / static_cast<double>(f.trees.size());
}

PredictorModel ridge_fit(const Dataset& data, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("ridge: lambda must be finite and >= 0");
  check_training_data(data, "ridge");
  const Eigen::Index n = static_cast<Eigen::Index>(data.x.size());
  constexpr Eigen::Index d = kFeatureDim;
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = data.x[i][j];
    y(i) = data.y[i];
  }
  // Centering absorbs the unpenalized intercept.
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  x.rowwise() -= x_mean;
  y.array() -= y_mean;

  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < d) {
      throw NumericError("ridge: singular normal equations at lambda = 0 (centered design has rank " +
                         std::to_string(qr.rank()) + " < " + std::to_string(d) +
                         "); use lambda > 0 or drop collinear columns");
    }
  }
  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += lambda;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericError("ridge: normal equations are not positive definite");
  }
  const Eigen::VectorXd w = ldlt.solve(x.transpose() * y);
  if (!w.allFinite()) throw NumericError("ridge: solution is not finite");

  RidgeParams p;
  p.lambda = lambda;
  for (Eigen::Index j = 0; j < d; ++j) p.weights[j] = w(j);
  p.intercept = y_mean - x_mean.dot(w);

  PredictorModel m;
  m.variant = "ridge";
  m.params = p;
  m.metadata.data_fingerprint = fingerprint(data);
  m.metadata.training_rows = n;
  return m;
}

double mlp_loss_and_gradient(const MlpParams& p, std::span<const FeatureVector> x, std::span<const double> y,
                             MlpParams* grad) {
  const std::size_t h = p.b1.size();
  if (p.w1.size() != h * kFeatureDim || p.w2.size() != h) throw InvalidArgument("mlp: inconsistent parameter shapes");
  if (x.size() != y.size() || x.empty()) throw InvalidArgument("mlp: batch rows and targets must match and be non-empty");
  if (grad) {
    grad->hyper = p.hyper;
    grad->w1.assign(p.w1.size(), 0.0);
    grad->b1.assign(h, 0.0);
    grad->w2.assign(h, 0.0);
    grad->b2 = 0.0;
  }
  std::vector<double> pre(h);
  std::vector<double> act(h);
  const double inv_n = 1.0 / static_cast<double>(x.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double out = p.b2;
    for (std::size_t j = 0; j < h; ++j) {
      double a = p.b1[j];
      for (std::size_t k = 0; k < kFeatureDim; ++k) a += p.w1[j * kFeatureDim + k] * x[i][k];
      pre[j] = a;
      act[j] = a > 0.0 ? a : 0.0;
      out += p.w2[j] * act[j];
    }
    const double err = out - y[i];
    loss += err * err * inv_n;
    if (!grad) continue;
    const double g_out = 2.0 * err * inv_n;
    grad->b2 += g_out;
    for (std::size_t j = 0; j < h; ++j) {
      grad->w2[j] += g_out * act[j];
      if (pre[j] <= 0.0) continue;
      const double g_pre = g_out * p.w2[j];
      grad->b1[j] += g_pre;
      for (std::size_t k = 0; k < kFeatureDim; ++k) grad->w1[j * kFeatureDim + k] += g_pre * x[i][k];
    }
  }
  return loss;
}

PredictorModel mlp_fit(const Dataset& data, const MlpHyperparams& hyper, std::uint64_t seed) {
  if (hyper.hidden_units < 1 || hyper.batch_size < 1 || hyper.epochs < 0 || !(hyper.learning_rate > 0.0) ||
      !(hyper.momentum >= 0.0 && hyper.momentum < 1.0)) {
    throw InvalidArgument("mlp: invalid hyperparameters");
  }
  check_training_data(data, "mlp");
  const std::size_t n = data.x.size();
  const std::size_t h = static_cast<std::size_t>(hyper.hidden_units);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> init(0.0, std::sqrt(2.0 / kFeatureDim));
  MlpParams p;
  p.hyper = hyper;
  p.w1.resize(h * kFeatureDim);
  for (double& w : p.w1) w = init(rng);
  p.b1.assign(h, 0.0);
  // Zero output weights start the network at the best constant predictor.
  p.w2.assign(h, 0.0);
  p.b2 = mean_of(data.y);
  const MlpParams initial = p;
  const double initial_mse = mse_of(p, data);

  MlpParams vel;
  vel.w1.assign(p.w1.size(), 0.0);
  vel.b1.assign(h, 0.0);
  vel.w2.assign(h, 0.0);
  MlpParams grad;

  const std::size_t batch = static_cast<std::size_t>(hyper.batch_size);
  const std::size_t per_epoch = (n + batch - 1) / batch;
  const double total_updates = static_cast<double>(per_epoch) * hyper.epochs;
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0U);
  std::vector<FeatureVector> xb;
  std::vector<double> yb;
  std::size_t t = 0;

  auto step = [&](std::vector<double>& param, std::vector<double>& v, const std::vector<double>& g, double lr) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      v[i] = hyper.momentum * v[i] + g[i];
      param[i] -= lr * v[i];
    }
  };

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng() % (i + 1)]);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      xb.clear();
      yb.clear();
      for (std::size_t i = start; i < end; ++i) {
        xb.push_back(data.x[perm[i]]);
        yb.push_back(data.y[perm[i]]);
      }
      const double loss = mlp_loss_and_gradient(p, xb, yb, &grad);
      if (!std::isfinite(loss)) {
        throw NumericError("mlp: non-finite loss at epoch " + std::to_string(epoch) + ", update " + std::to_string(t));
      }
      const double lr = hyper.learning_rate * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(t) / total_updates));
      ++t;
      step(p.w1, vel.w1, grad.w1, lr);
      step(p.b1, vel.b1, grad.b1, lr);
      step(p.w2, vel.w2, grad.w2, lr);
      vel.b2 = hyper.momentum * vel.b2 + grad.b2;
      p.b2 -= lr * vel.b2;
    }
  }
  const double final_mse = mse_of(p, data);
  if (!std::isfinite(final_mse)) throw NumericError("mlp: non-finite training loss after the last epoch");
  if (final_mse > initial_mse) p = initial;

  PredictorModel m;
  m.variant = "mlp" + std::to_string(h);
  m.params = std::move(p);
  m.metadata.seed = seed;
  m.metadata.data_fingerprint = fingerprint(data);
  m.metadata.training_rows = static_cast<std::int64_t>(n);
  return m;
}

PredictorModel forest_fit(const Dataset& data, const ForestHyperparams& hyper, std::uint64_t seed) {
  if (hyper.n_trees < 1) throw InvalidArgument("forest: n_trees must be >= 1, got " + std::to_string(hyper.n_trees));
  if (hyper.min_leaf < 1 || hyper.max_features < 0 || hyper.max_depth < 0) {
    throw InvalidArgument("forest: invalid hyperparameters");
  }
  check_training_data(data, "forest");

  // Canonical row order makes the forest independent of how the caller ordered the data.
  std::vector<std::uint32_t> order(data.x.size());
  std::iota(order.begin(), order.end(), 0U);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (data.x[a] != data.x[b]) return data.x[a] < data.x[b];
    return data.y[a] < data.y[b];
  });
  Dataset canon;
  canon.x.reserve(order.size());
  canon.y.reserve(order.size());
  for (std::uint32_t i : order) {
    canon.x.push_back(data.x[i]);
    canon.y.push_back(data.y[i]);
  }

  ForestParams f;
  f.hyper = hyper;
  f.trees.reserve(hyper.n_trees);
  const std::size_t n = canon.x.size();
  for (int t = 0; t < hyper.n_trees; ++t) {
    const std::uint64_t tree_seed = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(t) + 1));
    std::mt19937_64 draw(tree_seed);
    std::vector<std::uint32_t> rows(n);
    if (hyper.bootstrap) {
      for (auto& r : rows) r = static_cast<std::uint32_t>(draw() % n);
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), 0U);
    }
    std::array<double, kFeatureDim> tree_importance{};
    TreeBuilder builder(canon, hyper, splitmix64(tree_seed));
    f.trees.push_back(builder.build(std::move(rows), tree_importance));
    const double total = std::accumulate(tree_importance.begin(), tree_importance.end(), 0.0);
    if (total > 0.0) {
      for (std::size_t j = 0; j < kFeatureDim; ++j) f.importance[j] += tree_importance[j] / total;
    }
  }
  const double total = std::accumulate(f.importance.begin(), f.importance.end(), 0.0);
  if (total > 0.0) {
    for (double& v : f.importance) v /= total;
  }

  PredictorModel m;
  m.variant = "rf" + std::to_string(hyper.n_trees);
  m.params = std::move(f);
  m.metadata.seed = seed;
  m.metadata.data_fingerprint = fingerprint(data);
  m.metadata.training_rows = static_cast<std::int64_t>(n);
  return m;
}

std::array<double, kFeatureDim> feature_importance(const PredictorModel& model) {
  const auto* f = std::get_if<ForestParams>(&model.params);
  if (!f) throw InvalidArgument("feature_importance: model '" + model.variant + "' is not a forest");
  return f->importance;
}

double predict(const PredictorModel& model, const FeatureVector& features) {
  return std::clamp(model.raw(features), 0.0, 1.0);
}

double predict(const PredictorModel& model, std::span<const double> features) {
  if (features.size() != kFeatureDim) {
    throw InvalidArgument("predict: expected " + std::to_string(kFeatureDim) + " features, got " +
                          std::to_string(features.size()));
  }
  FeatureVector x{};
  std::copy(features.begin(), features.end(), x.begin());
  return predict(model, x);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("pearson: need two equal-length series of >= 2");
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw NumericError("pearson: undefined for a zero-variance series");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

PredictorMetrics eval_metrics(const PredictorModel& model, const Dataset& test) {
  if (test.x.empty() || test.x.size() != test.y.size()) {
    throw InvalidArgument("eval_metrics: test set must be non-empty with matching targets");
  }
  std::vector<double> pred(test.x.size());
  double se = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = predict(model, test.x[i]);
    se += (pred[i] - test.y[i]) * (pred[i] - test.y[i]);
  }
  PredictorMetrics m;
  m.test_mse = se / static_cast<double>(pred.size());
  double var_y = 0.0;
  const double my = mean_of(test.y);
  for (double v : test.y) var_y += (v - my) * (v - my);
  if (var_y == 0.0) throw NumericError("eval_metrics: Pearson undefined, test targets have zero variance");
  const bool constant_pred = std::all_of(pred.begin(), pred.end(), [&](double v) { return v == pred.front(); });
  m.test_pearson = constant_pred ? 0.0 : pearson(pred, test.y);
  return m;
}

void check_variant(const std::string& variant) {
  if (variant == "ridge" || variant == "mlp16" || variant == "mlp32") return;
  if (variant.size() > 2 && variant.starts_with("rf")) {
    int n = 0;
    const char* first = variant.data() + 2;
    const char* last = variant.data() + variant.size();
    auto [ptr, ec] = std::from_chars(first, last, n);
    if (ec == std::errc() && ptr == last && n >= 1) return;
  }
  throw UsageError("unknown model variant '" + variant + "'; valid variants: ridge, mlp16, mlp32, rf10, rf100 (rf<N>)");
}

PredictorModel train_variant(const std::string& variant, std::span<const StepRecord> train, const TrainConfig& config,
                             std::uint64_t seed) {
  check_variant(variant);
  std::vector<SignalVector> signals;
  signals.reserve(train.size());
  for (const StepRecord& r : train) signals.push_back(r.signals);
  const Standardizer standardizer = Standardizer::fit(signals);
  const Dataset data = make_dataset(train, standardizer);

  PredictorModel m;
  if (variant == "ridge") {
    m = ridge_fit(data, config.ridge_lambda);
    m.metadata.seed = seed;
  } else if (variant.starts_with("mlp")) {
    MlpHyperparams hyper = config.mlp;
    hyper.hidden_units = variant == "mlp16" ? 16 : 32;
    m = mlp_fit(data, hyper, seed);
  } else {
    ForestHyperparams hyper = config.forest;
    hyper.n_trees = std::stoi(variant.substr(2));
    m = forest_fit(data, hyper, seed);
  }
  m.standardizer = standardizer;
  return m;
}

}  // namespace speckv
