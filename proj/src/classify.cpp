// Copyright 2026 The gridtarget Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gridtarget/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"

#include "gridtarget/error.hpp"
#include "gridtarget/parallel.hpp"

namespace gridtarget {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Features

FeatureVector extract_features(std::span<const double> pixels, double area) {
  if (pixels.empty()) throw ArgumentError("features of an empty crop");
  FeatureVector f;
  const double n = static_cast<double>(pixels.size());
  f.min = *std::min_element(pixels.begin(), pixels.end());
  f.max = *std::max_element(pixels.begin(), pixels.end());
  f.mean = std::accumulate(pixels.begin(), pixels.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : pixels) {
    const double d = x - f.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  f.variance = m2;
  if (m2 >= 1e-12) {
    f.skew = m3 / std::pow(m2, 1.5);
    f.kurtosis = m4 / (m2 * m2) - 3.0;
  }
  f.area = area;
  return f;
}

FeatureVector extract_features(const SquareCrop& crop) {
  return extract_features(crop.pixels.data, crop.source_rect.width * crop.source_rect.height);
}

Matrix Matrix::from_features(const std::vector<FeatureVector>& fv) {
  Matrix m(fv.size(), kFeatureCount);
  for (std::size_t r = 0; r < fv.size(); ++r) {
    const auto v = fv[r].values();
    std::copy(v.begin(), v.end(), m.values.begin() + static_cast<std::ptrdiff_t>(r * kFeatureCount));
  }
  return m;
}

namespace {

void check_labels(const Matrix& x, const Labels& y) {
  if (x.rows != y.size()) throw ArgumentError("label count differs from sample count");
}

std::pair<std::size_t, std::size_t> class_counts(const Labels& y) {
  std::size_t pos = 0;
  for (auto v : y) pos += v ? 1 : 0;
  return {y.size() - pos, pos};
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double linear_margin(const LinearModel& m, std::span<const double> row) {
  double z = m.bias;
  for (std::size_t c = 0; c < row.size(); ++c) {
    z += m.weights[c] * (row[c] - m.feature_means[c]) / m.feature_stds[c];
  }
  return z;
}

}  // namespace

// ---------------------------------------------------------------------------
// Logistic regression

double logreg_objective(const LinearModel& m, const Matrix& x, const Labels& y, double inverse_regularization) {
  check_labels(x, y);
  const double n = static_cast<double>(x.rows);
  double loss = 0.0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double z = linear_margin(m, x.row(r));
    loss += y[r] ? softplus(-z) : softplus(z);
  }
  double wsq = 0.0;
  for (double w : m.weights) wsq += w * w;
  return loss / n + wsq / (2.0 * n * inverse_regularization);
}

LinearModel train_logreg(const Matrix& x, const Labels& y, const LogRegOptions& opts) {
  check_labels(x, y);
  const auto [neg, pos] = class_counts(y);
  if (neg == 0 || pos == 0) throw TrainingError("logistic regression needs both classes");
  if (!(opts.inverse_regularization > 0.0) || !(opts.learning_rate > 0.0)) {
    throw ArgumentError("learning rate and inverse regularization must be positive");
  }
  const std::size_t d = x.cols;
  const double n = static_cast<double>(x.rows);

  LinearModel m;
  m.weights.assign(d, 0.0);
  m.feature_means.assign(d, 0.0);
  m.feature_stds.assign(d, 1.0);
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) s += x(r, c);
    const double mu = s / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) ss += (x(r, c) - mu) * (x(r, c) - mu);
    const double sd = std::sqrt(ss / n);
    m.feature_means[c] = mu;
    m.feature_stds[c] = sd < 1e-12 ? 1.0 : sd;
  }

  Matrix z(x.rows, d);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) z(r, c) = (x(r, c) - m.feature_means[c]) / m.feature_stds[c];
  }

  const double l2 = 1.0 / (n * opts.inverse_regularization);
  std::vector<double> grad(d);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_bias = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) {
      double margin = m.bias;
      for (std::size_t c = 0; c < d; ++c) margin += m.weights[c] * z(r, c);
      const double residual = sigmoid(margin) - (y[r] ? 1.0 : 0.0);
      grad_bias += residual;
      for (std::size_t c = 0; c < d; ++c) grad[c] += residual * z(r, c);
    }
    double norm_sq = 0.0;
    grad_bias /= n;
    norm_sq += grad_bias * grad_bias;
    for (std::size_t c = 0; c < d; ++c) {
      grad[c] = grad[c] / n + l2 * m.weights[c];
      norm_sq += grad[c] * grad[c];
    }
    if (std::sqrt(norm_sq) < opts.gradient_tol) break;
    m.bias -= opts.learning_rate * grad_bias;
    for (std::size_t c = 0; c < d; ++c) m.weights[c] -= opts.learning_rate * grad[c];
  }
  return m;
}

// ---------------------------------------------------------------------------
// Random forest

double DecisionTree::predict(std::span<const double> x) const {
  int node = 0;
  while (nodes[node].feature >= 0) {
    const TreeNode& n = nodes[node];
    node = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[node].probability;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const Labels& y, std::size_t mtry, int max_depth, std::mt19937_64& rng)
      : x_(x), y_(y), mtry_(mtry), max_depth_(max_depth), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> samples) {
    tree_.nodes.clear();
    grow(samples, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();
  };

  int grow(std::vector<std::size_t>& samples, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::size_t pos = 0;
    for (auto s : samples) pos += y_[s] ? 1 : 0;
    tree_.nodes[id].probability = static_cast<double>(pos) / static_cast<double>(samples.size());
    const bool pure = pos == 0 || pos == samples.size();
    if (pure || samples.size() < 2 || (max_depth_ > 0 && depth >= max_depth_)) return id;

    const Split split = best_split(samples);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto s : samples) (x_(s, split.feature) <= split.threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();
    tree_.nodes[id].feature = split.feature;
    tree_.nodes[id].threshold = split.threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  Split best_split(const std::vector<std::size_t>& samples) {
    std::vector<std::size_t> features(x_.cols);
    std::iota(features.begin(), features.end(), 0);
    // Partial Fisher-Yates: the first mtry entries are the random subset,
    // the rest are fallbacks when the subset has no usable split.
    for (std::size_t i = 0; i + 1 < features.size(); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, features.size() - 1);
      std::swap(features[i], features[pick(rng_)]);
    }
    Split best;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (i >= mtry_ && best.feature >= 0) break;
      scan_feature(samples, features[i], best);
    }
    return best;
  }

  void scan_feature(const std::vector<std::size_t>& samples, std::size_t f, Split& best) {
    std::vector<std::pair<double, std::uint8_t>> vals;
    vals.reserve(samples.size());
    std::size_t total_pos = 0;
    for (auto s : samples) {
      vals.emplace_back(x_(s, f), y_[s]);
      total_pos += y_[s] ? 1 : 0;
    }
    std::sort(vals.begin(), vals.end());
    const double n = static_cast<double>(vals.size());
    std::size_t left_pos = 0;
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      left_pos += vals[i].second ? 1 : 0;
      if (vals[i].first == vals[i + 1].first) continue;
      const double nl = static_cast<double>(i + 1), nr = n - nl;
      const double pl = left_pos / nl;
      const double pr = (total_pos - left_pos) / nr;
      const double impurity = nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr);
      if (impurity < best.impurity) {
        best.impurity = impurity;
        best.feature = static_cast<int>(f);
        double mid = 0.5 * (vals[i].first + vals[i + 1].first);
        // Guard against the midpoint rounding up to the right-hand value.
        if (mid >= vals[i + 1].first) mid = vals[i].first;
        best.threshold = mid;
      }
    }
  }

  const Matrix& x_;
  const Labels& y_;
  std::size_t mtry_;
  int max_depth_;
  std::mt19937_64& rng_;
  DecisionTree tree_;
};

}  // namespace

ForestModel train_forest(const Matrix& x, const Labels& y, const ForestOptions& opts) {
  check_labels(x, y);
  if (x.rows < 2) throw TrainingError("forest needs at least two samples");
  if (opts.tree_count < 1) throw ArgumentError("tree_count must be >= 1");
  ForestModel model;
  model.max_depth = opts.max_depth;
  model.seed = opts.seed;
  model.feature_count = x.cols;
  const std::size_t mtry = opts.features_per_split > 0
                               ? std::min(opts.features_per_split, x.cols)
                               : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols))));
  model.trees.resize(static_cast<std::size_t>(opts.tree_count));
  parallel_for(model.trees.size(), opts.threads, [&](std::size_t t) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> draw(0, x.rows - 1);
    std::vector<std::size_t> bootstrap(x.rows);
    for (auto& s : bootstrap) s = draw(rng);
    TreeBuilder builder(x, y, mtry, opts.max_depth, rng);
    model.trees[t] = builder.build(std::move(bootstrap));
  });
  return model;
}

// ---------------------------------------------------------------------------
// Prediction

std::vector<double> predict_scores(const LinearModel& m, const Matrix& x) {
  if (x.cols != m.weights.size()) throw ArgumentError("feature dimension mismatch");
  std::vector<double> out(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) out[r] = sigmoid(linear_margin(m, x.row(r)));
  return out;
}

std::vector<double> predict_scores(const ForestModel& m, const Matrix& x) {
  if (x.cols != m.feature_count) throw ArgumentError("feature dimension mismatch");
  if (m.trees.empty()) throw ArgumentError("forest has no trees");
  std::vector<double> out(x.rows, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    double s = 0.0;
    for (const auto& t : m.trees) s += t.predict(x.row(r));
    out[r] = s / static_cast<double>(m.trees.size());
  }
  return out;
}

std::vector<double> predict_scores(const Classifier& m, const Matrix& x) {
  return std::visit([&](const auto& model) { return predict_scores(model, x); }, m);
}

// ---------------------------------------------------------------------------
// Permutation importance

std::vector<double> permutation_importance(const Classifier& m, const Matrix& x, const Labels& y,
                                           const Metric& metric, int repeats, std::uint64_t seed) {
  check_labels(x, y);
  if (repeats < 1) throw ArgumentError("repeats must be >= 1");
  const double baseline = metric(predict_scores(m, x), y);
  std::vector<double> importance(x.cols, 0.0);
  std::vector<std::size_t> perm(x.rows);
  for (int r = 0; r < repeats; ++r) {
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r) * 0x9e3779b97f4a7c15ULL);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t f = 0; f < x.cols; ++f) {
      Matrix shuffled = x;
      for (std::size_t i = 0; i < x.rows; ++i) shuffled(i, f) = x(perm[i], f);
      importance[f] += baseline - metric(predict_scores(m, shuffled), y);
    }
  }
  for (double& v : importance) v /= repeats;
  return importance;
}

// ---------------------------------------------------------------------------
// Ranking metrics

double roc_auc(std::span<const double> scores, const Labels& labels) {
  if (scores.size() != labels.size()) throw ArgumentError("score and label counts differ");
  const auto [neg, pos] = class_counts(labels);
  if (neg == 0 || pos == 0) throw MetricError("ROC AUC is undefined without both classes");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) pos_rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(pos), nn = static_cast<double>(neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double average_precision(std::span<const double> scores, const Labels& labels) {
  if (scores.size() != labels.size()) throw ArgumentError("score and label counts differ");
  const auto [neg, pos] = class_counts(labels);
  if (pos == 0) throw MetricError("average precision is undefined without positives");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (labels[order[k]]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / static_cast<double>(pos);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char* kModelFormat = "gridtarget-model";
constexpr int kModelVersion = 1;

json feature_names_json(std::size_t cols) {
  json names = json::array();
  for (std::size_t c = 0; c < cols; ++c) {
    names.push_back(c < kFeatureCount ? std::string(kFeatureNames[c]) : "f" + std::to_string(c));
  }
  return names;
}

}  // namespace

std::string classifier_to_json(const Classifier& m) {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  if (const auto* lin = std::get_if<LinearModel>(&m)) {
    j["kind"] = "logreg";
    j["features"] = feature_names_json(lin->weights.size());
    j["weights"] = lin->weights;
    j["bias"] = lin->bias;
    j["feature_means"] = lin->feature_means;
    j["feature_stds"] = lin->feature_stds;
  } else {
    const auto& forest = std::get<ForestModel>(m);
    j["kind"] = "forest";
    j["features"] = feature_names_json(forest.feature_count);
    j["max_depth"] = forest.max_depth;
    j["seed"] = forest.seed;
    json trees = json::array();
    for (const auto& t : forest.trees) {
      json nodes = json::array();
      for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.probability});
      trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
  }
  return j.dump(1);
}

Classifier classifier_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model JSON: ") + e.what());
  }
  try {
    if (j.at("format") != kModelFormat) throw FormatError("not a gridtarget model file");
    if (j.at("version").get<int>() != kModelVersion) throw FormatError("unsupported model version");
    const auto features = j.at("features").get<std::vector<std::string>>();
    for (std::size_t c = 0; c < std::min(features.size(), kFeatureCount); ++c) {
      if (features[c] != kFeatureNames[c]) throw FormatError("model feature order does not match");
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "logreg") {
      LinearModel m;
      m.weights = j.at("weights").get<std::vector<double>>();
      m.bias = j.at("bias").get<double>();
      m.feature_means = j.at("feature_means").get<std::vector<double>>();
      m.feature_stds = j.at("feature_stds").get<std::vector<double>>();
      if (m.feature_means.size() != m.weights.size() || m.feature_stds.size() != m.weights.size()) {
        throw FormatError("logreg model arrays have inconsistent lengths");
      }
      return m;
    }
    if (kind == "forest") {
      ForestModel m;
      m.feature_count = features.size();
      m.max_depth = j.at("max_depth").get<int>();
      m.seed = j.at("seed").get<std::uint64_t>();
      for (const auto& tj : j.at("trees")) {
        DecisionTree t;
        for (const auto& nj : tj) {
          TreeNode n{nj.at(0).get<int>(), nj.at(1).get<double>(), nj.at(2).get<int>(), nj.at(3).get<int>(),
                     nj.at(4).get<double>()};
          t.nodes.push_back(n);
        }
        const int count = static_cast<int>(t.nodes.size());
        for (int i = 0; i < count; ++i) {
          const TreeNode& n = t.nodes[i];
          // Children always follow their parent, which rules out cycles.
          if (n.feature >= static_cast<int>(m.feature_count) ||
              (n.feature >= 0 && (n.left <= i || n.right <= i || n.left >= count || n.right >= count)) ||
              n.probability < 0.0 || n.probability > 1.0) {
            throw FormatError("forest model has an invalid node");
          }
        }
        if (t.nodes.empty()) throw FormatError("forest model has an empty tree");
        m.trees.push_back(std::move(t));
      }
      return m;
    }
    throw FormatError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw FormatError(std::string("model JSON: ") + e.what());
  }
}

}  // namespace gridtarget
