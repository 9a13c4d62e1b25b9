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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gridtarget/squares.hpp"

namespace gridtarget {

inline constexpr std::size_t kFeatureCount = 7;

// Column order used by every model and by the model JSON.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "mean", "max", "min", "variance", "skew", "kurtosis", "area"};

struct FeatureVector {
  double mean = 0.0;
  double max = 0.0;
  double min = 0.0;
  double variance = 0.0;
  double skew = 0.0;
  double kurtosis = 0.0;  // excess
  double area = 0.0;

  std::array<double, kFeatureCount> values() const {
    return {mean, max, min, variance, skew, kurtosis, area};
  }
};

// Central moments of the crop pixels; skew and kurtosis are 0 when the
// variance is below 1e-12. Area comes from the source rectangle.
FeatureVector extract_features(const SquareCrop& crop);
FeatureVector extract_features(std::span<const double> pixels, double area);

// Dense row-major sample matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

  static Matrix from_features(const std::vector<FeatureVector>& fv);
};

using Labels = std::vector<std::uint8_t>;

struct LinearModel {
  std::vector<double> weights;  // on standardized features
  double bias = 0.0;
  std::vector<double> feature_means;
  std::vector<double> feature_stds;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;   // x[feature] <= threshold
  int right = -1;
  double probability = 0.0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double predict(std::span<const double> x) const;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  int max_depth = 0;  // 0: unlimited
  std::uint64_t seed = 0;
  std::size_t feature_count = kFeatureCount;
};

using Classifier = std::variant<LinearModel, ForestModel>;

struct LogRegOptions {
  int epochs = 20000;
  double learning_rate = 0.5;
  // Inverse L2 strength, as in the usual C parameterization.
  double inverse_regularization = 1.0;
  double gradient_tol = 1e-6;
};

// Full-batch gradient descent on the L2-regularized mean cross-entropy over
// standardized features. Throws TrainingError when only one class is present.
LinearModel train_logreg(const Matrix& x, const Labels& y, const LogRegOptions& opts = {});

// Objective minimized by train_logreg, evaluated at the model's parameters.
double logreg_objective(const LinearModel& m, const Matrix& x, const Labels& y, double inverse_regularization = 1.0);

struct ForestOptions {
  int tree_count = 100;
  int max_depth = 0;  // 0: grow until pure
  std::uint64_t seed = 0;
  // Features tried per split; 0 means floor(sqrt(cols)).
  std::size_t features_per_split = 0;
  int threads = 0;  // 0: hardware concurrency
};

// Bootstrap-sampled Gini trees. Deterministic for a fixed seed regardless of
// thread count.
ForestModel train_forest(const Matrix& x, const Labels& y, const ForestOptions& opts = {});

// Scores in [0, 1]. Throws ArgumentError when x has the wrong width.
std::vector<double> predict_scores(const LinearModel& m, const Matrix& x);
std::vector<double> predict_scores(const ForestModel& m, const Matrix& x);
std::vector<double> predict_scores(const Classifier& m, const Matrix& x);

using Metric = std::function<double(std::span<const double>, const Labels&)>;

// importance[f] = mean over repeats of metric(original) - metric(column f
// shuffled). One row permutation is drawn per repeat and reused for every
// column, so importances do not depend on column order.
std::vector<double> permutation_importance(const Classifier& m, const Matrix& x, const Labels& y,
                                           const Metric& metric, int repeats = 10, std::uint64_t seed = 0);

// Mann-Whitney estimate with ties counted one half. Throws MetricError
// unless both classes are present.
double roc_auc(std::span<const double> scores, const Labels& labels);

// Sum over positives of precision at their rank divided by the positive
// count, descending score, ties ordered by index. Throws MetricError
// without positives.
double average_precision(std::span<const double> scores, const Labels& labels);

// Versioned JSON with the feature order pinned to kFeatureNames.
std::string classifier_to_json(const Classifier& m);
Classifier classifier_from_json(const std::string& text);

}  // namespace gridtarget
