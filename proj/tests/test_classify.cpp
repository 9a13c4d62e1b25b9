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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "gridtarget/classify.hpp"
#include "gridtarget/error.hpp"
#include "test_support.hpp"

using namespace gridtarget;

namespace {

struct Dataset {
  Matrix x;
  Labels y;
};

// Noisy two-class data in `d` dimensions; class 1 is shifted along `shift`.
Dataset gaussian_classes(std::size_t n, std::size_t d, std::vector<double> shift, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Dataset ds{Matrix(n, d), Labels(n)};
  for (std::size_t r = 0; r < n; ++r) {
    ds.y[r] = r % 2;
    for (std::size_t c = 0; c < d; ++c) ds.x(r, c) = g(rng) + (ds.y[r] ? shift[c] : 0.0);
  }
  return ds;
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Regularized mean cross-entropy computed from scratch for given weights.
double oracle_objective(const LinearModel& m, const std::vector<double>& w, const Matrix& x, const Labels& y) {
  double loss = 0.0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    double z = m.bias;
    for (std::size_t c = 0; c < x.cols; ++c) z += w[c] * (x(r, c) - m.feature_means[c]) / m.feature_stds[c];
    loss += y[r] ? softplus(-z) : softplus(z);
  }
  double wsq = 0.0;
  for (double v : w) wsq += v * v;
  return loss / x.rows + wsq / (2.0 * x.rows);
}

Labels as_labels(std::initializer_list<int> v) {
  Labels out;
  for (int i : v) out.push_back(static_cast<std::uint8_t>(i));
  return out;
}

double accuracy(const std::vector<double>& s, const Labels& y) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < s.size(); ++i) ok += (s[i] >= 0.5) == (y[i] == 1);
  return static_cast<double>(ok) / s.size();
}

}  // namespace

TEST_CASE("features of a 2x2 crop [1, 1, 3, 3]") {
  SquareCrop crop;
  crop.pixels = GrayImage(2, 2);
  crop.pixels.data = {1, 1, 3, 3};
  crop.source_rect = RotatedRect{{5, 5}, 2.0, 2.0, 0.0};
  const FeatureVector f = extract_features(crop);
  CHECK(f.mean == 2.0);
  CHECK(f.max == 3.0);
  CHECK(f.min == 1.0);
  CHECK(f.variance == 1.0);
  CHECK(f.skew == 0.0);
  CHECK(f.kurtosis == -2.0);
  CHECK(f.area == 4.0);
}

TEST_CASE("constant crop has zero variance, skew, kurtosis") {
  const std::vector<double> px(25, 4.0);
  const FeatureVector f = extract_features(px, 25.0);
  CHECK(f.variance == 0.0);
  CHECK(f.skew == 0.0);
  CHECK(f.kurtosis == 0.0);
}

TEST_CASE("features ignore pixel order; rotation keeps area") {
  const GrayImage img = testing::random_image(7, 5, 3);
  std::vector<double> shuffled = img.data;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(1));
  const auto a = extract_features(img.data, 35.0).values();
  const auto b = extract_features(shuffled, 35.0).values();
  for (std::size_t i = 0; i < kFeatureCount; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));

  SquareCrop c0;
  c0.pixels = img;
  c0.source_rect = RotatedRect{{0, 0}, 7.0, 5.0, 0.0};
  SquareCrop c1;
  c1.pixels = testing::rot90(img);
  c1.source_rect = RotatedRect{{0, 0}, 5.0, 7.0, 0.0};
  const auto f0 = extract_features(c0).values();
  const auto f1 = extract_features(c1).values();
  for (std::size_t i = 0; i < kFeatureCount; ++i) CHECK(f0[i] == doctest::Approx(f1[i]).epsilon(1e-12));

  // Moments against a direct two-pass computation.
  const double n = 35.0;
  const double mean = std::accumulate(img.data.begin(), img.data.end(), 0.0) / n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : img.data) {
    m2 += std::pow(v - mean, 2) / n;
    m3 += std::pow(v - mean, 3) / n;
    m4 += std::pow(v - mean, 4) / n;
  }
  CHECK(a[3] == doctest::Approx(m2).epsilon(1e-12));
  CHECK(a[4] == doctest::Approx(m3 / std::pow(m2, 1.5)).epsilon(1e-10));
  CHECK(a[5] == doctest::Approx(m4 / (m2 * m2) - 3.0).epsilon(1e-10));
}

TEST_CASE("logistic regression separates 1-D data perfectly") {
  Matrix x(20, 1);
  Labels y(20);
  for (std::size_t i = 0; i < 20; ++i) {
    y[i] = i % 2;
    x(i, 0) = y[i];
  }
  const LinearModel m = train_logreg(x, y);
  CHECK(roc_auc(predict_scores(m, x), y) == 1.0);
  CHECK_THROWS_AS(train_logreg(x, Labels(20, 1)), TrainingError);
}

TEST_CASE("logistic regression optimum beats every point of a 21^3 grid around it") {
  const Dataset ds = gaussian_classes(120, 3, {1.0, -0.5, 0.2}, 5);
  const LinearModel m = train_logreg(ds.x, ds.y);
  const double at_opt = oracle_objective(m, m.weights, ds.x, ds.y);
  CHECK(at_opt == doctest::Approx(logreg_objective(m, ds.x, ds.y)).epsilon(1e-12));
  double grid_min = std::numeric_limits<double>::infinity();
  for (int i = -10; i <= 10; ++i) {
    for (int j = -10; j <= 10; ++j) {
      for (int k = -10; k <= 10; ++k) {
        std::vector<double> w = m.weights;
        w[0] += 0.02 * i;
        w[1] += 0.02 * j;
        w[2] += 0.02 * k;
        grid_min = std::min(grid_min, oracle_objective(m, w, ds.x, ds.y));
      }
    }
  }
  CHECK(at_opt <= grid_min + 1e-12);
}

TEST_CASE("flipping labels on symmetric data negates the weights") {
  // Mirror-symmetric sample: every point has a reflected twin with the
  // opposite label.
  const Dataset half = gaussian_classes(60, 3, {1.5, 0.0, -1.0}, 8);
  Matrix x(120, 3);
  Labels y(120), flipped(120);
  for (std::size_t r = 0; r < 60; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      x(r, c) = half.x(r, c);
      x(r + 60, c) = -half.x(r, c);
    }
    y[r] = half.y[r];
    y[r + 60] = 1 - half.y[r];
  }
  for (std::size_t r = 0; r < 120; ++r) flipped[r] = 1 - y[r];
  const LinearModel a = train_logreg(x, y);
  const LinearModel b = train_logreg(x, flipped);
  for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(a.weights[c] + b.weights[c]) < 1e-4);
  CHECK(std::abs(a.bias + b.bias) < 1e-4);
}

TEST_CASE("logistic objective decreases monotonically with epochs") {
  const Dataset ds = gaussian_classes(80, 3, {0.8, 0.3, 0.0}, 2);
  double prev = std::numeric_limits<double>::infinity();
  for (int e = 1; e <= 40; ++e) {
    LogRegOptions o;
    o.epochs = e;
    const double obj = logreg_objective(train_logreg(ds.x, ds.y, o), ds.x, ds.y);
    CHECK(obj <= prev + 1e-15);
    prev = obj;
  }
}

TEST_CASE("scaled features give the same ranking") {
  const Dataset ds = gaussian_classes(100, kFeatureCount, {0.5, 0.1, 0.0, 0.3, -0.2, 0.0, 0.9}, 12);
  Matrix scaled = ds.x;
  for (auto& v : scaled.values) v *= 37.0;
  const auto s1 = predict_scores(train_logreg(ds.x, ds.y), ds.x);
  const auto s2 = predict_scores(train_logreg(scaled, ds.y), scaled);
  std::vector<std::size_t> o1(s1.size()), o2(s2.size());
  std::iota(o1.begin(), o1.end(), 0);
  std::iota(o2.begin(), o2.end(), 0);
  std::stable_sort(o1.begin(), o1.end(), [&](auto a, auto b) { return s1[a] > s1[b]; });
  std::stable_sort(o2.begin(), o2.end(), [&](auto a, auto b) { return s2[a] > s2[b]; });
  CHECK(o1 == o2);
}

TEST_CASE("predict_scores basics") {
  LinearModel zero;
  zero.weights.assign(kFeatureCount, 0.0);
  zero.feature_means.assign(kFeatureCount, 0.0);
  zero.feature_stds.assign(kFeatureCount, 1.0);
  const Matrix probe = gaussian_classes(10, kFeatureCount, std::vector<double>(kFeatureCount, 0.0), 1).x;
  for (double s : predict_scores(zero, probe)) CHECK(s == 0.5);

  ForestModel leaf;
  leaf.trees.push_back(DecisionTree{{TreeNode{-1, 0.0, -1, -1, 0.3}}});
  for (double s : predict_scores(leaf, probe)) CHECK(s == 0.3);

  LinearModel area_up = zero;
  area_up.weights[6] = 0.7;
  area_up.feature_means[6] = 100.0;
  area_up.feature_stds[6] = 10.0;
  Matrix two(2, kFeatureCount);
  two(0, 6) = 100.0;
  two(1, 6) = 101.0;
  const auto s = predict_scores(area_up, two);
  CHECK(s[1] > s[0]);

  CHECK_THROWS_AS(predict_scores(zero, Matrix(3, 4)), ArgumentError);
  CHECK_THROWS_AS(predict_scores(leaf, Matrix(3, 4)), ArgumentError);
}

TEST_CASE("forest learns a planted area threshold and is deterministic") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix x(100, kFeatureCount);
  Labels y(100);
  for (std::size_t r = 0; r < 100; ++r) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) x(r, c) = u(rng);
    x(r, 6) = 1000.0 * u(rng);
    y[r] = x(r, 6) > 500.0;
  }
  ForestOptions o;
  o.seed = 11;
  o.threads = 1;
  const ForestModel f = train_forest(x, y, o);
  CHECK(accuracy(predict_scores(f, x), y) >= 0.99);
  CHECK(f.trees.size() == 100);
  for (const auto& t : f.trees) {
    for (const auto& n : t.nodes) {
      CHECK(n.feature < static_cast<int>(kFeatureCount));
      CHECK(n.probability >= 0.0);
      CHECK(n.probability <= 1.0);
    }
  }
  o.threads = 4;
  const ForestModel g = train_forest(x, y, o);
  const Matrix probe = gaussian_classes(50, kFeatureCount, std::vector<double>(kFeatureCount, 0.0), 9).x;
  CHECK(predict_scores(f, probe) == predict_scores(g, probe));
  o.seed = 12;
  CHECK(predict_scores(train_forest(x, y, o), probe) != predict_scores(f, probe));
}

TEST_CASE("single-class forest is a constant model") {
  const Matrix x = gaussian_classes(20, kFeatureCount, std::vector<double>(kFeatureCount, 0.0), 3).x;
  const ForestModel f = train_forest(x, Labels(20, 1));
  for (double s : predict_scores(f, x)) CHECK(s == 1.0);
  CHECK_THROWS_AS(train_forest(Matrix(1, kFeatureCount), Labels(1, 0)), TrainingError);
}

TEST_CASE("forest on pure noise has chance-level held-out AUC") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CAPTURE(seed);
    const Dataset train = gaussian_classes(400, kFeatureCount, std::vector<double>(kFeatureCount, 0.0), 100 + seed);
    const Dataset test = gaussian_classes(400, kFeatureCount, std::vector<double>(kFeatureCount, 0.0), 200 + seed);
    ForestOptions o;
    o.seed = seed;
    o.tree_count = 50;
    const double auc = roc_auc(predict_scores(train_forest(train.x, train.y, o), test.x), test.y);
    CHECK(auc >= 0.4);
    CHECK(auc <= 0.6);
  }
}

TEST_CASE("permutation importance") {
  const Dataset ds = gaussian_classes(300, kFeatureCount, {0.6, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0}, 21);
  LinearModel m;
  m.weights = {0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0};
  m.feature_means.assign(kFeatureCount, 0.0);
  m.feature_stds.assign(kFeatureCount, 1.0);
  const Metric auc = [](std::span<const double> s, const Labels& y) { return roc_auc(s, y); };
  const auto imp = permutation_importance(m, ds.x, ds.y, auc, 10, 3);
  for (std::size_t f = 1; f < 6; ++f) CHECK(std::abs(imp[f]) <= 0.02);
  CHECK(imp[6] > imp[0]);
  CHECK(imp[0] > 0.0);

  // Reordering columns (data and weights together) reorders importances only.
  const std::vector<std::size_t> perm{6, 2, 0, 5, 1, 4, 3};
  Matrix xp(ds.x.rows, kFeatureCount);
  LinearModel mp = m;
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    mp.weights[c] = m.weights[perm[c]];
    for (std::size_t r = 0; r < ds.x.rows; ++r) xp(r, c) = ds.x(r, perm[c]);
  }
  const auto impp = permutation_importance(mp, xp, ds.y, auc, 10, 3);
  for (std::size_t c = 0; c < kFeatureCount; ++c) CHECK(impp[c] == doctest::Approx(imp[perm[c]]).epsilon(1e-12));
}

TEST_CASE("roc_auc") {
  CHECK(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, as_labels({0, 0, 1, 1})) == 1.0);
  CHECK(roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, as_labels({0, 0, 1, 1})) == 0.75);
  CHECK(roc_auc(std::vector<double>(6, 0.3), as_labels({0, 1, 0, 1, 1, 0})) == 0.5);
  CHECK_THROWS_AS(roc_auc(std::vector<double>{0.1, 0.2}, as_labels({1, 1})), MetricError);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u;
  std::vector<double> s(200), neg(200);
  Labels y(200);
  for (std::size_t i = 0; i < 200; ++i) {
    s[i] = u(rng);
    neg[i] = -s[i];
    y[i] = u(rng) < 0.3;
  }
  CHECK(roc_auc(s, y) == doctest::Approx(1.0 - roc_auc(neg, y)).epsilon(1e-12));
  // Pair-counting oracle.
  double concordant = 0, pairs = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    for (std::size_t j = 0; j < 200; ++j) {
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1;
        concordant += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
    }
  }
  CHECK(roc_auc(s, y) == doctest::Approx(concordant / pairs).epsilon(1e-12));
}

TEST_CASE("average_precision") {
  CHECK(average_precision(std::vector<double>{0.9, 0.1}, as_labels({1, 0})) == 1.0);
  CHECK(average_precision(std::vector<double>{0.9, 0.8}, as_labels({0, 1})) == 0.5);
  // Ties resolved by index: the earlier positive ranks first.
  CHECK(average_precision(std::vector<double>{0.5, 0.5, 0.5}, as_labels({0, 1, 0})) == 0.5);
  CHECK_THROWS_AS(average_precision(std::vector<double>{0.9, 0.8}, as_labels({0, 0})), MetricError);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u;
  std::vector<double> s(1000);
  Labels y(1000);
  double pos = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    s[i] = u(rng);
    y[i] = u(rng) < 0.3;
    pos += y[i];
  }
  CHECK(std::abs(average_precision(s, y) - pos / 1000.0) <= 0.05);
}

TEST_CASE("model JSON round-trips predictions exactly") {
  const Dataset ds = gaussian_classes(60, kFeatureCount, {1, 0, 0, 0, 0, 0, 1}, 7);
  ForestOptions o;
  o.tree_count = 10;
  const Classifier models[] = {train_logreg(ds.x, ds.y), train_forest(ds.x, ds.y, o)};
  for (const auto& m : models) {
    const std::string text = classifier_to_json(m);
    const Classifier back = classifier_from_json(text);
    CHECK(back.index() == m.index());
    CHECK(predict_scores(back, ds.x) == predict_scores(m, ds.x));
    CHECK(classifier_to_json(back) == text);
  }
  CHECK_THROWS_AS(classifier_from_json("{\"format\": \"other\"}"), FormatError);
  CHECK_THROWS_AS(classifier_from_json("not json"), FormatError);
}
