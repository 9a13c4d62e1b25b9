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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <sstream>

#include "gridtarget/classify.hpp"
#include "gridtarget/cli.hpp"
#include "gridtarget/error.hpp"
#include "gridtarget/evalmatch.hpp"
#include "gridtarget/image.hpp"
#include "gridtarget/lattice.hpp"
#include "gridtarget/segment.hpp"
#include "gridtarget/squares.hpp"
#include "gridtarget/synth.hpp"

namespace py = pybind11;
using namespace gridtarget;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(int width, int height, const std::vector<double>& data) {
  Array out({height, width});
  std::memcpy(out.mutable_data(), data.data(), data.size() * sizeof(double));
  return out;
}

std::vector<double> from_array(const Array& a, int& width, int& height) {
  if (a.ndim() != 2) throw ArgumentError("expected a 2-D array");
  height = static_cast<int>(a.shape(0));
  width = static_cast<int>(a.shape(1));
  return std::vector<double>(a.data(), a.data() + a.size());
}

GrayImage gray_from(const Array& a, const std::string& id = {}) {
  GrayImage img;
  img.data = from_array(a, img.width, img.height);
  img.id = id;
  return img;
}

ProbabilityMap map_from(const Array& a) {
  ProbabilityMap m;
  m.data = from_array(a, m.width, m.height);
  m.validate();
  return m;
}

Matrix matrix_from(const Array& a) {
  if (a.ndim() != 2) throw ArgumentError("expected a 2-D feature matrix");
  Matrix m;
  m.rows = static_cast<std::size_t>(a.shape(0));
  m.cols = static_cast<std::size_t>(a.shape(1));
  m.values.assign(a.data(), a.data() + a.size());
  return m;
}

Labels labels_from(const std::vector<int>& y) {
  Labels out;
  for (int v : y) {
    if (v != 0 && v != 1) throw ArgumentError("labels must be 0 or 1");
    out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

py::dict rect_dict(const RotatedRect& r) {
  py::dict d;
  d["cx"] = r.center.x;
  d["cy"] = r.center.y;
  d["width"] = r.width;
  d["height"] = r.height;
  d["theta"] = r.theta;
  return d;
}

py::dict mixture_dict(const PoissonMixture& m) {
  py::dict d;
  d["weight_bg"] = m.weight_bg;
  d["weight_fg"] = m.weight_fg;
  d["rate_bg"] = m.rate_bg;
  d["rate_fg"] = m.rate_fg;
  d["log_likelihood"] = m.log_likelihood;
  d["iterations"] = m.iterations;
  d["degenerate"] = m.degenerate;
  d["log_likelihood_trace"] = m.log_likelihood_trace;
  return d;
}

std::vector<Region> regions_from(const std::vector<py::dict>& items) {
  std::vector<Region> out;
  for (const auto& d : items) {
    const auto shape = d["shape"].cast<std::string>();
    const Point2d c{d["cx"].cast<double>(), d["cy"].cast<double>()};
    if (shape == "square") {
      out.push_back(Region::square(c, d["side"].cast<double>()));
    } else if (shape == "circle") {
      out.push_back(Region::circle(c, d["radius"].cast<double>()));
    } else if (shape == "rect") {
      out.push_back(Region::rotated({c, d["width"].cast<double>(), d["height"].cast<double>(),
                                     d["theta"].cast<double>()}));
    } else {
      throw ArgumentError("unknown region shape '" + shape + "'");
    }
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Grid-square and hole targeting for cryo-EM screening images";

  auto base = py::register_exception<Error>(m, "GridTargetError", PyExc_RuntimeError);
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<CorruptionError>(m, "CorruptionError", base.ptr());
  py::register_exception<DegenerateDataError>(m, "DegenerateDataError", base.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", base.ptr());
  py::register_exception<MetricError>(m, "MetricError", base.ptr());
  py::register_exception<FitError>(m, "FitError", base.ptr());
  py::register_exception<GeometryError>(m, "GeometryError", base.ptr());

  m.def(
      "load_image",
      [](const std::filesystem::path& path) {
        const GrayImage img = load_image(path);
        return py::make_tuple(to_array(img.width, img.height, img.data), img.meta.pixel_size);
      },
      py::arg("path"), "Load an MRC/PGM/PNG image; returns (array, pixel_size).");
  m.def(
      "save_image",
      [](const Array& a, const std::filesystem::path& path) { save_image(gray_from(a), path); },
      py::arg("image"), py::arg("path"), "Save by extension (.mrc, .pgm, .png).");
  m.def(
      "load_pmap",
      [](const std::filesystem::path& path) {
        const ProbabilityMap map = load_pmap(path);
        return to_array(map.width, map.height, map.data);
      },
      py::arg("path"));
  m.def(
      "save_pmap", [](const Array& a, const std::filesystem::path& path) { save_pmap(map_from(a), path); },
      py::arg("map"), py::arg("path"));

  m.def(
      "fit_poisson_mixture",
      [](const Array& a, double tol, int max_iters) {
        EmOptions o;
        o.tol = tol;
        o.max_iters = max_iters;
        return mixture_dict(fit_poisson_mixture(gray_from(a), o));
      },
      py::arg("image"), py::arg("tol") = 1e-6, py::arg("max_iters") = 100);

  m.def(
      "detect_squares",
      [](const Array& a, int connectivity) {
        SquareDetectionOptions o;
        o.connectivity = connectivity == 8 ? Connectivity::kEight : Connectivity::kFour;
        const SquareDetection det = detect_squares(gray_from(a), o);
        py::list rects;
        for (const auto& r : det.solution.rects) rects.append(rect_dict(r));
        py::dict d;
        d["theta"] = det.solution.theta;
        d["total_area"] = det.solution.total_area;
        d["rects"] = rects;
        d["mixture"] = mixture_dict(det.mixture);
        return d;
      },
      py::arg("image"), py::arg("connectivity") = 4);

  m.def(
      "square_features",
      [](const Array& a, const std::vector<py::dict>& rects) {
        const GrayImage img = gray_from(a);
        Array out({static_cast<py::ssize_t>(rects.size()), static_cast<py::ssize_t>(kFeatureCount)});
        double* dst = out.mutable_data();
        for (const auto& d : rects) {
          const RotatedRect r{{d["cx"].cast<double>(), d["cy"].cast<double>()}, d["width"].cast<double>(),
                              d["height"].cast<double>(), d["theta"].cast<double>()};
          for (double v : extract_features(crop_square(img, r)).values()) *dst++ = v;
        }
        return out;
      },
      py::arg("image"), py::arg("rects"), "Feature matrix (one row per rect).");
  m.attr("FEATURE_NAMES") = std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end());

  m.def(
      "train_classifier",
      [](const Array& x, const std::vector<int>& y, const std::string& kind, int trees, std::uint64_t seed) {
        const Matrix mx = matrix_from(x);
        const Labels ly = labels_from(y);
        Classifier c;
        if (kind == "logreg") {
          c = train_logreg(mx, ly);
        } else if (kind == "forest") {
          ForestOptions o;
          o.tree_count = trees;
          o.seed = seed;
          c = train_forest(mx, ly, o);
        } else {
          throw ArgumentError("kind must be 'logreg' or 'forest'");
        }
        return classifier_to_json(c);
      },
      py::arg("x"), py::arg("y"), py::arg("kind") = "forest", py::arg("trees") = 100, py::arg("seed") = 0,
      "Train a classifier; returns the model as JSON text.");
  m.def(
      "predict_scores",
      [](const std::string& model_json, const Array& x) {
        return predict_scores(classifier_from_json(model_json), matrix_from(x));
      },
      py::arg("model_json"), py::arg("x"));
  m.def(
      "roc_auc", [](const std::vector<double>& s, const std::vector<int>& y) { return roc_auc(s, labels_from(y)); },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "average_precision",
      [](const std::vector<double>& s, const std::vector<int>& y) { return average_precision(s, labels_from(y)); },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "fit_lattice",
      [](const Array& pmap, int k, double w_fp, double w_fn, double threshold, double margin,
         std::optional<double> prob_threshold) {
        const ProbabilityMap map = map_from(pmap);
        LatticeFitParams p;
        p.k = static_cast<std::size_t>(k);
        p.weights = {w_fp, w_fn};
        p.threshold = threshold;
        const LatticeFit fit = fit_lattice(map, p);
        py::list points;
        for (const auto& q : fit.lattice.points) points.append(py::make_tuple(q.x, q.y));
        py::list crops;
        if (fit.lattice.spacing > margin) {
          for (const auto& c : lattice_crops(fit.lattice, nullptr, map, margin, prob_threshold)) {
            py::dict d;
            d["shape"] = "square";
            d["cx"] = c.center.x;
            d["cy"] = c.center.y;
            d["side"] = c.side;
            d["prob_sum"] = c.prob_sum;
            crops.append(d);
          }
        }
        py::dict d;
        d["anchor_a"] = py::make_tuple(fit.lattice.anchor_a.x, fit.lattice.anchor_a.y);
        d["anchor_b"] = py::make_tuple(fit.lattice.anchor_b.x, fit.lattice.anchor_b.y);
        d["spacing"] = fit.lattice.spacing;
        d["cost"] = fit.cost;
        d["points"] = points;
        d["crops"] = crops;
        return d;
      },
      py::arg("pmap"), py::arg("k") = 6, py::arg("w_fp") = 1.0, py::arg("w_fn") = 2.0, py::arg("threshold") = 0.5,
      py::arg("margin") = 60.0, py::arg("prob_threshold") = py::none());

  m.def(
      "match",
      [](const std::vector<py::dict>& regions, const std::vector<std::pair<double, double>>& points) {
        std::vector<Selection> sels;
        for (const auto& [x, y] : points) sels.push_back({x, y, "", ""});
        const MatchReport r = match(regions_from(regions), sels);
        py::dict d;
        d["tp"] = r.tp;
        d["fp"] = r.fp;
        d["fn"] = r.fn;
        d["precision"] = r.precision;
        d["recall"] = r.recall;
        d["f1"] = r.f1;
        return d;
      },
      py::arg("regions"), py::arg("selections"), "Match region dicts against (x, y) selections.");

  m.def(
      "gen_lowmag",
      [](int width, int height, double angle, std::uint64_t seed) {
        LowMagConfig c;
        c.width = width;
        c.height = height;
        c.angle = angle;
        const LowMagTruth t = gen_lowmag(c, seed);
        py::list centers;
        for (const auto& s : t.squares) centers.append(py::make_tuple(s.center.x, s.center.y));
        return py::make_tuple(to_array(t.image.width, t.image.height, t.image.data), centers);
      },
      py::arg("width") = 1024, py::arg("height") = 1024, py::arg("angle") = 0.0, py::arg("seed") = 0,
      "Synthetic low-mag image; returns (image, square centres).");
  m.def(
      "gen_medmag",
      [](int width, int height, double spacing, std::uint64_t seed) {
        MedMagConfig c;
        c.width = width;
        c.height = height;
        c.spacing = spacing;
        const MedMagTruth t = gen_medmag(c, seed);
        py::list holes;
        for (const auto& h : t.holes) holes.append(py::make_tuple(h.center.x, h.center.y, h.deleted));
        return py::make_tuple(to_array(t.image.width, t.image.height, t.image.data),
                              to_array(t.ideal_map.width, t.ideal_map.height, t.ideal_map.data), holes);
      },
      py::arg("width") = 768, py::arg("height") = 768, py::arg("spacing") = 100.0, py::arg("seed") = 0,
      "Synthetic med-mag image; returns (image, ideal probability map, holes as (x, y, deleted)).");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out;
        std::ostringstream err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a command-line invocation; returns (exit_code, stdout, stderr).");
}
