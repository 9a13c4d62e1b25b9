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

#include "gridtarget/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include "json.hpp"

#include "gridtarget/classify.hpp"
#include "gridtarget/config.hpp"
#include "gridtarget/error.hpp"
#include "gridtarget/evalmatch.hpp"
#include "gridtarget/lattice.hpp"
#include "gridtarget/overlay.hpp"
#include "gridtarget/parallel.hpp"
#include "gridtarget/squares.hpp"
#include "gridtarget/synth.hpp"

namespace gridtarget {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;

// ---------------------------------------------------------------------------
// Shared option plumbing

struct ConfigSources {
  std::string config_file;
  std::vector<std::string> sets;  // key=value
  std::vector<std::pair<std::string, std::string>> flags;

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (!config_file.empty()) apply_config_file(cfg, config_file);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ArgumentError("--set expects key=value, got '" + kv + "'");
      apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [k, v] : flags) apply_setting(cfg, k, v);
    cfg.validate();
    return cfg;
  }
};

void add_config_options(CLI::App* sub, ConfigSources& src, const std::vector<std::pair<std::string, std::string>>& keyed) {
  sub->add_option("--config", src.config_file, "key=value configuration file");
  sub->add_option("--set", src.sets, "override a configuration key (key=value), repeatable");
  for (const auto& [flag, key] : keyed) {
    sub->add_option_function<std::string>(
        flag, [&src, key = key](const std::string& v) { src.flags.emplace_back(key, v); },
        "sets config key '" + key + "'");
  }
}

std::vector<fs::path> collect_inputs(const std::vector<std::string>& inputs, const std::set<std::string>& exts) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && exts.count(e.path().extension().string())) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p)) {
      out.push_back(p);
    } else {
      throw ArgumentError("input not found: " + in);
    }
  }
  if (out.empty()) throw ArgumentError("no input files");
  return out;
}

std::string session_of(const fs::path& p) {
  const auto parent = p.parent_path().filename().string();
  return parent.empty() ? "default" : parent;
}

json point_json(Point2d p) { return json::array({p.x, p.y}); }

json rect_json(const RotatedRect& r) {
  return {{"cx", r.center.x}, {"cy", r.center.y}, {"width", r.width}, {"height", r.height},
          {"theta", r.theta}, {"area", r.area()}};
}

json region_json(const Region& r) {
  switch (r.shape) {
    case RegionShape::kSquare:
      return {{"shape", "square"}, {"cx", r.center.x}, {"cy", r.center.y}, {"side", r.extent}};
    case RegionShape::kCircle:
      return {{"shape", "circle"}, {"cx", r.center.x}, {"cy", r.center.y}, {"radius", r.extent}};
    case RegionShape::kRotatedRect:
      return {{"shape", "rect"},          {"cx", r.rect.center.x}, {"cy", r.rect.center.y},
              {"width", r.rect.width},    {"height", r.rect.height}, {"theta", r.rect.theta}};
  }
  return {};
}

Region region_from_json(const json& j) {
  const auto shape = j.at("shape").get<std::string>();
  const Point2d c{j.at("cx").get<double>(), j.at("cy").get<double>()};
  if (shape == "square") return Region::square(c, j.at("side").get<double>());
  if (shape == "circle") return Region::circle(c, j.at("radius").get<double>());
  if (shape == "rect") {
    RotatedRect r{c, j.at("width").get<double>(), j.at("height").get<double>(), j.at("theta").get<double>()};
    return Region::rotated(r);
  }
  throw FormatError("unknown region shape '" + shape + "'");
}

json regions_json(const std::vector<Region>& regions) {
  json arr = json::array();
  for (const auto& r : regions) arr.push_back(region_json(r));
  return arr;
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(1) + "\n"); }

std::string fixed3(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string kind = "lowmag";
  std::string out;
  int sessions = 2;
  int images = 3;
  std::uint64_t seed = 0;
  LowMagConfig low;
  MedMagConfig med;
  std::vector<double> angles{0.0, 17.0, 44.0};
};

int run_synth(const SynthArgs& a, std::ostream& out) {
  if (a.kind != "lowmag" && a.kind != "medmag") throw ArgumentError("--kind must be lowmag or medmag");
  if (a.sessions < 1 || a.images < 1) throw ArgumentError("--sessions and --images must be >= 1");
  if (a.kind == "lowmag" && a.angles.empty()) throw ArgumentError("--angles needs at least one value");
  const fs::path root(a.out);
  std::vector<Selection> selections;
  json manifest;
  manifest["format"] = "gridtarget-dataset";
  manifest["version"] = 1;
  manifest["kind"] = a.kind;
  manifest["images"] = json::array();
  std::size_t index = 0;
  for (int s = 0; s < a.sessions; ++s) {
    std::ostringstream sid;
    sid << "session" << std::setw(2) << std::setfill('0') << s;
    for (int i = 0; i < a.images; ++i, ++index) {
      const std::uint64_t seed = a.seed * 1000003ULL + index;
      std::ostringstream iid;
      iid << sid.str() << "_" << a.kind << std::setw(3) << std::setfill('0') << i;
      if (a.kind == "lowmag") {
        LowMagConfig cfg = a.low;
        cfg.angle = a.angles[index % a.angles.size()];
        LowMagTruth t = gen_lowmag(cfg, seed);
        t.image.id = iid.str();
        write_lowmag_sample(root, sid.str(), t);
        const auto sel = lowmag_selections(t, sid.str());
        selections.insert(selections.end(), sel.begin(), sel.end());
      } else {
        MedMagTruth t = gen_medmag(a.med, seed);
        t.image.id = iid.str();
        write_medmag_sample(root, sid.str(), t);
        const auto sel = medmag_selections(t, sid.str());
        selections.insert(selections.end(), sel.begin(), sel.end());
      }
      manifest["images"].push_back({{"image_id", iid.str()}, {"session_id", sid.str()}, {"seed", seed}});
    }
  }
  write_file_atomic(root / "selections.csv", selections_to_csv(selections));
  write_json(root / "manifest.json", manifest);
  out << "wrote " << index << " " << a.kind << " images and " << selections.size() << " selections to "
      << root.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// squares / rank-squares

struct SquaresArgs {
  std::vector<std::string> inputs;
  std::string out;
  bool overlay = false;
  std::string features_csv;
  std::string labels_csv;
  std::string session;
};

struct SquareImageResult {
  std::string image_id;
  std::string session_id;
  std::vector<FeatureVector> features;
  std::vector<RotatedRect> rects;
};

void write_features_csv(const fs::path& path, const std::vector<SquareImageResult>& results,
                        const std::vector<Selection>* labels) {
  std::ostringstream csv;
  csv.precision(17);
  csv << "crop_id,image_id,session_id";
  for (auto name : kFeatureNames) csv << ',' << name;
  if (labels != nullptr) csv << ",label";
  csv << '\n';
  for (const auto& r : results) {
    for (std::size_t k = 0; k < r.features.size(); ++k) {
      csv << r.image_id << '_' << k << ',' << r.image_id << ',' << r.session_id;
      for (double v : r.features[k].values()) csv << ',' << v;
      if (labels != nullptr) {
        bool hit = false;
        for (const auto& s : *labels) {
          hit = hit || (s.image_id == r.image_id && r.rects[k].contains({s.x, s.y}));
        }
        csv << ',' << (hit ? 1 : 0);
      }
      csv << '\n';
    }
  }
  write_file_atomic(path, csv.str());
}

int run_squares(const SquaresArgs& a, const PipelineConfig& cfg, const Classifier* model, std::ostream& out) {
  const auto inputs = collect_inputs(a.inputs, {".mrc", ".pgm", ".png"});
  const fs::path out_dir(a.out);
  fs::create_directories(out_dir);
  std::vector<SquareImageResult> results(inputs.size());
  std::vector<std::string> lines(inputs.size());

  parallel_for(inputs.size(), cfg.jobs, [&](std::size_t i) {
    const GrayImage img = load_image(inputs[i]);
    const std::string session = a.session.empty() ? session_of(inputs[i]) : a.session;
    const SquareDetection det = detect_squares(img, cfg.square_options());
    auto& res = results[i];
    res.image_id = img.id;
    res.session_id = session;
    res.rects = det.solution.rects;
    for (const auto& r : det.solution.rects) res.features.push_back(extract_features(crop_square(img, r)));

    json j;
    j["version"] = 1;
    j["image_id"] = img.id;
    j["session_id"] = session;
    j["width"] = img.width;
    j["height"] = img.height;
    j["theta"] = det.solution.theta;
    j["total_area"] = det.solution.total_area;
    j["mixture"] = {{"weight_bg", det.mixture.weight_bg}, {"weight_fg", det.mixture.weight_fg},
                    {"rate_bg", det.mixture.rate_bg},     {"rate_fg", det.mixture.rate_fg},
                    {"log_likelihood", det.mixture.log_likelihood}, {"iterations", det.mixture.iterations}};
    std::vector<Region> regions;
    for (const auto& r : det.solution.rects) regions.push_back(Region::rotated(r));

    RgbImage overlay;
    if (a.overlay) overlay = RgbImage::from_gray(img);
    if (model == nullptr) {
      j["format"] = "gridtarget-squares";
      json rects = json::array();
      for (const auto& r : det.solution.rects) {
        rects.push_back(rect_json(r));
        if (a.overlay) overlay.rect(r, Rgb{255, 255, 0});
      }
      j["rects"] = std::move(rects);
      j["regions"] = regions_json(regions);
      write_json(out_dir / (img.id + ".squares.json"), j);
    } else {
      j["format"] = "gridtarget-ranked-squares";
      j["model_kind"] = std::holds_alternative<LinearModel>(*model) ? "logreg" : "forest";
      std::vector<double> scores;
      if (!res.features.empty()) scores = predict_scores(*model, Matrix::from_features(res.features));
      std::vector<std::size_t> order(scores.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return scores[x] > scores[y]; });
      json ranked = json::array();
      for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const std::size_t k = order[rank];
        json e = rect_json(det.solution.rects[k]);
        e["rank"] = rank + 1;
        e["score"] = scores[k];
        json f;
        const auto vals = res.features[k].values();
        for (std::size_t c = 0; c < kFeatureCount; ++c) f[std::string(kFeatureNames[c])] = vals[c];
        e["features"] = std::move(f);
        ranked.push_back(std::move(e));
        if (a.overlay) overlay.rect(det.solution.rects[k], score_color(scores[k]));
      }
      j["squares"] = std::move(ranked);
      j["regions"] = regions_json(regions);
      write_json(out_dir / (img.id + ".ranked.json"), j);
    }
    if (a.overlay) save_overlay(overlay, out_dir / (img.id + ".overlay.png"));
    std::ostringstream line;
    line << img.id << ": " << det.solution.rects.size() << " squares, theta " << fixed3(det.solution.theta) << "\n";
    lines[i] = line.str();
  });
  for (const auto& l : lines) out << l;

  if (!a.features_csv.empty()) {
    std::optional<std::vector<Selection>> labels;
    if (!a.labels_csv.empty()) labels = load_selections_csv(a.labels_csv);
    write_features_csv(a.features_csv, results, labels ? &*labels : nullptr);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fit-lattice

struct LatticeArgs {
  std::vector<std::string> inputs;
  std::string image;
  std::string out;
  bool overlay = false;
  bool write_crops = false;
  std::string region_source = "lattice";
  std::string session;
};

int run_fit_lattice(const LatticeArgs& a, const PipelineConfig& cfg, std::ostream& out) {
  if (a.region_source != "lattice" && a.region_source != "centroids") {
    throw ArgumentError("--regions must be lattice or centroids");
  }
  const auto inputs = collect_inputs(a.inputs, {".pmap"});
  if (!a.image.empty() && inputs.size() != 1) throw ArgumentError("--image applies to a single PMAP input");
  const fs::path out_dir(a.out);
  fs::create_directories(out_dir);
  std::vector<std::string> lines(inputs.size());
  // Lattice candidates already run in parallel; images go one at a time.
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const ProbabilityMap map = load_pmap(inputs[i]);
    const std::string image_id = inputs[i].stem().string();
    const std::string session = a.session.empty() ? session_of(inputs[i]) : a.session;
    std::optional<GrayImage> img;
    fs::path img_path = a.image.empty() ? fs::path(inputs[i]).replace_extension(".mrc") : fs::path(a.image);
    if (!a.image.empty() || fs::exists(img_path)) {
      img = load_image(img_path);
      if (img->width != map.width || img->height != map.height) {
        throw ArgumentError("image " + img_path.string() + " does not match the probability map shape");
      }
    }

    const LatticeFit fit = fit_lattice(map, cfg.lattice_params());
    const auto crops = lattice_crops(fit.lattice, img ? &*img : nullptr, map, cfg.crop_margin, cfg.prob_threshold);
    const auto regions = a.region_source == "lattice" ? crop_regions(crops)
                                                      : centroid_regions(fit.centroids, cfg.centroid_radius);

    json j;
    j["format"] = "gridtarget-lattice";
    j["version"] = 1;
    j["image_id"] = image_id;
    j["session_id"] = session;
    j["width"] = map.width;
    j["height"] = map.height;
    j["anchor_a"] = point_json(fit.lattice.anchor_a);
    j["anchor_b"] = point_json(fit.lattice.anchor_b);
    j["spacing"] = fit.lattice.spacing;
    j["cost"] = fit.cost;
    j["weights"] = {{"w_fp", cfg.w_fp}, {"w_fn", cfg.w_fn}};
    j["render_radius"] = cfg.render_radius.value_or(default_render_radius(fit.lattice.spacing));
    j["candidates"] = fit.candidates_evaluated;
    json cents = json::array();
    for (const auto& c : fit.centroids) cents.push_back({{"x", c.x}, {"y", c.y}, {"mass", c.mass}});
    j["centroids"] = std::move(cents);
    json pts = json::array();
    for (const auto& p : fit.lattice.points) pts.push_back(point_json(p));
    j["points"] = std::move(pts);
    json index = json::array();
    for (std::size_t k = 0; k < crops.size(); ++k) {
      json e = {{"image_id", image_id}, {"center", point_json(crops[k].center)}, {"side", crops[k].side},
                {"prob_sum", crops[k].prob_sum}};
      if (a.write_crops && img) {
        const std::string name = image_id + "_hole" + std::to_string(k) + ".mrc";
        save_mrc(crops[k].pixels, out_dir / (image_id + "_crops") / name);
        e["file"] = name;
      }
      index.push_back(std::move(e));
    }
    j["crops"] = index;
    j["regions"] = regions_json(regions);
    write_json(out_dir / (image_id + ".lattice.json"), j);
    if (a.write_crops && img) write_json(out_dir / (image_id + "_crops") / "index.json", index);

    if (a.overlay) {
      RgbImage ov = img ? RgbImage::from_gray(*img) : RgbImage::from_gray(GrayImage{map.width, map.height});
      if (!img) {
        for (std::size_t p = 0; p < map.data.size(); ++p) {
          const auto g = static_cast<std::uint8_t>(std::lround(255.0 * map.data[p]));
          ov.rgb[3 * p] = ov.rgb[3 * p + 1] = ov.rgb[3 * p + 2] = g;
        }
      }
      for (const auto& c : crops) ov.rect({c.center, c.side, c.side, 0.0}, Rgb{0, 255, 255});
      for (const auto& c : fit.centroids) ov.cross({c.x, c.y}, 3, Rgb{255, 0, 0});
      ov.circle(fit.lattice.anchor_a, 5.0, Rgb{0, 255, 255});
      ov.circle(fit.lattice.anchor_b, 5.0, Rgb{0, 255, 255});
      save_overlay(ov, out_dir / (image_id + ".overlay.png"));
    }
    std::ostringstream line;
    line << image_id << ": spacing " << fixed3(fit.lattice.spacing) << ", " << fit.lattice.points.size()
         << " lattice points, " << crops.size() << " crops\n";
    lines[i] = line.str();
  }
  for (const auto& l : lines) out << l;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::vector<std::string> regions;
  std::string selections;
  std::string json_out;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  const auto files = collect_inputs(a.regions, {".json"});
  std::map<std::string, std::vector<Region>> regions_by_image;
  std::map<std::string, std::string> session_by_image;
  for (const auto& f : files) {
    json j;
    try {
      std::ifstream in(f);
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError(f.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("regions") || !j.contains("image_id")) continue;
    try {
      const auto id = j.at("image_id").get<std::string>();
      auto& list = regions_by_image[id];
      for (const auto& r : j.at("regions")) list.push_back(region_from_json(r));
      if (j.contains("session_id")) session_by_image[id] = j.at("session_id").get<std::string>();
    } catch (const json::exception& e) {
      throw FormatError(f.string() + ": " + e.what());
    }
  }
  if (regions_by_image.empty()) throw ArgumentError("no region files among the inputs");

  const auto sels = load_selections_csv(a.selections);
  std::map<std::string, std::vector<Selection>> sels_by_image;
  for (const auto& s : sels) {
    sels_by_image[s.image_id].push_back(s);
    session_by_image[s.image_id] = s.session_id;
  }
  std::set<std::string> images;
  for (const auto& [id, _] : regions_by_image) images.insert(id);
  for (const auto& [id, _] : sels_by_image) images.insert(id);

  std::vector<std::pair<std::string, MatchReport>> reports;
  json per_image = json::array();
  for (const auto& id : images) {
    static const std::vector<Region> kNoRegions;
    static const std::vector<Selection> kNoSelections;
    const auto rit = regions_by_image.find(id);
    const auto sit = sels_by_image.find(id);
    const MatchReport r = match(rit == regions_by_image.end() ? kNoRegions : rit->second,
                                sit == sels_by_image.end() ? kNoSelections : sit->second);
    const auto session = session_by_image.count(id) ? session_by_image[id] : std::string("default");
    reports.emplace_back(session, r);
    per_image.push_back({{"image_id", id}, {"session_id", session}, {"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}});
  }
  const SessionSummary summary = aggregate_sessions(reports);

  out << std::left << std::setw(20) << "session" << std::right << std::setw(8) << "tp" << std::setw(8) << "fp"
      << std::setw(8) << "fn" << std::setw(11) << "Precision" << std::setw(9) << "Recall" << std::setw(8) << "F1"
      << "\n";
  json sessions = json::object();
  for (const auto& [sid, r] : summary.sessions) {
    out << std::left << std::setw(20) << sid << std::right << std::setw(8) << r.tp << std::setw(8) << r.fp
        << std::setw(8) << r.fn << std::setw(11) << fixed3(r.precision) << std::setw(9) << fixed3(r.recall)
        << std::setw(8) << fixed3(r.f1) << "\n";
    sessions[sid] = {{"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn},
                     {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
  }
  out << std::left << std::setw(44) << "mean" << std::right << std::setw(11) << fixed3(summary.precision)
      << std::setw(9) << fixed3(summary.recall) << std::setw(8) << fixed3(summary.f1) << "\n";
  out << "P " << fixed3(summary.precision) << ", R " << fixed3(summary.recall) << ", F1 " << fixed3(summary.f1)
      << "\n";

  if (!a.json_out.empty()) {
    json j;
    j["format"] = "gridtarget-eval";
    j["version"] = 1;
    j["sessions"] = std::move(sessions);
    j["mean"] = {{"precision", summary.precision}, {"recall", summary.recall}, {"f1", summary.f1}};
    j["images"] = std::move(per_image);
    write_json(a.json_out, j);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string features;
  std::string model = "forest";
  std::string out;
};

struct FeatureTable {
  Matrix x;
  Labels y;
};

FeatureTable read_feature_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("features CSV is empty");
  std::vector<std::string> header;
  {
    std::istringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) {
      while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
      header.push_back(f);
    }
  }
  std::array<int, kFeatureCount> cols{};
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    const auto it = std::find(header.begin(), header.end(), kFeatureNames[c]);
    if (it == header.end()) throw FormatError("features CSV lacks column '" + std::string(kFeatureNames[c]) + "'");
    cols[c] = static_cast<int>(it - header.begin());
  }
  const auto lit = std::find(header.begin(), header.end(), "label");
  if (lit == header.end()) throw FormatError("features CSV lacks a label column");
  const int label_col = static_cast<int>(lit - header.begin());

  FeatureTable t;
  t.x.cols = kFeatureCount;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() < header.size()) throw FormatError("features CSV line " + std::to_string(line_no) + ": too few fields");
    try {
      for (std::size_t c = 0; c < kFeatureCount; ++c) t.x.values.push_back(std::stod(fields[cols[c]]));
      const double label = std::stod(fields[label_col]);
      if (label != 0.0 && label != 1.0) throw std::invalid_argument("label");
      t.y.push_back(label == 1.0 ? 1 : 0);
    } catch (const std::exception&) {
      throw FormatError("features CSV line " + std::to_string(line_no) + ": bad value");
    }
    ++t.x.rows;
  }
  return t;
}

int run_train(const TrainArgs& a, const PipelineConfig& cfg, std::ostream& out) {
  const FeatureTable t = read_feature_csv(a.features);
  Classifier model;
  if (a.model == "logreg") {
    LogRegOptions opts;
    opts.epochs = cfg.logreg_epochs;
    opts.learning_rate = cfg.logreg_lr;
    model = train_logreg(t.x, t.y, opts);
  } else if (a.model == "forest") {
    ForestOptions opts;
    opts.tree_count = cfg.trees;
    opts.max_depth = cfg.max_depth;
    opts.seed = cfg.seed;
    opts.threads = cfg.jobs;
    model = train_forest(t.x, t.y, opts);
  } else {
    throw ArgumentError("--model must be logreg or forest");
  }
  write_file_atomic(a.out, classifier_to_json(model) + "\n");
  const auto scores = predict_scores(model, t.x);
  out << "trained " << a.model << " on " << t.x.rows << " samples";
  const auto pos = static_cast<std::size_t>(std::count(t.y.begin(), t.y.end(), 1));
  if (pos > 0 && pos < t.y.size()) {
    out << "; training ROC AUC " << fixed3(roc_auc(scores, t.y)) << ", AP " << fixed3(average_precision(scores, t.y));
  }
  out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"gridtarget: grid-square and hole targeting for cryo-EM screening images"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> square_keys = {
      {"--em-tol", "em_tol"}, {"--em-max-iters", "em_max_iters"}, {"--connectivity", "connectivity"},
      {"--min-component-size", "min_component_size"}, {"--jobs", "jobs"}};
  const std::vector<std::pair<std::string, std::string>> lattice_keys = {
      {"--knn", "knn"}, {"--w-fp", "w_fp"}, {"--w-fn", "w_fn"}, {"--centroid-threshold", "centroid_threshold"},
      {"--min-region", "min_region"}, {"--crop-margin", "crop_margin"}, {"--prob-threshold", "prob_threshold"},
      {"--render-radius", "render_radius"}, {"--centroid-radius", "centroid_radius"},
      {"--min-spacing", "min_spacing"}, {"--jobs", "jobs"}};
  const std::vector<std::pair<std::string, std::string>> train_keys = {
      {"--trees", "trees"}, {"--max-depth", "max_depth"}, {"--seed", "seed"},
      {"--epochs", "logreg_epochs"}, {"--lr", "logreg_lr"}, {"--jobs", "jobs"}};

  // synth
  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with ground truth");
  synth->add_option("--kind", synth_args.kind, "lowmag or medmag")->capture_default_str();
  synth->add_option("--out", synth_args.out, "output dataset directory")->required();
  synth->add_option("--sessions", synth_args.sessions)->capture_default_str();
  synth->add_option("--images", synth_args.images, "images per session")->capture_default_str();
  synth->add_option("--seed", synth_args.seed)->capture_default_str();
  synth->add_option("--width", synth_args.low.width, "image width (both kinds)");
  synth->add_option("--height", synth_args.low.height, "image height (both kinds)");
  synth->add_option("--angles", synth_args.angles, "low-mag grid angles, cycled over images");
  synth->add_option("--pitch", synth_args.low.grid_pitch)->capture_default_str();
  synth->add_option("--square-size", synth_args.low.square_size)->capture_default_str();
  synth->add_option("--broken-fraction", synth_args.low.broken_fraction)->capture_default_str();
  synth->add_option("--size-jitter", synth_args.low.size_jitter)->capture_default_str();
  synth->add_option("--spacing", synth_args.med.spacing)->capture_default_str();
  synth->add_option("--hole-radius", synth_args.med.hole_radius);
  synth->add_option("--delete-frac", synth_args.med.delete_frac)->capture_default_str();
  synth->add_option("--spurious", synth_args.med.spurious_blobs)->capture_default_str();
  synth->add_flag("--invert", synth_args.med.invert);
  synth->add_option("--contrast", synth_args.med.contrast)->capture_default_str();

  // squares
  SquaresArgs squares_args;
  ConfigSources squares_cfg;
  auto* squares = app.add_subcommand("squares", "localize grid squares in low-mag images");
  squares->add_option("inputs", squares_args.inputs, "images or directories")->required();
  squares->add_option("--out", squares_args.out, "output directory")->required();
  squares->add_flag("--overlay", squares_args.overlay, "write PNG overlays");
  squares->add_option("--features-csv", squares_args.features_csv, "write per-square features");
  squares->add_option("--labels", squares_args.labels_csv, "selections CSV used to label features");
  squares->add_option("--session", squares_args.session, "session id (default: parent directory name)");
  add_config_options(squares, squares_cfg, square_keys);

  // rank-squares
  SquaresArgs rank_args;
  ConfigSources rank_cfg;
  std::string model_path;
  auto* rank = app.add_subcommand("rank-squares", "localize and score squares with a trained model");
  rank->add_option("inputs", rank_args.inputs, "images or directories")->required();
  rank->add_option("--model", model_path, "model JSON from `train`")->required();
  rank->add_option("--out", rank_args.out, "output directory")->required();
  rank->add_flag("--overlay", rank_args.overlay, "write PNG overlays colored by score");
  rank->add_option("--session", rank_args.session);
  add_config_options(rank, rank_cfg, square_keys);

  // fit-lattice
  LatticeArgs lattice_args;
  ConfigSources lattice_cfg;
  auto* lattice = app.add_subcommand("fit-lattice", "fit a hole lattice to probability maps");
  lattice->add_option("inputs", lattice_args.inputs, "PMAP files or directories")->required();
  lattice->add_option("--image", lattice_args.image, "matching image (default: sibling .mrc)");
  lattice->add_option("--out", lattice_args.out, "output directory")->required();
  lattice->add_flag("--overlay", lattice_args.overlay);
  lattice->add_flag("--write-crops", lattice_args.write_crops, "write hole crops as MRC files");
  lattice->add_option("--regions", lattice_args.region_source, "lattice or centroids")->capture_default_str();
  lattice->add_option("--session", lattice_args.session);
  add_config_options(lattice, lattice_cfg, lattice_keys);

  // eval
  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "match predicted regions against selections");
  eval->add_option("--regions", eval_args.regions, "region JSON files or directories")->required();
  eval->add_option("--selections", eval_args.selections, "selections CSV")->required();
  eval->add_option("--json", eval_args.json_out, "write the report as JSON");

  // train
  TrainArgs train_args;
  ConfigSources train_cfg;
  auto* train = app.add_subcommand("train", "train a square classifier from a features CSV");
  train->add_option("--features", train_args.features, "features CSV with a label column")->required();
  train->add_option("--model", train_args.model, "logreg or forest")->capture_default_str();
  train->add_option("--out", train_args.out, "model JSON path")->required();
  add_config_options(train, train_cfg, train_keys);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (synth->parsed()) {
      synth_args.med.width = synth_args.low.width;
      synth_args.med.height = synth_args.low.height;
      if (synth->count("--width") == 0 && synth_args.kind == "medmag") synth_args.med.width = MedMagConfig{}.width;
      if (synth->count("--height") == 0 && synth_args.kind == "medmag") synth_args.med.height = MedMagConfig{}.height;
      return run_synth(synth_args, out);
    }
    if (squares->parsed()) return run_squares(squares_args, squares_cfg.resolve(), nullptr, out);
    if (rank->parsed()) {
      std::ifstream in(model_path);
      if (!in) throw ArgumentError("cannot open model " + model_path);
      std::stringstream text;
      text << in.rdbuf();
      const Classifier model = classifier_from_json(text.str());
      return run_squares(rank_args, rank_cfg.resolve(), &model, out);
    }
    if (lattice->parsed()) return run_fit_lattice(lattice_args, lattice_cfg.resolve(), out);
    if (eval->parsed()) return run_eval(eval_args, out);
    if (train->parsed()) return run_train(train_args, train_cfg.resolve(), out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  err << "error: no subcommand\n";
  return kExitInput;
}

}  // namespace gridtarget
