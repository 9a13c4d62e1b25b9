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

// Acceptance suite: one PASS/FAIL line per primary criterion. Exits non-zero
// when any criterion fails. argv[1], when given, is the CLI executable used
// for the end-to-end check; otherwise the CLI runs in-process.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "gridtarget/classify.hpp"
#include "gridtarget/cli.hpp"
#include "gridtarget/evalmatch.hpp"
#include "gridtarget/image.hpp"
#include "gridtarget/lattice.hpp"
#include "gridtarget/segment.hpp"
#include "gridtarget/squares.hpp"
#include "gridtarget/synth.hpp"
#include "test_support.hpp"

using namespace gridtarget;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS  " : "FAIL  ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- square pipeline -------------------------------------------------------

void square_pipeline() {
  const double angles[] = {0.0, 17.0, 44.0};
  std::size_t planted = 0, found = 0;
  double worst_angle = 0.0, worst_time = 0.0;
  for (int i = 0; i < 50; ++i) {
    LowMagConfig cfg;
    cfg.angle = angles[i % 3];
    cfg.broken_fraction = 0.1;
    const LowMagTruth t = gen_lowmag(cfg, 1000 + i);
    const auto t0 = std::chrono::steady_clock::now();
    const SquareDetection det = detect_squares(t.image);
    worst_time = std::max(worst_time, seconds_since(t0));
    double gap = std::fmod(std::abs(det.solution.theta - cfg.angle), 90.0);
    worst_angle = std::max(worst_angle, std::min(gap, 90.0 - gap));
    for (const auto& s : t.squares) {
      ++planted;
      for (const auto& r : det.solution.rects) {
        if (distance(r.center, s.center) <= 5.0) {
          ++found;
          break;
        }
      }
    }
  }
  const double recall = static_cast<double>(found) / planted;
  report(recall >= 0.98 && worst_angle < 0.5 && worst_time < 2.0, "square pipeline",
         "recall " + fmt(recall) + " (" + std::to_string(found) + "/" + std::to_string(planted) +
             ", center <= 5 px) over 50 images; worst angle error " + fmt(worst_angle) +
             " deg for theta in {0, 17, 44}; slowest 1024^2 image " + fmt(worst_time, 3) + " s");
}

// --- EM oracle -------------------------------------------------------------

void em_oracle() {
  std::mt19937_64 rng(2024);
  std::bernoulli_distribution pick_bg(0.6);
  std::poisson_distribution<int> bg(5.0), fg(50.0);
  GrayImage img(100000, 1);
  for (auto& v : img.data) v = pick_bg(rng) ? bg(rng) : fg(rng);
  const PoissonMixture m = fit_poisson_mixture(img);
  bool monotone = true;
  for (std::size_t i = 1; i < m.log_likelihood_trace.size(); ++i) {
    monotone = monotone && m.log_likelihood_trace[i] >= m.log_likelihood_trace[i - 1];
  }
  const double e_bg = std::abs(m.rate_bg - 5.0) / 5.0, e_fg = std::abs(m.rate_fg - 50.0) / 50.0;
  const double e_w = std::max(std::abs(m.weight_bg - 0.6), std::abs(m.weight_fg - 0.4));
  report(e_bg < 0.05 && e_fg < 0.05 && e_w < 0.03 && monotone, "EM oracle",
         "rates (" + fmt(m.rate_bg) + ", " + fmt(m.rate_fg) + "), weights (" + fmt(m.weight_bg) + ", " +
             fmt(m.weight_fg) + "), " + std::to_string(m.iterations) + " iterations, log-likelihood " +
             (monotone ? "monotone" : "NOT monotone"));
}

// --- lattice fitting -------------------------------------------------------

void lattice_fitting() {
  double worst_spacing = 0.0;
  std::size_t holes = 0, recovered = 0;
  std::vector<std::pair<std::string, MatchReport>> plain, thresholded;
  for (int i = 0; i < 100; ++i) {
    MedMagConfig cfg;
    cfg.delete_frac = 0.2;
    cfg.spurious_blobs = 5;
    const MedMagTruth t = gen_medmag(cfg, 5000 + i);
    const LatticeFit fit = fit_lattice(t.ideal_map);
    worst_spacing = std::max(worst_spacing, std::abs(fit.lattice.spacing - t.spacing) / t.spacing);
    for (const auto& h : t.holes) {
      ++holes;
      for (const auto& p : fit.lattice.points) {
        if (distance(p, h.center) <= 2.0) {
          ++recovered;
          break;
        }
      }
    }
    const auto sels = medmag_selections(t, "");
    const std::string session = "session" + std::to_string(i / 10);
    plain.emplace_back(session, match(crop_regions(lattice_crops(fit.lattice, nullptr, t.ideal_map)), sels));
    thresholded.emplace_back(session,
                             match(crop_regions(lattice_crops(fit.lattice, nullptr, t.ideal_map, 60.0, 0.5)), sels));
  }
  const double recall = static_cast<double>(recovered) / holes;
  const SessionSummary a = aggregate_sessions(plain), b = aggregate_sessions(thresholded);
  report(worst_spacing < 0.02 && recall >= 0.99, "lattice fitting",
         "100 maps (20% deleted, 5 spurious): worst spacing error " + fmt(100 * worst_spacing, 3) +
             "%, lattice-point recall of planted holes " + fmt(recall) + " (" + std::to_string(recovered) + "/" +
             std::to_string(holes) + ", within 2 px)");
  report(b.precision > a.precision && b.recall < a.recall, "lattice prob_sum threshold direction",
         "precision " + fmt(a.precision, 3) + " -> " + fmt(b.precision, 3) + ", recall " + fmt(a.recall, 3) +
             " -> " + fmt(b.recall, 3) + " with prob_sum > 0.5");
}

// --- fit vs brute force ----------------------------------------------------

void lattice_brute_force() {
  int maps = 0, equal = 0;
  double worst = 0.0;
  std::string misses;
  for (int i = 0; i < 100; ++i) {
    MedMagConfig cfg;
    cfg.width = cfg.height = 160;
    cfg.spacing = 32.0;
    const MedMagTruth t = gen_medmag(cfg, 100 + i);
    const LatticeFitParams p;
    const auto cents = extract_centroids(t.ideal_map, p.threshold, p.min_region);
    if (cents.size() < 2 || cents.size() > 30) continue;
    ++maps;
    const LatticeFit fit = fit_lattice(t.ideal_map, p);
    const auto brute = testing::brute_force_lattice(t.ideal_map, cents, p);
    const double rel = std::abs(fit.cost - brute.cost) / std::max(1.0, brute.cost);
    worst = std::max(worst, rel);
    if (rel <= 1e-12) {
      ++equal;
    } else {
      misses += " seed " + std::to_string(100 + i) + " (d " + fmt(fit.lattice.spacing, 1) + " vs " +
                fmt(brute.spacing, 1) + ")";
    }
  }
  report(maps > 0 && equal == maps, "fit_lattice equals all-pairs brute force",
         std::to_string(equal) + "/" + std::to_string(maps) +
             " maps with <= 30 centroids (spacing 32, 20% deleted, 5 spurious); worst relative cost gap " +
             fmt(worst, 6) + (misses.empty() ? "" : "; global optimum outside K=6 candidates:" + misses));
}

// --- matching --------------------------------------------------------------

void matching_metrics() {
  const std::vector<Region> regions{Region::square({10, 10}, 4), Region::square({20, 10}, 4),
                                    Region::square({30, 10}, 4), Region::square({40, 10}, 4)};
  const std::vector<Selection> sels{{10, 10, "i", "s"}, {19, 9, "i", "s"}, {21, 11, "i", "s"}};
  const MatchReport h = match(regions, sels);
  const bool hand = h.tp == 1 && h.fp == 3 && h.fn == 2 && h.precision == 0.25 &&
                    std::abs(h.recall - 1.0 / 3.0) < 1e-15;

  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> nreg(0, 15), nsel(0, 25), cell(0, 6), kind(0, 1);
  std::uniform_real_distribution<double> coord(-5.0, 75.0);
  int ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Region> rs;
    std::set<std::pair<int, int>> used;
    const int n = nreg(rng);
    while (static_cast<int>(rs.size()) < n) {
      const int cx = cell(rng), cy = cell(rng);
      if (!used.insert({cx, cy}).second) continue;
      const Point2d c{cx * 10.0 + 5.0, cy * 10.0 + 5.0};
      rs.push_back(kind(rng) ? Region::square(c, 9.0) : Region::circle(c, 4.5));
    }
    std::vector<Selection> ss;
    const int m = nsel(rng);
    for (int k = 0; k < m; ++k) ss.push_back({coord(rng), coord(rng), "i", "s"});
    const MatchReport r = match(rs, ss);
    ok += (r.tp + r.fn == ss.size() && r.tp + r.fp == rs.size());
  }
  report(hand && ok == 1000, "matching metrics",
         "hand fixture tp " + std::to_string(h.tp) + ", fp " + std::to_string(h.fp) + ", fn " + std::to_string(h.fn) +
             ", P " + fmt(h.precision, 3) + ", R " + fmt(h.recall, 3) + "; identities hold on " + std::to_string(ok) +
             "/1000 random disjoint fixtures");
}

// --- ranking metrics -------------------------------------------------------

void ranking_metrics() {
  const Labels y4{0, 0, 1, 1};
  const double auc = roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, y4);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u;
    std::vector<double> s(1000);
    Labels y(1000);
    double pos = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
      s[i] = u(rng);
      y[i] = u(rng) < 0.25;
      pos += y[i];
    }
    worst = std::max(worst, std::abs(average_precision(s, y) - pos / 1000.0));
  }
  report(auc == 0.75 && worst <= 0.05, "ranking metrics",
         "roc_auc example " + fmt(auc, 17) + "; random-score AP within " + fmt(worst) +
             " of the base rate (n = 1000, 10 seeds)");
}

// --- permutation importance ------------------------------------------------

void importance_ranking() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<FeatureVector> feats;
    Labels labels;
    for (int img = 0; img < 3; ++img) {
      LowMagConfig cfg;
      cfg.width = cfg.height = 768;
      cfg.size_jitter = 0.15;
      cfg.angle = std::fmod(13.0 * (seed + 1) + 29.0 * img, 90.0);
      const LowMagTruth t = gen_lowmag(cfg, 100 * seed + img);
      const SquareDetection det = detect_squares(t.image);
      for (const auto& r : det.solution.rects) {
        for (const auto& s : t.squares) {
          if (distance(r.center, s.center) <= 5.0) {
            feats.push_back(extract_features(crop_square(t.image, r)));
            labels.push_back(s.selected);
            break;
          }
        }
      }
    }
    const Matrix x = Matrix::from_features(feats);
    ForestOptions o;
    o.seed = seed;
    const ForestModel model = train_forest(x, labels, o);
    const Metric auc = [](std::span<const double> s, const Labels& y) { return roc_auc(s, y); };
    const auto imp = permutation_importance(model, x, labels, auc, 10, seed);
    const auto top = static_cast<std::size_t>(std::max_element(imp.begin(), imp.end()) - imp.begin());
    wins += top == 6;
    if (seed == 0) detail = "seed 0 importances: area " + fmt(imp[6]) + ", next " +
                            fmt(*std::max_element(imp.begin(), imp.begin() + 6));
  }
  report(wins == 10, "permutation importance ranks area first",
         std::to_string(wins) + "/10 seeds; " + detail);
}

// --- formats and CLI determinism -------------------------------------------

bool round_trips(std::string& detail) {
  testing::TempDir dir("acc_fmt");
  bool ok = true;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GrayImage f = testing::random_image(31 + seed, 17 + 2 * seed, seed, 0.0, 5000.0);
    for (auto& v : f.data) v = static_cast<float>(v);
    GrayImage i16 = f, u8 = f, u16 = f;
    for (auto& v : i16.data) v = std::floor(std::fmod(v, 32767.0));
    for (auto& v : u8.data) v = std::floor(std::fmod(v, 256.0));
    for (auto& v : u16.data) v = std::floor(v * 13.0);
    const std::pair<MrcMode, const GrayImage*> mrc[] = {
        {MrcMode::kFloat32, &f}, {MrcMode::kInt16, &i16}, {MrcMode::kUint16, &u16}, {MrcMode::kInt8, &u8}};
    for (const auto& [mode, img] : mrc) {
      if (mode == MrcMode::kInt8) {
        GrayImage small = *img;
        for (auto& v : small.data) v = std::fmod(v, 128.0);
        save_mrc(small, dir.path() / "a.mrc", mode);
        const auto bytes = read_file(dir.path() / "a.mrc");
        ok = ok && load_image(dir.path() / "a.mrc").data == small.data && encode_mrc(decode_image(bytes), mode) == bytes;
      } else {
        save_mrc(*img, dir.path() / "a.mrc", mode);
        const auto bytes = read_file(dir.path() / "a.mrc");
        ok = ok && load_image(dir.path() / "a.mrc").data == img->data && encode_mrc(decode_image(bytes), mode) == bytes;
      }
      ++checked;
    }
    for (const GrayImage* img : {&u8, &u16}) {
      save_pgm(*img, dir.path() / "a.pgm");
      const auto bytes = read_file(dir.path() / "a.pgm");
      ok = ok && load_image(dir.path() / "a.pgm").data == img->data && encode_pgm(decode_image(bytes)) == bytes;
      ++checked;
    }
    ProbabilityMap m = testing::random_map(23 + seed, 11 + seed, 50 + seed);
    for (auto& v : m.data) v = static_cast<float>(v);
    save_pmap(m, dir.path() / "a.pmap");
    const auto bytes = read_file(dir.path() / "a.pmap");
    ok = ok && load_pmap(dir.path() / "a.pmap").data == m.data && encode_pmap(decode_pmap(bytes)) == bytes;
    ++checked;
  }
  detail = std::to_string(checked) + " MRC/PGM/PMAP round-trips bit-exact";
  return ok;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the CLI either as a subprocess or in-process; stdout is captured.
int run_tool(const std::string& exe, const std::vector<std::string>& args, const fs::path& stdout_file) {
  if (exe.empty()) {
    std::ofstream out(stdout_file);
    std::ostringstream err;
    return run_cli(args, out, err);
  }
  std::string cmd = "\"" + exe + "\"";
  for (const auto& a : args) cmd += " \"" + a + "\"";
  cmd += " > \"" + stdout_file.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

void formats_and_cli(const std::string& exe) {
  std::string fmt_detail;
  const bool formats_ok = round_trips(fmt_detail);

  testing::TempDir dir("acc_cli");
  std::vector<std::string> transcripts;
  double recall = -1.0;
  bool runs_ok = true;
  for (const char* tag : {"run1", "run2"}) {
    const fs::path root = dir.path() / tag;
    const std::string data = (root / "data").string(), out = (root / "squares").string();
    runs_ok = runs_ok && run_tool(exe, {"synth", "--out", data, "--sessions", "2", "--images", "3", "--seed", "11"},
                                  root.string() + ".synth.txt") == 0;
    runs_ok = runs_ok && run_tool(exe, {"squares", data, "--out", out}, root.string() + ".squares.txt") == 0;
    runs_ok = runs_ok && run_tool(exe, {"eval", "--regions", out, "--selections", data + "/selections.csv", "--json",
                                        (root / "eval.json").string()},
                                  root.string() + ".eval.txt") == 0;
    std::string all = read_text(root.string() + ".eval.txt") + read_text(root / "eval.json");
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".json" || ext == ".mrc" || ext == ".csv")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) all += fs::relative(f, root).string() + "\n" + read_text(f);
    transcripts.push_back(all);
    std::smatch m;
    const std::string ev = read_text(root.string() + ".eval.txt");
    if (std::regex_search(ev, m, std::regex("R ([0-9.]+)"))) recall = std::stod(m[1]);
  }
  const bool same = transcripts.size() == 2 && transcripts[0] == transcripts[1] && !transcripts[0].empty();
  report(formats_ok && runs_ok && same, "formats and CLI determinism",
         fmt_detail + "; synth -> squares -> eval via " + (exe.empty() ? std::string("in-process CLI") : exe) +
             (same ? " byte-identical" : " DIFFERS") + " across two runs (recall " + fmt(recall, 3) + ")");
}

}  // namespace

int main(int argc, char** argv) {
  const std::string exe = argc > 1 ? argv[1] : "";
  const auto t0 = std::chrono::steady_clock::now();
  square_pipeline();
  em_oracle();
  lattice_fitting();
  lattice_brute_force();
  matching_metrics();
  ranking_metrics();
  importance_ranking();
  formats_and_cli(exe);
  std::cout << (failures == 0 ? "ALL PRIMARY CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAILED")
            << " (" << fmt(seconds_since(t0), 1) << " s)" << std::endl;
  return failures == 0 ? 0 : 1;
}
