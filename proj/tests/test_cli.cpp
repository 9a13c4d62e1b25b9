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

#include <fstream>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "gridtarget/cli.hpp"
#include "gridtarget/image.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace gridtarget;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

double printed(const std::string& text, const std::string& key) {
  std::smatch m;
  if (!std::regex_search(text, m, std::regex(key + " ([0-9.]+)"))) return -1.0;
  return std::stod(m[1]);
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == 2);
  const Run r = cli({"no-such-command"});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
  CHECK(cli({"squares"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"eval", "--regions", "/nonexistent", "--selections", "/nonexistent.csv"}).code == 2);
}

TEST_CASE("eval on the hand fixture prints P 0.250, R 0.333") {
  testing::TempDir dir("clieval");
  json regions = {{"format", "gridtarget-lattice"}, {"image_id", "img1"}, {"session_id", "s"},
                  {"regions", json::array()}};
  for (double cx : {10.0, 20.0, 30.0, 40.0}) {
    regions["regions"].push_back({{"shape", "square"}, {"cx", cx}, {"cy", 10.0}, {"side", 4.0}});
  }
  write_file_atomic(dir.path() / "img1.lattice.json", regions.dump());
  write_file_atomic(dir.path() / "sel.csv", "image_id,session_id,x,y\nimg1,s,10,10\nimg1,s,19,9\nimg1,s,21,11\n");
  const Run r = cli({"eval", "--regions", (dir.path() / "img1.lattice.json").string(), "--selections",
                     (dir.path() / "sel.csv").string(), "--json", (dir.path() / "report.json").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("P 0.250, R 0.333") != std::string::npos);
  const json rep = load_json(dir.path() / "report.json");
  CHECK(rep.at("sessions").at("s").at("tp") == 1);
  CHECK(rep.at("sessions").at("s").at("fp") == 3);
  CHECK(rep.at("sessions").at("s").at("fn") == 2);
}

TEST_CASE("synth, squares, eval end to end and deterministic") {
  testing::TempDir dir("clie2e");
  const std::string data = (dir.path() / "data").string();
  REQUIRE(cli({"synth", "--out", data, "--sessions", "2", "--images", "2", "--width", "512", "--height", "512",
               "--seed", "3"}).code == 0);
  const json manifest = load_json(fs::path(data) / "manifest.json");
  CHECK(manifest.at("images").size() == 4);

  std::vector<std::string> outputs;
  for (const char* name : {"out1", "out2"}) {
    const std::string out = (dir.path() / name).string();
    const Run sq = cli({"squares", data, "--out", out, "--jobs", "2"});
    REQUIRE(sq.code == 0);
    const Run ev = cli({"eval", "--regions", out, "--selections", data + "/selections.csv"});
    REQUIRE(ev.code == 0);
    CHECK(printed(ev.out, "R") >= 0.98);
    std::string all;
    for (const auto& e : fs::directory_iterator(out)) {
      if (e.path().extension() == ".json") all += e.path().filename().string() + slurp(e.path());
    }
    outputs.push_back(all);
  }
  CHECK(outputs[0] == outputs[1]);
  CHECK_FALSE(outputs[0].empty());
}

TEST_CASE("squares features, train, rank-squares") {
  testing::TempDir dir("clirank");
  const std::string data = (dir.path() / "data").string();
  REQUIRE(cli({"synth", "--out", data, "--sessions", "1", "--images", "2", "--width", "512", "--height", "512",
               "--broken-fraction", "0.4", "--size-jitter", "0.15", "--seed", "5"}).code == 0);
  // Labels from a CSV naming only the selected (unbroken, large) squares.
  std::string labels = "image_id,session_id,x,y\n";
  for (const auto& e : fs::recursive_directory_iterator(data)) {
    if (e.path().extension() != ".json" || e.path().filename() == "manifest.json") continue;
    const json t = load_json(e.path());
    for (const auto& s : t.at("squares")) {
      if (s.at("selected").get<bool>()) {
        labels += t.at("image_id").get<std::string>() + ",s," + std::to_string(s.at("cx").get<double>()) + "," +
                  std::to_string(s.at("cy").get<double>()) + "\n";
      }
    }
  }
  write_file_atomic(dir.path() / "labels.csv", labels);
  const std::string feats = (dir.path() / "features.csv").string();
  REQUIRE(cli({"squares", data, "--out", (dir.path() / "sq").string(), "--features-csv", feats, "--labels",
               (dir.path() / "labels.csv").string()}).code == 0);
  const std::string header = slurp(feats).substr(0, slurp(feats).find('\n'));
  CHECK(header == "crop_id,image_id,session_id,mean,max,min,variance,skew,kurtosis,area,label");

  for (const char* kind : {"logreg", "forest"}) {
    CAPTURE(kind);
    const std::string model = (dir.path() / (std::string(kind) + ".json")).string();
    const Run tr = cli({"train", "--features", feats, "--model", kind, "--out", model, "--trees", "20"});
    REQUIRE(tr.code == 0);
    CHECK(printed(tr.out, "ROC AUC") > 0.8);
    const std::string ranked = (dir.path() / (std::string("ranked_") + kind)).string();
    REQUIRE(cli({"rank-squares", data, "--model", model, "--out", ranked, "--overlay"}).code == 0);
    for (const auto& e : fs::directory_iterator(ranked)) {
      if (e.path().extension() != ".json") continue;
      const json j = load_json(e.path());
      CHECK(j.at("format") == "gridtarget-ranked-squares");
      double prev = 2.0;
      for (const auto& s : j.at("squares")) {
        CHECK(s.at("score").get<double>() <= prev);
        prev = s.at("score").get<double>();
      }
    }
  }
  CHECK(cli({"train", "--features", feats, "--model", "svm", "--out", (dir.path() / "x.json").string()}).code == 2);
}

TEST_CASE("fit-lattice outputs and config precedence") {
  testing::TempDir dir("clilat");
  const std::string data = (dir.path() / "data").string();
  REQUIRE(cli({"synth", "--kind", "medmag", "--out", data, "--sessions", "1", "--images", "1", "--seed", "2"}).code == 0);
  const fs::path pmap = fs::path(data) / "session00" / "session00_medmag000.pmap";
  REQUIRE(fs::exists(pmap));
  write_file_atomic(dir.path() / "p.cfg", "w_fn = 3\n");
  auto w_fn_for = [&](std::vector<std::string> extra) {
    const std::string out = (dir.path() / "lat").string();
    std::vector<std::string> args{"fit-lattice", pmap.string(), "--out", out};
    args.insert(args.end(), extra.begin(), extra.end());
    const Run r = cli(args);
    REQUIRE(r.code == 0);
    return load_json(fs::path(out) / "session00_medmag000.lattice.json").at("weights").at("w_fn").get<double>();
  };
  const std::string cfg = (dir.path() / "p.cfg").string();
  CHECK(w_fn_for({}) == 2.0);
  CHECK(w_fn_for({"--config", cfg}) == 3.0);
  CHECK(w_fn_for({"--config", cfg, "--w-fn", "5"}) == 5.0);
  CHECK(w_fn_for({"--w-fn", "5", "--config", cfg}) == 5.0);
  CHECK(w_fn_for({"--config", cfg, "--set", "w_fn=4"}) == 4.0);

  write_file_atomic(dir.path() / "bad.cfg", "w_fn three\n");
  const Run bad = cli({"fit-lattice", pmap.string(), "--out", (dir.path() / "lat").string(), "--config",
                       (dir.path() / "bad.cfg").string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("key=value") != std::string::npos);

  const std::string out = (dir.path() / "crops").string();
  REQUIRE(cli({"fit-lattice", pmap.string(), "--out", out, "--write-crops", "--overlay"}).code == 0);
  const json j = load_json(fs::path(out) / "session00_medmag000.lattice.json");
  CHECK(std::abs(j.at("spacing").get<double>() - 100.0) < 2.0);
  const json index = load_json(fs::path(out) / "session00_medmag000_crops" / "index.json");
  REQUIRE(index.size() == j.at("crops").size());
  REQUIRE_FALSE(index.empty());
  const GrayImage crop = load_image(fs::path(out) / "session00_medmag000_crops" / index[0].at("file").get<std::string>());
  CHECK(crop.width == 40);
  CHECK(fs::exists(fs::path(out) / "session00_medmag000.overlay.png"));
  CHECK(std::abs(index[0].at("side").get<double>() - 40.0) < 2.0);

  const Run ev = cli({"eval", "--regions", out, "--selections", data + "/selections.csv"});
  CHECK(ev.code == 0);
  CHECK(printed(ev.out, "R") >= 0.9);
}
