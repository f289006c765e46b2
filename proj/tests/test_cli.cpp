#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "rootscore/annotation.hpp"
#include "rootscore/dataset.hpp"
#include "rootscore/image.hpp"
#include "rootscore/baseline.hpp"
#include "rootscore/scoring.hpp"
#include "rootscore/synth.hpp"

using namespace rootscore;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Runs the installed binary with stdout/stderr captured through temp files.
CliResult run_cli(const std::string& args) {
  static int counter = 0;
  fs::path out = fs::path("tmp_cli") / ("stdout_" + std::to_string(counter));
  fs::path err = fs::path("tmp_cli") / ("stderr_" + std::to_string(counter));
  ++counter;
  fs::create_directories("tmp_cli");
  std::string cmd = std::string(ROOTSCORE_CLI_PATH) + " " + args + " >" +
                    out.string() + " 2>" + err.string();
  int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

json parse_stdout(const CliResult& r) {
  INFO("stdout: ", r.out, " stderr: ", r.err);
  REQUIRE(r.exit_code == 0);
  return json::parse(r.out);
}

// Builds a tiny synthetic dataset once; several cases below reuse it.
const fs::path& suite_dir() {
  static fs::path dir = [] {
    fs::path d = "tmp_cli/suite";
    fs::remove_all(d);
    CliResult r = run_cli("--seed 9 synth --out " + d.string() +
                          " --per-category 2 --side 32");
    json j = parse_stdout(r);
    REQUIRE(j.at("count").get<int>() == 12);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("cli synth writes a loadable dataset") {
  const fs::path& dir = suite_dir();
  CHECK(fs::exists(dir / "manifest.ndjson"));
  CHECK(fs::exists(dir / "truth.csv"));

  auto entries = load_manifest((dir / "manifest.ndjson").string());
  REQUIRE(entries.size() == 12);
  for (const auto& e : entries) {
    CHECK(fs::exists(e.image));
    CHECK(fs::exists(e.mask));
    auto img = read_image_png(e.image);
    auto mask = read_mask_png(e.mask);
    CHECK(img.width == 32);
    CHECK(img.height == 32);
    CHECK(mask.width == 32);
    CHECK(mask.height == 32);
  }

  auto truth = load_truth_csv((dir / "truth.csv").string());
  REQUIRE(truth.size() == 12);
  // Round-robin over the six categories, so each tag appears exactly twice.
  for (const auto& tag : category_tags()) {
    int n = 0;
    for (const auto& row : truth)
      if (row.category == tag) ++n;
    CHECK(n == 2);
  }
  // truth.csv percentages must match scoring the masks the tool wrote, up to
  // the file's %.9g formatting.
  for (size_t i = 0; i < truth.size(); ++i) {
    auto mask = read_mask_png(entries[i].mask);
    CHECK(necrosis_percentage(mask) ==
          doctest::Approx(truth[i].true_percentage).epsilon(1e-8));
  }
}

TEST_CASE("cli synth is deterministic across runs") {
  const fs::path& dir1 = suite_dir();
  fs::path dir2 = "tmp_cli/suite_rerun";
  fs::remove_all(dir2);
  run_cli("--seed 9 synth --out " + dir2.string() +
          " --per-category 2 --side 32");

  // Manifest and truth paths are relative, so the byte streams must match.
  CHECK(slurp(dir1 / "manifest.ndjson") == slurp(dir2 / "manifest.ndjson"));
  CHECK(slurp(dir1 / "truth.csv") == slurp(dir2 / "truth.csv"));
  auto e1 = load_manifest((dir1 / "manifest.ndjson").string());
  auto e2 = load_manifest((dir2 / "manifest.ndjson").string());
  REQUIRE(e1.size() == e2.size());
  for (size_t i = 0; i < e1.size(); ++i) {
    CHECK(slurp(e1[i].image) == slurp(e2[i].image));
    CHECK(slurp(e1[i].mask) == slurp(e2[i].mask));
  }

  fs::path dir3 = "tmp_cli/suite_seed10";
  fs::remove_all(dir3);
  run_cli("--seed 10 synth --out " + dir3.string() +
          " --per-category 2 --side 32");
  auto e3 = load_manifest((dir3 / "manifest.ndjson").string());
  bool any_diff = false;
  for (size_t i = 0; i < e1.size(); ++i)
    if (slurp(e1[i].image) != slurp(e3[i].image)) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("cli score reports a lesion-free mask as severity 1") {
  LabelMask mask = LabelMask::filled(16, 16, 1);
  fs::create_directories("tmp_cli");
  write_mask_png(mask, "tmp_cli/all_root.png");

  CliResult r = run_cli("score --mask tmp_cli/all_root.png --image rootA");
  json j = parse_stdout(r);
  CHECK(j.at("image").get<std::string>() == "rootA");
  CHECK(j.at("percentage").get<double>() == 0.0);
  CHECK(j.at("severity").get<int>() == 1);
  CHECK(j.at("p_nec").get<int64_t>() == 0);
  CHECK(j.at("p_root").get<int64_t>() == 256);

  // Without --image the mask path labels the report.
  json j2 = parse_stdout(run_cli("score --mask tmp_cli/all_root.png"));
  CHECK(j2.at("image").get<std::string>() == "tmp_cli/all_root.png");
}

TEST_CASE("cli rasterize matches the library on the same annotation") {
  json ann = {
      {"image", "disc.png"},
      {"width", 20},
      {"height", 12},
      {"shapes",
       {{{"label", "root"},
         {"points", {{2.0, 1.0}, {17.0, 1.0}, {17.0, 10.0}, {2.0, 10.0}}}},
        {{"label", "necrosis"},
         {"points", {{5.0, 3.0}, {9.0, 3.0}, {9.0, 7.0}, {5.0, 7.0}}}}}}};
  fs::create_directories("tmp_cli");
  std::ofstream("tmp_cli/ann.json") << ann.dump(2);

  CliResult r = run_cli(
      "rasterize --annotation tmp_cli/ann.json --out tmp_cli/ann_mask.png");
  json j = parse_stdout(r);
  CHECK(j.at("width").get<int>() == 20);
  CHECK(j.at("height").get<int>() == 12);
  CHECK(j.at("warnings").get<int>() == 0);
  CHECK(j.at("out").get<std::string>() == "tmp_cli/ann_mask.png");

  auto from_cli = read_mask_png("tmp_cli/ann_mask.png");
  auto parsed = load_annotation("tmp_cli/ann.json");
  auto from_lib = rasterize(parsed);
  REQUIRE(from_cli.width == from_lib.width);
  REQUIRE(from_cli.height == from_lib.height);
  CHECK(from_cli.classes == from_lib.classes);
  // Lesion paints over root, and the interior square really is class 2.
  CHECK(from_cli.at(7, 5) == 2);
  CHECK(from_cli.at(3, 2) == 1);
  CHECK(from_cli.at(0, 0) == 0);
}

TEST_CASE("cli rasterize counts skipped polygons as warnings") {
  json ann = {
      {"image", "disc.png"},
      {"width", 8},
      {"height", 8},
      {"shapes",
       {{{"label", "root"},
         {"points", {{1.0, 1.0}, {6.0, 1.0}, {6.0, 6.0}, {1.0, 6.0}}}},
        {{"label", "root"},
         {"points",
          {{100.0, 100.0}, {110.0, 100.0}, {110.0, 110.0}, {100.0, 110.0}}}}}}};
  fs::create_directories("tmp_cli");
  std::ofstream("tmp_cli/ann_off.json") << ann.dump(2);

  CliResult r = run_cli(
      "rasterize --annotation tmp_cli/ann_off.json --out tmp_cli/off.png");
  json j = parse_stdout(r);
  CHECK(j.at("warnings").get<int>() == 1);
  CHECK(r.err.find("warning: polygon 1") != std::string::npos);
}

TEST_CASE("cli baseline agrees with the library scorer") {
  auto suite = sample_category_suite(21, 1, 64);
  REQUIRE(!suite.empty());
  fs::create_directories("tmp_cli");
  write_image_png(suite[0].image, "tmp_cli/base_in.png");

  CliResult r = run_cli(
      "baseline --image tmp_cli/base_in.png --out-mask tmp_cli/base_mask.png");
  json j = parse_stdout(r);
  CHECK(j.at("method").get<std::string>() == "otsu");

  auto lib = baseline_score(read_image_png("tmp_cli/base_in.png"));
  CHECK(j.at("percentage").get<double>() ==
        doctest::Approx(lib.score.percentage).epsilon(1e-12));
  CHECK(j.at("severity").get<int>() == lib.score.severity);
  CHECK(j.at("root_threshold").get<int>() == lib.root_threshold);
  CHECK(j.at("lesion_threshold").get<int>() == lib.lesion_threshold);

  auto mask = read_mask_png("tmp_cli/base_mask.png");
  CHECK(mask.classes == lib.mask.classes);
}

TEST_CASE("cli train, predict, score and evaluate stay consistent") {
  const fs::path& data = suite_dir();
  fs::path run = "tmp_cli/run";
  fs::remove_all(run);

  CliResult tr = run_cli("--seed 11 --threads 1 train --manifest " +
                         (data / "manifest.ndjson").string() + " --out " +
                         run.string() +
                         " --epochs 2 --batch-size 4 --depth 1"
                         " --base-channels 4 --input-side 32");
  json tj = parse_stdout(tr);
  CHECK(tj.at("out").get<std::string>() == run.string());
  CHECK(tj.at("epochs_run").get<int>() >= 1);
  CHECK(tj.at("epochs_run").get<int>() <= 2);
  CHECK(tj.at("best_epoch").get<int>() >= 1);
  CHECK(tj.at("best_val_dice").get<double>() > 0.0);
  for (const char* f : {"best.ckpt", "best.ckpt.json", "history.csv",
                        "train_manifest.ndjson", "val_manifest.ndjson"})
    CHECK(fs::exists(run / f));

  // Predict one validation image and keep the emitted mask.
  auto val = load_manifest((run / "val_manifest.ndjson").string());
  REQUIRE(!val.empty());
  const std::string img_path = val[0].image;
  CliResult pr = run_cli("predict --model " + (run / "best.ckpt").string() +
                         " --image " + img_path +
                         " --out-mask tmp_cli/pred.png");
  json pj = parse_stdout(pr);
  CHECK(pj.at("image").get<std::string>() == img_path);
  CHECK(pj.at("width").get<int>() == 32);
  CHECK(pj.at("height").get<int>() == 32);
  CHECK(pj.at("mask_out").get<std::string>() == "tmp_cli/pred.png");

  json sj = parse_stdout(run_cli("score --mask tmp_cli/pred.png"));

  fs::path ev = "tmp_cli/eval";
  fs::remove_all(ev);
  CliResult er = run_cli("--threads 1 evaluate --manifest " +
                         (data / "manifest.ndjson").string() + " --model " +
                         (run / "best.ckpt").string() + " --out " +
                         ev.string());
  json ej = parse_stdout(er);
  CHECK(ej.at("truth_failures").get<int>() == 0);
  CHECK(ej.at("rows").get<int>() == 12);
  CHECK(ej.at("aggregate").at("model").at("n").get<int>() == 12);
  CHECK(fs::exists(ev / "report.json"));
  CHECK(fs::exists(ev / "scatter.csv"));

  // The evaluate row for the predicted image must carry the same percentage
  // the score subcommand computed from the mask predict wrote: same model,
  // same input side, no resize anywhere in between.
  // Row paths come from the dataset manifest, the predicted path from the run
  // dir's val manifest; they spell the same file differently, so match on the
  // unique synth filename.
  json report = json::parse(slurp(ev / "report.json"));
  bool found = false;
  for (const auto& row : report.at("per_image")) {
    const fs::path row_img = row.at("image").get<std::string>();
    if (row_img.filename() != fs::path(img_path).filename()) continue;
    found = true;
    REQUIRE(row.at("model").at("ok").get<bool>());
    CHECK(row.at("model").at("pct").get<double>() ==
          sj.at("percentage").get<double>());
    CHECK(row.at("model").at("severity").get<int>() ==
          sj.at("severity").get<int>());
  }
  CHECK(found);
}

TEST_CASE("cli config file sets training defaults, flags override") {
  const fs::path& data = suite_dir();
  fs::create_directories("tmp_cli");
  std::ofstream("tmp_cli/cfg.json")
      << R"({"train": {"epochs_max": 1, "unet": {"depth": 1,)"
      << R"( "base_channels": 4, "input_side": 32}}})";

  fs::path run1 = "tmp_cli/cfg_run1";
  fs::remove_all(run1);
  json j1 = parse_stdout(run_cli(
      "--seed 11 --threads 1 --config tmp_cli/cfg.json train --manifest " +
      (data / "manifest.ndjson").string() + " --out " + run1.string()));
  CHECK(j1.at("epochs_run").get<int>() == 1);

  fs::path run2 = "tmp_cli/cfg_run2";
  fs::remove_all(run2);
  json j2 = parse_stdout(run_cli(
      "--seed 11 --threads 1 --config tmp_cli/cfg.json train --manifest " +
      (data / "manifest.ndjson").string() + " --out " + run2.string() +
      " --epochs 2"));
  CHECK(j2.at("epochs_run").get<int>() == 2);
}

TEST_CASE("cli failures emit structured errors on stderr") {
  CliResult miss = run_cli("score --mask tmp_cli/does_not_exist.png");
  CHECK(miss.exit_code == 1);
  CHECK(miss.out.empty());
  json ej = json::parse(miss.err);
  CHECK(ej.at("error").get<std::string>() == "IoError");
  CHECK(!ej.at("message").get<std::string>().empty());

  // Config file with an invalid value trips validation, not a crash.
  std::ofstream("tmp_cli/bad_cfg.json") << R"({"train": {"lr": -1.0}})";
  CliResult bad = run_cli(
      "--config tmp_cli/bad_cfg.json train --manifest x.ndjson --out tmp_cli/x");
  CHECK(bad.exit_code == 1);
  CHECK(json::parse(bad.err).at("error").get<std::string>() == "ConfigError");

  CliResult unknown = run_cli("frobnicate");
  CHECK(unknown.exit_code != 0);
}
