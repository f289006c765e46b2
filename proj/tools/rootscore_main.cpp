// Command-line front end. Each subcommand is a thin binding over the library;
// failures print one machine-readable JSON object to stderr and exit nonzero.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rootscore/annotation.hpp"
#include "rootscore/baseline.hpp"
#include "rootscore/dataset.hpp"
#include "rootscore/error.hpp"
#include "rootscore/evaluate.hpp"
#include "rootscore/image.hpp"
#include "rootscore/kernels.hpp"
#include "rootscore/scoring.hpp"
#include "rootscore/synth.hpp"
#include "rootscore/trainer.hpp"
#include "rootscore/unet.hpp"

namespace {

using nlohmann::json;
using namespace rootscore;

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open config: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, path + ": " + e.what());
  }
}

BaselineParams baseline_params(const json& cfg) {
  BaselineParams bp;
  if (cfg.contains("baseline")) {
    const json& b = cfg.at("baseline");
    bp.min_blob_px = b.value("min_blob_px", bp.min_blob_px);
    bp.min_lesion_contrast =
        b.value("min_lesion_contrast", bp.min_lesion_contrast);
  }
  return bp;
}

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

struct CliState {
  uint64_t seed = 42;
  int threads = 0;
  std::string config_path;
  json config;
  bool seed_explicit = false;
};

int cmd_rasterize(const std::string& ann_path, const std::string& out_path,
                  const std::string& overlay_path) {
  AnnotationFile ann = load_annotation(ann_path);
  std::vector<RasterWarning> warnings;
  LabelMask mask = rasterize(ann, &warnings);
  for (const auto& w : warnings)
    std::cerr << "warning: polygon " << w.polygon_index << ": " << w.message
              << '\n';
  write_mask_png(mask, out_path);
  if (!overlay_path.empty())
    write_image_png(render_mask_colors(mask, overlay_palette()), overlay_path);
  emit({{"out", out_path},
        {"width", mask.width},
        {"height", mask.height},
        {"warnings", warnings.size()}});
  return 0;
}

int cmd_synth(const CliState& st, const std::string& out_dir, int per_category,
              int side, int limit) {
  std::filesystem::create_directories(out_dir + "/images");
  std::filesystem::create_directories(out_dir + "/masks");
  std::vector<SynthSample> suite =
      sample_category_suite(st.seed, per_category, side);
  if (limit > 0 && limit < static_cast<int>(suite.size()))
    suite.resize(static_cast<size_t>(limit));
  std::vector<ManifestEntry> manifest;
  std::vector<TruthRow> truth;
  for (size_t i = 0; i < suite.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "%04zu_%s.png", i,
                  suite[i].category.c_str());
    const std::string img_rel = std::string("images/") + name;
    const std::string mask_rel = std::string("masks/") + name;
    write_image_png(suite[i].image, out_dir + "/" + img_rel);
    write_mask_png(suite[i].mask, out_dir + "/" + mask_rel);
    manifest.push_back({img_rel, mask_rel});
    truth.push_back(
        {img_rel, score_mask(suite[i].mask).percentage, suite[i].category});
  }
  write_manifest(out_dir + "/manifest.ndjson", manifest);
  write_truth_csv(out_dir + "/truth.csv", truth);
  emit({{"out", out_dir}, {"count", suite.size()}, {"side", side}});
  return 0;
}

int cmd_train(const CliState& st, CLI::App* cmd, const std::string& manifest_path,
              const std::string& out_dir, const TrainConfig& flags) {
  TrainConfig cfg;
  if (st.config.contains("train"))
    cfg = train_config_from_json(st.config.at("train"));
  if (st.seed_explicit || !st.config.contains("/train/seed"_json_pointer))
    cfg.seed = st.seed;
  auto take = [&](const char* flag, auto member) {
    if (cmd->count(flag)) cfg.*member = flags.*member;
  };
  take("--epochs", &TrainConfig::epochs_max);
  take("--batch-size", &TrainConfig::batch_size);
  take("--lr", &TrainConfig::lr);
  take("--patience", &TrainConfig::early_stop_patience);
  take("--delta", &TrainConfig::improvement_delta);
  take("--val-fraction", &TrainConfig::val_fraction);
  take("--include-background", &TrainConfig::include_background);
  if (cmd->count("--flip-prob")) cfg.augment.flip_prob = flags.augment.flip_prob;
  if (cmd->count("--max-rot"))
    cfg.augment.max_rotation_deg = flags.augment.max_rotation_deg;
  if (cmd->count("--max-shift"))
    cfg.augment.max_shift_frac = flags.augment.max_shift_frac;
  if (cmd->count("--depth")) cfg.unet.depth = flags.unet.depth;
  if (cmd->count("--base-channels"))
    cfg.unet.base_channels = flags.unet.base_channels;
  if (cmd->count("--input-side")) cfg.unet.input_side = flags.unet.input_side;
  if (cmd->count("--no-timings")) cfg.record_timings = false;
  // Reference mode: a single thread also stops recording wall times so rerun
  // outputs are byte-identical.
  if (st.threads == 1) cfg.record_timings = false;

  std::vector<ManifestEntry> entries = load_manifest(manifest_path);
  TrainResult r = train(cfg, entries, out_dir, &std::cerr);
  emit({{"out", out_dir},
        {"best_epoch", r.best_epoch},
        {"best_val_dice", r.best_val_dice},
        {"epochs_run", r.history.size()}});
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& image_path,
                const std::string& out_mask, const std::string& out_overlay,
                bool no_restore) {
  UnetModel model = load_model(model_path);
  RgbImage img = read_image_png(image_path);
  LabelMask mask = predict_mask(model, img, !no_restore);
  if (!out_mask.empty()) write_mask_png(mask, out_mask);
  if (!out_overlay.empty()) write_image_png(render_overlay(mask), out_overlay);
  json j{{"image", image_path},
         {"width", mask.width},
         {"height", mask.height}};
  if (!out_mask.empty()) j["mask_out"] = out_mask;
  if (!out_overlay.empty()) j["overlay_out"] = out_overlay;
  emit(j);
  return 0;
}

int cmd_score(const std::string& mask_path, std::string label) {
  LabelMask mask = read_mask_png(mask_path);
  if (label.empty()) label = mask_path;
  emit(score_json(label, score_mask(mask)));
  return 0;
}

int cmd_baseline(const CliState& st, const std::string& image_path,
                 const std::string& out_mask, const std::string& out_overlay) {
  RgbImage img = read_image_png(image_path);
  BaselineResult r = baseline_score(img, baseline_params(st.config));
  if (!out_mask.empty()) write_mask_png(r.mask, out_mask);
  if (!out_overlay.empty())
    write_image_png(render_overlay(r.mask), out_overlay);
  json j = score_json(image_path, r.score);
  j["method"] = "otsu";
  j["root_threshold"] = r.root_threshold;
  j["lesion_threshold"] = r.lesion_threshold;
  emit(j);
  return 0;
}

int cmd_evaluate(const CliState& st, const std::string& manifest_path,
                 const std::string& model_path, const std::string& out_dir) {
  std::vector<ManifestEntry> entries = load_manifest(manifest_path);
  UnetModel model = load_model(model_path);
  EvalReport report =
      evaluate_with_model(entries, model, out_dir, baseline_params(st.config));
  json full = eval_report_json(report);
  emit({{"out", out_dir},
        {"aggregate", full.at("aggregate")},
        {"truth_failures", report.truth_failures},
        {"rows", report.rows.size()}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"root disc necrosis scoring pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  CliState st;
  app.add_option("--seed", st.seed, "RNG seed")->capture_default_str();
  app.add_option("--threads", st.threads,
                 "compute threads; 1 = serial reference mode, 0 = auto")
      ->capture_default_str();
  app.add_option("--config", st.config_path, "JSON config file");

  auto* raster = app.add_subcommand("rasterize", "polygon annotation to mask");
  std::string ann_path, raster_out, raster_overlay;
  raster->add_option("--annotation", ann_path, "annotation JSON")->required();
  raster->add_option("--out", raster_out, "output mask PNG")->required();
  raster->add_option("--overlay", raster_overlay, "optional color overlay PNG");

  auto* synth = app.add_subcommand("synth", "generate a synthetic disc suite");
  std::string synth_out;
  int per_category = 24, synth_side = 128, synth_limit = 0;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--per-category", per_category, "samples per category")
      ->capture_default_str();
  synth->add_option("--side", synth_side, "image side")->capture_default_str();
  synth->add_option("--limit", synth_limit,
                    "keep only the first N samples (0 = all)")
      ->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "train the segmentation model");
  std::string train_manifest, train_out;
  TrainConfig tf;
  train_cmd->add_option("--manifest", train_manifest, "dataset manifest")
      ->required();
  train_cmd->add_option("--out", train_out, "output directory")->required();
  train_cmd->add_option("--epochs", tf.epochs_max, "max epochs");
  train_cmd->add_option("--batch-size", tf.batch_size, "batch size");
  train_cmd->add_option("--lr", tf.lr, "learning rate");
  train_cmd->add_option("--patience", tf.early_stop_patience,
                        "early stop patience");
  train_cmd->add_option("--delta", tf.improvement_delta,
                        "min val dice improvement");
  train_cmd->add_option("--val-fraction", tf.val_fraction,
                        "validation fraction");
  train_cmd->add_flag("--include-background", tf.include_background,
                      "score background in the dice loss");
  train_cmd->add_option("--flip-prob", tf.augment.flip_prob, "hflip chance");
  train_cmd->add_option("--max-rot", tf.augment.max_rotation_deg,
                        "max rotation, degrees");
  train_cmd->add_option("--max-shift", tf.augment.max_shift_frac,
                        "max shift, fraction of side");
  train_cmd->add_option("--depth", tf.unet.depth, "encoder depth");
  train_cmd->add_option("--base-channels", tf.unet.base_channels,
                        "first-level channels");
  train_cmd->add_option("--input-side", tf.unet.input_side,
                        "network input side");
  train_cmd->add_flag("--no-timings", "write wall_seconds as 0");

  auto* predict = app.add_subcommand("predict", "segment one image");
  std::string pred_model, pred_image, pred_mask_out, pred_overlay_out;
  bool no_restore = false;
  predict->add_option("--model", pred_model, "checkpoint path")->required();
  predict->add_option("--image", pred_image, "input image PNG")->required();
  predict->add_option("--out-mask", pred_mask_out, "output mask PNG");
  predict->add_option("--out-overlay", pred_overlay_out, "output overlay PNG");
  predict->add_flag("--no-restore-size", no_restore,
                    "keep the network-resolution mask");

  auto* score = app.add_subcommand("score", "necrosis percentage of a mask");
  std::string score_mask_path, score_label;
  score->add_option("--mask", score_mask_path, "mask PNG")->required();
  score->add_option("--image", score_label, "label for the report");

  auto* base = app.add_subcommand("baseline", "classical threshold scoring");
  std::string base_image, base_mask_out, base_overlay_out;
  base->add_option("--image", base_image, "input image PNG")->required();
  base->add_option("--out-mask", base_mask_out, "output mask PNG");
  base->add_option("--out-overlay", base_overlay_out, "output overlay PNG");

  auto* eval = app.add_subcommand("evaluate", "model vs baseline on a dataset");
  std::string eval_manifest, eval_model, eval_out;
  eval->add_option("--manifest", eval_manifest, "dataset manifest")->required();
  eval->add_option("--model", eval_model, "checkpoint path")->required();
  eval->add_option("--out", eval_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    st.seed_explicit = app.count("--seed") > 0;
    st.config = load_config(st.config_path);
    nn::kernels::set_threads(st.threads);
    if (raster->parsed())
      return cmd_rasterize(ann_path, raster_out, raster_overlay);
    if (synth->parsed())
      return cmd_synth(st, synth_out, per_category, synth_side, synth_limit);
    if (train_cmd->parsed())
      return cmd_train(st, train_cmd, train_manifest, train_out, tf);
    if (predict->parsed())
      return cmd_predict(pred_model, pred_image, pred_mask_out,
                         pred_overlay_out, no_restore);
    if (score->parsed()) return cmd_score(score_mask_path, score_label);
    if (base->parsed())
      return cmd_baseline(st, base_image, base_mask_out, base_overlay_out);
    if (eval->parsed()) return cmd_evaluate(st, eval_manifest, eval_model, eval_out);
  } catch (const Error& e) {
    std::cerr << json{{"error", to_string(e.kind())}, {"message", e.what()}}
                     .dump()
              << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump()
              << '\n';
    return 2;
  }
  return 0;
}
