#include "rootscore/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "rootscore/error.hpp"
#include "rootscore/optim.hpp"
#include "rootscore/rng.hpp"

namespace rootscore {

namespace fs = std::filesystem;
using nlohmann::json;

void validate(const TrainConfig& cfg) {
  if (cfg.epochs_max < 1) fail(ErrorKind::ConfigError, "epochs_max must be >= 1");
  if (cfg.batch_size < 1) fail(ErrorKind::ConfigError, "batch_size must be >= 1");
  if (!(cfg.lr > 0)) fail(ErrorKind::ConfigError, "lr must be positive");
  if (cfg.early_stop_patience < 1) {
    fail(ErrorKind::ConfigError, "early_stop_patience must be >= 1");
  }
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0)) {
    fail(ErrorKind::ConfigError, "val_fraction must be in (0,1)");
  }
  validate(cfg.augment);
  validate(cfg.unet);
}

json to_json(const TrainConfig& cfg) {
  return {{"epochs_max", cfg.epochs_max},
          {"batch_size", cfg.batch_size},
          {"lr", cfg.lr},
          {"early_stop_patience", cfg.early_stop_patience},
          {"improvement_delta", cfg.improvement_delta},
          {"val_fraction", cfg.val_fraction},
          {"seed", cfg.seed},
          {"record_timings", cfg.record_timings},
          {"include_background", cfg.include_background},
          {"augment",
           {{"flip_prob", cfg.augment.flip_prob},
            {"max_rotation_deg", cfg.augment.max_rotation_deg},
            {"max_shift_frac", cfg.augment.max_shift_frac}}},
          {"unet", to_json(cfg.unet)}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  try {
    cfg.epochs_max = j.value("epochs_max", cfg.epochs_max);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.early_stop_patience =
        j.value("early_stop_patience", cfg.early_stop_patience);
    cfg.improvement_delta = j.value("improvement_delta", cfg.improvement_delta);
    cfg.val_fraction = j.value("val_fraction", cfg.val_fraction);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.record_timings = j.value("record_timings", cfg.record_timings);
    cfg.include_background =
        j.value("include_background", cfg.include_background);
    if (j.contains("augment")) {
      const json& a = j.at("augment");
      cfg.augment.flip_prob = a.value("flip_prob", cfg.augment.flip_prob);
      cfg.augment.max_rotation_deg =
          a.value("max_rotation_deg", cfg.augment.max_rotation_deg);
      cfg.augment.max_shift_frac =
          a.value("max_shift_frac", cfg.augment.max_shift_frac);
    }
    if (j.contains("unet")) cfg.unet = unet_config_from_json(j.at("unet"));
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("bad train config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct LoadedSet {
  std::vector<Sample> samples;
};

LoadedSet load_set(const std::vector<ManifestEntry>& entries, int side) {
  LoadedSet set;
  set.samples.reserve(entries.size());
  for (const auto& e : entries) {
    Sample s = load_sample(e);
    if (s.image.width != side || s.image.height != side) {
      auto [img, mask] = resize_pair(s.image, s.mask, side);
      s.image = std::move(img);
      s.mask = std::move(mask);
    }
    set.samples.push_back(std::move(s));
  }
  return set;
}

// Fills row `slot` of batch tensors from one sample: image scaled to [0,1],
// mask one-hot.
void fill_slot(nn::Tensor& x, nn::Tensor& t, int slot, const RgbImage& img,
               const LabelMask& mask, int classes) {
  const int side = img.width;
  const size_t plane = (size_t)side * side;
  float* xb = x.data.data() + (size_t)slot * 3 * plane;
  float* tb = t.data.data() + (size_t)slot * classes * plane;
  std::fill(tb, tb + (size_t)classes * plane, 0.0f);
  for (size_t j = 0; j < plane; ++j) {
    xb[0 * plane + j] = img.pixels[3 * j + 0] / 255.0f;
    xb[1 * plane + j] = img.pixels[3 * j + 1] / 255.0f;
    xb[2 * plane + j] = img.pixels[3 * j + 2] / 255.0f;
    tb[(size_t)mask.classes[j] * plane + j] = 1.0f;
  }
}

struct Snapshot {
  std::vector<std::vector<float>> data;
};

Snapshot take_snapshot(const UnetModel& m) {
  Snapshot s;
  for (const auto& [name, t] : m.named_tensors()) s.data.push_back(t->data);
  return s;
}

void restore_snapshot(UnetModel& m, const Snapshot& s) {
  auto named = m.named_tensors();
  for (size_t i = 0; i < named.size(); ++i) named[i].tensor->data = s.data[i];
}

}  // namespace

TrainResult train(const TrainConfig& cfg,
                  const std::vector<ManifestEntry>& manifest,
                  const std::string& out_dir, std::ostream* progress) {
  validate(cfg);
  fs::create_directories(out_dir);

  auto [train_entries, val_entries] =
      split_dataset(manifest, cfg.val_fraction, cfg.seed);
  // Split manifests are written with paths relative to the run directory
  // (load_manifest resolves against the manifest's own dir), so the run dir
  // reloads correctly from any cwd and stays byte-identical across reruns in
  // sibling roots. Entries that cannot be relativized are kept verbatim.
  auto rel_to_run = [&](std::vector<ManifestEntry> v) {
    const fs::path base = fs::absolute(out_dir);
    for (auto& e : v)
      for (std::string* p : {&e.image, &e.mask}) {
        std::error_code ec;
        const fs::path r = fs::relative(fs::absolute(*p), base, ec);
        if (!ec && !r.empty()) *p = r.string();
      }
    return v;
  };
  write_manifest(out_dir + "/train_manifest.ndjson", rel_to_run(train_entries));
  write_manifest(out_dir + "/val_manifest.ndjson", rel_to_run(val_entries));

  const int side = cfg.unet.input_side;
  const int classes = cfg.unet.num_classes;
  LoadedSet train_set = load_set(train_entries, side);
  LoadedSet val_set = load_set(val_entries, side);

  UnetModel model = build_unet(cfg.unet, mix_seed(cfg.seed, 0x696e6974ull));
  std::vector<nn::TensorPtr> params = model.parameters();
  nn::AdamState adam = adam_init(params, cfg.lr);

  TrainResult result;
  Snapshot best;
  int stale = 0;

  const auto run_batches = [&](LoadedSet& set, bool training, int epoch,
                               double& loss_out) {
    const size_t n = set.samples.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    if (training) {
      Rng rng(mix_seed(cfg.seed, 0x7368756666ull, (uint64_t)epoch));
      for (size_t i = n - 1; i > 0; --i) {
        std::swap(order[i], order[rng.below(i + 1)]);
      }
    }
    double loss_sum = 0;
    for (size_t at = 0; at < n; at += cfg.batch_size) {
      const int bn = (int)std::min((size_t)cfg.batch_size, n - at);
      auto x = nn::make_tensor({bn, 3, side, side});
      auto t = nn::make_tensor({bn, classes, side, side});
      for (int s = 0; s < bn; ++s) {
        const size_t idx = order[at + s];
        const Sample& sample = set.samples[idx];
        if (training) {
          auto [img, mask] =
              augment_pair(sample.image, sample.mask, cfg.augment,
                           mix_seed(cfg.seed, (uint64_t)epoch, idx));
          fill_slot(*x, *t, s, img, mask, classes);
        } else {
          fill_slot(*x, *t, s, sample.image, sample.mask, classes);
        }
      }
      nn::DiceReport rep;
      if (training) {
        nn::Tape tape;
        auto probs = model.forward(&tape, x, true);
        auto loss = nn::dice_loss(&tape, probs, t, cfg.include_background, &rep);
        if (!std::isfinite(rep.loss)) {
          fail(ErrorKind::DivergenceError,
               "non-finite loss at epoch " + std::to_string(epoch));
        }
        tape.backward(loss);
        adam_step(params, adam);
        for (auto& p : params) p->zero_grad();
      } else {
        auto probs = model.forward(nullptr, x, false);
        nn::dice_loss(nullptr, probs, t, cfg.include_background, &rep);
        if (!std::isfinite(rep.loss)) {
          fail(ErrorKind::DivergenceError,
               "non-finite validation loss at epoch " + std::to_string(epoch));
        }
      }
      loss_sum += rep.loss * bn;
    }
    loss_out = loss_sum / (double)n;
  };

  for (int epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double train_loss = 0, val_loss = 0;
    run_batches(train_set, true, epoch, train_loss);
    run_batches(val_set, false, epoch, val_loss);
    const double wall =
        cfg.record_timings
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count()
            : 0.0;

    EpochRecord rec{epoch, 1.0 - train_loss, 1.0 - val_loss,
                    train_loss, val_loss, wall};
    result.history.push_back(rec);
    if (progress) {
      *progress << "epoch " << epoch << " train_dice " << num(rec.train_dice)
                << " val_dice " << num(rec.val_dice) << " ("
                << num(rec.wall_seconds) << "s)\n";
    }

    // the checkpoint follows the strict maximum; the patience counter only
    // resets on improvements larger than improvement_delta
    const double prev_best = result.best_epoch == 0 ? -1.0 : result.best_val_dice;
    if (rec.val_dice > prev_best) {
      result.best_val_dice = rec.val_dice;
      result.best_epoch = epoch;
      best = take_snapshot(model);
    }
    if (rec.val_dice > prev_best + cfg.improvement_delta) {
      stale = 0;
    } else {
      ++stale;
    }
    if (stale >= cfg.early_stop_patience) break;
  }

  restore_snapshot(model, best);
  result.model = std::move(model);
  save_model(result.model, out_dir + "/best.ckpt");
  write_history_csv(out_dir + "/history.csv", result.history);
  std::ofstream cfg_out(out_dir + "/config.json", std::ios::trunc);
  if (!cfg_out) fail(ErrorKind::IoError, "cannot write config.json");
  cfg_out << to_json(cfg).dump(2) << "\n";
  return result;
}

void write_history_csv(const std::string& path,
                       const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write: " + path);
  out << "epoch,train_dice,val_dice,train_loss,val_loss,wall_seconds\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << num(r.train_dice) << ',' << num(r.val_dice) << ','
        << num(r.train_loss) << ',' << num(r.val_loss) << ','
        << num(r.wall_seconds) << '\n';
  }
  if (!out) fail(ErrorKind::IoError, "write failed: " + path);
}

}  // namespace rootscore
