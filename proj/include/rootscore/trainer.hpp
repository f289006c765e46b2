#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rootscore/augment.hpp"
#include "rootscore/dataset.hpp"
#include "rootscore/unet.hpp"

namespace rootscore {

struct TrainConfig {
  int epochs_max = 100;
  int batch_size = 8;
  double lr = 3e-4;
  int early_stop_patience = 20;
  double improvement_delta = 1e-4;
  double val_fraction = 0.1;
  uint64_t seed = 42;
  // Reference mode writes wall_seconds as 0 so reruns are byte-identical.
  bool record_timings = true;
  bool include_background = false;  // score background in the dice loss
  AugmentSpec augment;
  UnetConfig unet;
};

void validate(const TrainConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_dice = 0, val_dice = 0;
  double train_loss = 0, val_loss = 0;
  double wall_seconds = 0;
};

struct TrainResult {
  UnetModel model;  // best-epoch weights
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_dice = 0;
};

// Runs the full recipe: split, per-epoch augmented batches, dice loss, Adam,
// early stopping on validation dice (no improvement by > improvement_delta for
// early_stop_patience consecutive epochs). Writes best.ckpt (+ sidecar),
// history.csv, config.json, and the split manifests into out_dir. `progress`
// gets one line per epoch when non-null.
TrainResult train(const TrainConfig& cfg,
                  const std::vector<ManifestEntry>& manifest,
                  const std::string& out_dir, std::ostream* progress = nullptr);

void write_history_csv(const std::string& path,
                       const std::vector<EpochRecord>& history);

}  // namespace rootscore
