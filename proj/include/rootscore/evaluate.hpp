#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rootscore/baseline.hpp"
#include "rootscore/dataset.hpp"
#include "rootscore/image.hpp"
#include "rootscore/metrics.hpp"
#include "rootscore/unet.hpp"

namespace rootscore {

// One method's outcome on one sample. `ok == false` means the method raised
// NoRootDetected for this image; the row stays in the report but is excluded
// from that method's aggregates.
struct MethodResult {
  bool ok = false;
  std::string error;  // error kind name when !ok
  double pct = 0;
  int severity = 0;
  double dice_root = 0, dice_necrosis = 0, mean_iou = 0;
};

struct EvalRow {
  std::string image;
  bool truth_ok = false;
  std::string truth_error;
  double true_pct = 0;
  int true_severity = 0;
  MethodResult model;
  MethodResult baseline;
};

struct MethodAggregate {
  int n = 0;         // rows contributing
  int failures = 0;  // NoRootDetected rows
  bool stats_ok = false;
  std::string stats_error;
  RegressionStats stats;
  double mean_dice_root = 0, mean_dice_necrosis = 0, mean_iou = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // sorted by image path
  MethodAggregate model;
  MethodAggregate baseline;
  int truth_failures = 0;
};

using MaskPredictor = std::function<LabelMask(const RgbImage&)>;

// Runs predictor + baseline over every manifest entry, compares against the
// ground-truth masks at their stored resolution, and writes to out_dir:
//   metrics_model.csv / metrics_baseline.csv   per-image mask metrics
//   scatter.csv                                image,true_pct,model_pct,baseline_pct
//   report.json                                rows + aggregates
// Errors other than NoRootDetected propagate, annotated with the sample path.
EvalReport evaluate_dataset(const std::vector<ManifestEntry>& entries,
                            const MaskPredictor& predictor,
                            const std::string& out_dir,
                            const BaselineParams& bp = {});

EvalReport evaluate_with_model(const std::vector<ManifestEntry>& entries,
                               const UnetModel& model,
                               const std::string& out_dir,
                               const BaselineParams& bp = {});

nlohmann::json eval_report_json(const EvalReport& report);

}  // namespace rootscore
