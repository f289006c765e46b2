#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rootscore/image.hpp"

namespace rootscore {

struct OverlapStats {
  double r_pred = 0, r_inp = 0, intersection = 0, union_area = 0;
};

OverlapStats overlap_stats(const LabelMask& pred, const LabelMask& truth,
                           uint8_t cls);

// (2|A∩B| + smooth) / (|A| + |B| + smooth) for one class's pixel sets.
double dice_coefficient(const LabelMask& pred, const LabelMask& truth,
                        uint8_t cls, double smooth = 1e-6);

// Soft dice over probability maps of equal length: intersection = sum(p*t),
// areas = sum(p), sum(t).
double soft_dice(const std::vector<float>& pred, const std::vector<float>& truth,
                 double smooth = 1e-6);

// |A∩B| / |A∪B|; empty union yields nullopt so callers can skip the class.
std::optional<double> iou(const LabelMask& pred, const LabelMask& truth,
                          uint8_t cls);

// Mean per-class IoU over `classes` (default root+necrosis), skipping classes
// whose union is empty. All classes skipped (nothing of interest in either
// mask) scores 1.0: the masks agree.
double mean_iou(const LabelMask& pred, const LabelMask& truth,
                const std::vector<uint8_t>& classes = {kClassRoot,
                                                       kClassNecrosis});

struct RegressionStats {
  double mse = 0, r2 = 0, r = 0;
};

// pred/truth must have equal length >= 2; constant truth is degenerate for
// r and R^2. A constant *prediction* gets r = 0 (no linear association).
RegressionStats regression_stats(const std::vector<double>& pred,
                                 const std::vector<double>& truth);

struct MetricsRow {
  std::string image;
  double dice_root = 0, dice_necrosis = 0;
  std::optional<double> iou_root, iou_necrosis;
  double mean_iou = 0;
  std::optional<double> pred_pct;  // empty when prediction found no root
  double true_pct = 0;
};

// Header `image,dice_root,dice_necrosis,iou_root,iou_necrosis,mean_iou,
// pred_pct,true_pct`; missing optionals are written as `nan`.
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows);

}  // namespace rootscore
