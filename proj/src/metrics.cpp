#include "rootscore/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "rootscore/error.hpp"

namespace rootscore {

namespace {

void check_same_dims(const LabelMask& a, const LabelMask& b) {
  if (a.width != b.width || a.height != b.height) {
    fail(ErrorKind::ShapeError, "mask dimension mismatch");
  }
}

}  // namespace

OverlapStats overlap_stats(const LabelMask& pred, const LabelMask& truth,
                           uint8_t cls) {
  check_same_dims(pred, truth);
  OverlapStats s;
  for (size_t i = 0; i < pred.classes.size(); ++i) {
    const bool p = pred.classes[i] == cls;
    const bool t = truth.classes[i] == cls;
    s.r_pred += p;
    s.r_inp += t;
    s.intersection += p && t;
    s.union_area += p || t;
  }
  return s;
}

double dice_coefficient(const LabelMask& pred, const LabelMask& truth,
                        uint8_t cls, double smooth) {
  const OverlapStats s = overlap_stats(pred, truth, cls);
  return (2.0 * s.intersection + smooth) / (s.r_pred + s.r_inp + smooth);
}

double soft_dice(const std::vector<float>& pred, const std::vector<float>& truth,
                 double smooth) {
  if (pred.size() != truth.size()) {
    fail(ErrorKind::ShapeError, "soft_dice length mismatch");
  }
  double inter = 0, total = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    inter += (double)pred[i] * truth[i];
    total += (double)pred[i] + truth[i];
  }
  return (2.0 * inter + smooth) / (total + smooth);
}

std::optional<double> iou(const LabelMask& pred, const LabelMask& truth,
                          uint8_t cls) {
  const OverlapStats s = overlap_stats(pred, truth, cls);
  if (s.union_area == 0) return std::nullopt;
  return s.intersection / s.union_area;
}

double mean_iou(const LabelMask& pred, const LabelMask& truth,
                const std::vector<uint8_t>& classes) {
  double sum = 0;
  int counted = 0;
  for (uint8_t cls : classes) {
    if (auto v = iou(pred, truth, cls)) {
      sum += *v;
      ++counted;
    }
  }
  return counted ? sum / counted : 1.0;
}

RegressionStats regression_stats(const std::vector<double>& pred,
                                 const std::vector<double>& truth) {
  if (pred.size() != truth.size()) {
    fail(ErrorKind::ShapeError, "regression_stats length mismatch");
  }
  const size_t n = pred.size();
  if (n < 2) fail(ErrorKind::InsufficientData, "regression needs >= 2 points");

  double mp = 0, mt = 0;
  for (size_t i = 0; i < n; ++i) {
    mp += pred[i];
    mt += truth[i];
  }
  mp /= n;
  mt /= n;

  double ss_res = 0, ss_tot = 0, cov = 0, var_p = 0;
  for (size_t i = 0; i < n; ++i) {
    const double dp = pred[i] - mp, dt = truth[i] - mt;
    ss_res += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    ss_tot += dt * dt;
    cov += dp * dt;
    var_p += dp * dp;
  }
  if (ss_tot == 0) {
    fail(ErrorKind::DegenerateInput, "constant truth: r and R^2 undefined");
  }

  RegressionStats out;
  out.mse = ss_res / n;
  out.r2 = 1.0 - ss_res / ss_tot;
  out.r = var_p == 0 ? 0.0 : cov / std::sqrt(var_p * ss_tot);
  return out;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) {
  return v ? num(*v) : "nan";
}

}  // namespace

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write: " + path);
  out << "image,dice_root,dice_necrosis,iou_root,iou_necrosis,mean_iou,"
         "pred_pct,true_pct\n";
  for (const auto& r : rows) {
    out << r.image << ',' << num(r.dice_root) << ',' << num(r.dice_necrosis)
        << ',' << opt_num(r.iou_root) << ',' << opt_num(r.iou_necrosis) << ','
        << num(r.mean_iou) << ',' << opt_num(r.pred_pct) << ','
        << num(r.true_pct) << '\n';
  }
  if (!out) fail(ErrorKind::IoError, "write failed: " + path);
}

}  // namespace rootscore
