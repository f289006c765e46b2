#include "rootscore/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rootscore/error.hpp"
#include "rootscore/scoring.hpp"

namespace rootscore {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Runs one scorer, mapping NoRootDetected to a soft failure and annotating
// anything else with the sample path before rethrowing.
template <typename Fn>
MethodResult run_method(const std::string& image_path, const LabelMask& truth,
                        Fn&& make_mask) {
  MethodResult r;
  LabelMask mask;
  try {
    mask = make_mask();
    NecrosisScore s = score_mask(mask);
    r.pct = s.percentage;
    r.severity = s.severity;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NoRootDetected) {
      r.ok = false;
      r.error = to_string(e.kind());
      return r;
    }
    fail(e.kind(), std::string(e.what()) + " [sample " + image_path + "]");
  }
  if (mask.width != truth.width || mask.height != truth.height)
    fail(ErrorKind::ShapeError,
         "prediction size mismatch for sample " + image_path);
  r.ok = true;
  r.dice_root = dice_coefficient(mask, truth, kClassRoot);
  r.dice_necrosis = dice_coefficient(mask, truth, kClassNecrosis);
  r.mean_iou = mean_iou(mask, truth);
  return r;
}

MethodAggregate aggregate(const std::vector<EvalRow>& rows,
                          MethodResult EvalRow::*method) {
  MethodAggregate agg;
  std::vector<double> pred, truth;
  for (const auto& row : rows) {
    if (!row.truth_ok) continue;
    const MethodResult& m = row.*method;
    if (!m.ok) {
      ++agg.failures;
      continue;
    }
    pred.push_back(m.pct);
    truth.push_back(row.true_pct);
    agg.mean_dice_root += m.dice_root;
    agg.mean_dice_necrosis += m.dice_necrosis;
    agg.mean_iou += m.mean_iou;
    ++agg.n;
  }
  if (agg.n > 0) {
    agg.mean_dice_root /= agg.n;
    agg.mean_dice_necrosis /= agg.n;
    agg.mean_iou /= agg.n;
  }
  try {
    agg.stats = regression_stats(pred, truth);
    agg.stats_ok = true;
  } catch (const Error& e) {
    agg.stats_ok = false;
    agg.stats_error = to_string(e.kind());
  }
  return agg;
}

nlohmann::json method_json(const MethodResult& m) {
  if (!m.ok) return {{"ok", false}, {"error", m.error}};
  return {{"ok", true},
          {"pct", m.pct},
          {"severity", m.severity},
          {"dice_root", m.dice_root},
          {"dice_necrosis", m.dice_necrosis},
          {"mean_iou", m.mean_iou}};
}

nlohmann::json aggregate_json(const MethodAggregate& a) {
  nlohmann::json j{{"n", a.n},
                   {"failures", a.failures},
                   {"mean_dice_root", a.mean_dice_root},
                   {"mean_dice_necrosis", a.mean_dice_necrosis},
                   {"mean_iou", a.mean_iou}};
  if (a.stats_ok) {
    j["mse"] = a.stats.mse;
    j["r2"] = a.stats.r2;
    j["r"] = a.stats.r;
  } else {
    j["stats_error"] = a.stats_error;
  }
  return j;
}

MetricsRow metrics_row(const EvalRow& row, const MethodResult& m,
                       const LabelMask* pred, const LabelMask* truth) {
  MetricsRow out;
  out.image = row.image;
  out.true_pct = row.true_pct;
  if (!m.ok) return out;  // pred_pct stays empty, dice fields zero
  out.pred_pct = m.pct;
  out.dice_root = m.dice_root;
  out.dice_necrosis = m.dice_necrosis;
  out.mean_iou = m.mean_iou;
  if (pred && truth) {
    out.iou_root = iou(*pred, *truth, kClassRoot);
    out.iou_necrosis = iou(*pred, *truth, kClassNecrosis);
  }
  return out;
}

}  // namespace

EvalReport evaluate_dataset(const std::vector<ManifestEntry>& entries,
                            const MaskPredictor& predictor,
                            const std::string& out_dir,
                            const BaselineParams& bp) {
  std::filesystem::create_directories(out_dir);

  std::vector<ManifestEntry> sorted = entries;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ManifestEntry& a, const ManifestEntry& b) {
                     return a.image < b.image;
                   });

  EvalReport report;
  std::vector<MetricsRow> model_rows, baseline_rows;
  for (const auto& entry : sorted) {
    Sample sample = load_sample(entry);
    EvalRow row;
    row.image = entry.image;
    try {
      NecrosisScore truth_score = score_mask(sample.mask);
      row.true_pct = truth_score.percentage;
      row.true_severity = truth_score.severity;
      row.truth_ok = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoRootDetected)
        fail(e.kind(), std::string(e.what()) + " [sample " + entry.image + "]");
      row.truth_ok = false;
      row.truth_error = to_string(e.kind());
      ++report.truth_failures;
    }
    if (row.truth_ok) {
      LabelMask model_mask, baseline_mask;
      row.model = run_method(entry.image, sample.mask, [&] {
        model_mask = predictor(sample.image);
        return model_mask;
      });
      row.baseline = run_method(entry.image, sample.mask, [&] {
        baseline_mask = baseline_score(sample.image, bp).mask;
        return baseline_mask;
      });
      model_rows.push_back(metrics_row(row, row.model,
                                       row.model.ok ? &model_mask : nullptr,
                                       &sample.mask));
      baseline_rows.push_back(
          metrics_row(row, row.baseline,
                      row.baseline.ok ? &baseline_mask : nullptr, &sample.mask));
    }
    report.rows.push_back(std::move(row));
  }

  report.model = aggregate(report.rows, &EvalRow::model);
  report.baseline = aggregate(report.rows, &EvalRow::baseline);

  write_metrics_csv(out_dir + "/metrics_model.csv", model_rows);
  write_metrics_csv(out_dir + "/metrics_baseline.csv", baseline_rows);

  {
    std::ofstream out(out_dir + "/scatter.csv", std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot write " + out_dir + "/scatter.csv");
    out << "image,true_pct,model_pct,baseline_pct\n";
    for (const auto& row : report.rows) {
      if (!row.truth_ok) continue;
      out << row.image << ',' << num(row.true_pct) << ','
          << (row.model.ok ? num(row.model.pct) : "nan") << ','
          << (row.baseline.ok ? num(row.baseline.pct) : "nan") << '\n';
    }
  }
  {
    std::ofstream out(out_dir + "/report.json", std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot write " + out_dir + "/report.json");
    out << eval_report_json(report).dump(2) << '\n';
  }
  return report;
}

EvalReport evaluate_with_model(const std::vector<ManifestEntry>& entries,
                               const UnetModel& model,
                               const std::string& out_dir,
                               const BaselineParams& bp) {
  return evaluate_dataset(
      entries, [&](const RgbImage& img) { return predict_mask(model, img); },
      out_dir, bp);
}

nlohmann::json eval_report_json(const EvalReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json j{{"image", row.image}};
    if (row.truth_ok) {
      j["true_pct"] = row.true_pct;
      j["true_severity"] = row.true_severity;
      j["model"] = method_json(row.model);
      j["baseline"] = method_json(row.baseline);
    } else {
      j["truth_error"] = row.truth_error;
    }
    rows.push_back(std::move(j));
  }
  return {{"per_image", std::move(rows)},
          {"aggregate",
           {{"model", aggregate_json(report.model)},
            {"baseline", aggregate_json(report.baseline)}}},
          {"truth_failures", report.truth_failures}};
}

}  // namespace rootscore
