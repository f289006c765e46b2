#include "rootscore/scoring.hpp"

#include <tuple>

#include "rootscore/error.hpp"

namespace rootscore {

namespace {

std::pair<int64_t, int64_t> count_classes(const LabelMask& mask) {
  int64_t nec = 0, root = 0;
  for (uint8_t c : mask.classes) {
    nec += c == kClassNecrosis;
    root += c == kClassRoot;
  }
  return {nec, root};
}

}  // namespace

double necrosis_percentage(const LabelMask& mask) {
  const auto [nec, root] = count_classes(mask);
  if (nec + root == 0) {
    fail(ErrorKind::NoRootDetected, "mask contains no root or necrosis pixels");
  }
  return 100.0 * (double)nec / (double)(nec + root);
}

int severity_score(double percentage) {
  if (!(percentage >= 0.0 && percentage <= 100.0)) {
    fail(ErrorKind::RangeError, "percentage must be within [0,100]");
  }
  if (percentage <= 2.0) return 1;
  if (percentage <= 5.0) return 2;
  if (percentage <= 10.0) return 3;
  if (percentage <= 25.0) return 4;
  return 5;
}

NecrosisScore score_mask(const LabelMask& mask) {
  NecrosisScore s;
  std::tie(s.p_nec, s.p_root) = count_classes(mask);
  if (s.p_nec + s.p_root == 0) {
    fail(ErrorKind::NoRootDetected, "mask contains no root or necrosis pixels");
  }
  s.percentage = 100.0 * (double)s.p_nec / (double)(s.p_nec + s.p_root);
  s.severity = severity_score(s.percentage);
  return s;
}

RgbImage render_overlay(const LabelMask& mask) {
  return render_mask_colors(mask, overlay_palette());
}

nlohmann::json score_json(const std::string& image, const NecrosisScore& s) {
  return {{"image", image},
          {"percentage", s.percentage},
          {"severity", s.severity},
          {"p_nec", s.p_nec},
          {"p_root", s.p_root}};
}

}  // namespace rootscore
