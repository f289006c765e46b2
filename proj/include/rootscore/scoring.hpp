#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "rootscore/image.hpp"

namespace rootscore {

struct NecrosisScore {
  int64_t p_nec = 0;   // pixels classified necrosis
  int64_t p_root = 0;  // pixels classified root
  double percentage = 0.0;
  int severity = 1;
};

// 100 * P_nec / (P_nec + P_root); background pixels play no part.
double necrosis_percentage(const LabelMask& mask);  // NoRootDetected if both 0

// 1..5 on half-open intervals: [0,2] -> 1, (2,5] -> 2, (5,10] -> 3,
// (10,25] -> 4, (25,100] -> 5.
int severity_score(double percentage);  // RangeError outside [0,100]

NecrosisScore score_mask(const LabelMask& mask);

// Class 1 -> green (0,255,0), class 2 -> red (255,0,0), background black.
RgbImage render_overlay(const LabelMask& mask);

nlohmann::json score_json(const std::string& image, const NecrosisScore& s);

}  // namespace rootscore
