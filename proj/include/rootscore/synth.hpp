#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rootscore/image.hpp"

namespace rootscore {

enum class LesionPlacement { Center, Edge };

struct LesionSpec {
  double cx = 0.0, cy = 0.0;  // pixels
  double radius = 1.0;        // >= 1, circle must intersect the disc
  Rgb color{120, 80, 40};
  LesionPlacement placement = LesionPlacement::Center;
};

struct DiscSpec {
  int image_side = 128;
  double center_x = 64.0, center_y = 64.0;
  double disc_radius = 48.0;  // clamped so the disc stays inside the image
  Rgb flesh_color{235, 225, 190};
  Rgb background_color{40, 40, 46};
  std::vector<LesionSpec> lesions;
  double noise_stddev = 8.0;  // 0..32, u8 intensity scale
};

// Deterministic draw of a root disc plus exact mask. Mask: 2 inside any
// lesion∩disc, 1 on remaining disc pixels, 0 outside; membership tested at
// pixel centers. Noise is i.i.d. Gaussian on intensity, seeded, applied to
// the image only; masks stay noise-free.
std::pair<RgbImage, LabelMask> generate_disc(const DiscSpec& spec, uint64_t seed);

struct SynthSample {
  RgbImage image;
  LabelMask mask;
  std::string category;  // many|few|large|small|center|edge
};

inline constexpr int kNumCategories = 6;
const std::vector<std::string>& category_tags();

// per_category samples for each lesion-expression category, emitted
// round-robin across categories, deterministic under seed.
std::vector<SynthSample> sample_category_suite(uint64_t seed, int per_category,
                                               int image_side = 128);

}  // namespace rootscore
