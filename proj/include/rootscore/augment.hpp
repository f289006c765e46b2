#pragma once

#include <cstdint>
#include <utility>

#include "rootscore/image.hpp"

namespace rootscore {

struct AugmentSpec {
  double flip_prob = 0.5;
  double max_rotation_deg = 25.0;
  double max_shift_frac = 0.1;  // of the image side, per axis
};

// ConfigError when a field is outside its documented range.
void validate(const AugmentSpec& s);

// Sampled geometric transform, applied as: horizontal flip, then rotation
// about the image center, then translation. Positive angles rotate content
// clockwise in image coordinates (y down).
struct GeomTransform {
  bool hflip = false;
  double angle_deg = 0.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;
};

GeomTransform sample_transform(const AugmentSpec& spec, int width, int height,
                               uint64_t seed);

// Inverse-mapped warps. Image uses bilinear resampling with black fill;
// mask uses nearest-neighbor with class-0 fill.
RgbImage warp_image(const RgbImage& img, const GeomTransform& t);
LabelMask warp_mask(const LabelMask& mask, const GeomTransform& t);

// Applies one transform, sampled from spec under seed, to both. Throws
// ShapeError if dimensions differ, ConfigError on invalid spec ranges.
std::pair<RgbImage, LabelMask> augment_pair(const RgbImage& img,
                                            const LabelMask& mask,
                                            const AugmentSpec& spec,
                                            uint64_t seed);

}  // namespace rootscore
