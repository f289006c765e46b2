#include "rootscore/augment.hpp"

#include <cmath>

#include "rootscore/error.hpp"
#include "rootscore/rng.hpp"

namespace rootscore {

void validate(const AugmentSpec& s) {
  if (s.flip_prob < 0.0 || s.flip_prob > 1.0)
    fail(ErrorKind::ConfigError, "flip_prob must be in [0,1]");
  if (s.max_rotation_deg < 0.0 || s.max_rotation_deg > 180.0)
    fail(ErrorKind::ConfigError, "max_rotation_deg must be in [0,180]");
  if (s.max_shift_frac < 0.0 || s.max_shift_frac > 0.5)
    fail(ErrorKind::ConfigError, "max_shift_frac must be in [0,0.5]");
}

namespace {

// Maps an output-pixel center back to source coordinates:
// unshift, unrotate about the center, unflip.
struct InverseMap {
  double cx, cy, cos_t, sin_t, sx, sy;
  int width;
  bool hflip;

  InverseMap(const GeomTransform& t, int w, int h)
      : cx(w * 0.5),
        cy(h * 0.5),
        cos_t(std::cos(-t.angle_deg * 3.14159265358979323846 / 180.0)),
        sin_t(std::sin(-t.angle_deg * 3.14159265358979323846 / 180.0)),
        sx(t.shift_x),
        sy(t.shift_y),
        width(w),
        hflip(t.hflip) {}

  void operator()(double ox, double oy, double* ix, double* iy) const {
    double qx = ox - sx - cx;
    double qy = oy - sy - cy;
    double rx = qx * cos_t - qy * sin_t + cx;
    double ry = qx * sin_t + qy * cos_t + cy;
    if (hflip) rx = width - rx;
    *ix = rx;
    *iy = ry;
  }
};

}  // namespace

GeomTransform sample_transform(const AugmentSpec& spec, int width, int height,
                               uint64_t seed) {
  validate(spec);
  Rng rng(seed);
  GeomTransform t;
  t.hflip = rng.bernoulli(spec.flip_prob);
  t.angle_deg = rng.uniform(-spec.max_rotation_deg, spec.max_rotation_deg);
  t.shift_x = rng.uniform(-spec.max_shift_frac, spec.max_shift_frac) * width;
  t.shift_y = rng.uniform(-spec.max_shift_frac, spec.max_shift_frac) * height;
  return t;
}

RgbImage warp_image(const RgbImage& img, const GeomTransform& t) {
  RgbImage out = RgbImage::filled(img.width, img.height, {0, 0, 0});
  InverseMap inv(t, img.width, img.height);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      double sx, sy;
      inv(x + 0.5, y + 0.5, &sx, &sy);
      // bilinear over pixel centers; out-of-frame stays black
      double fx = sx - 0.5, fy = sy - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      int y0 = static_cast<int>(std::floor(fy));
      double wx = fx - x0, wy = fy - y0;
      double acc[3] = {0.0, 0.0, 0.0};
      for (int dy = 0; dy <= 1; ++dy) {
        for (int dx = 0; dx <= 1; ++dx) {
          int px = x0 + dx, py = y0 + dy;
          if (px < 0 || px >= img.width || py < 0 || py >= img.height) continue;
          double w = (dx ? wx : 1.0 - wx) * (dy ? wy : 1.0 - wy);
          Rgb c = img.get(px, py);
          acc[0] += w * c.r;
          acc[1] += w * c.g;
          acc[2] += w * c.b;
        }
      }
      auto u8 = [](double v) {
        return static_cast<uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
      };
      out.set(x, y, {u8(acc[0]), u8(acc[1]), u8(acc[2])});
    }
  }
  return out;
}

LabelMask warp_mask(const LabelMask& mask, const GeomTransform& t) {
  LabelMask out = LabelMask::filled(mask.width, mask.height, kClassBackground);
  InverseMap inv(t, mask.width, mask.height);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      double sx, sy;
      inv(x + 0.5, y + 0.5, &sx, &sy);
      int px = static_cast<int>(std::floor(sx));
      int py = static_cast<int>(std::floor(sy));
      if (px < 0 || px >= mask.width || py < 0 || py >= mask.height) continue;
      out.set(x, y, mask.at(px, py));
    }
  }
  return out;
}

std::pair<RgbImage, LabelMask> augment_pair(const RgbImage& img,
                                            const LabelMask& mask,
                                            const AugmentSpec& spec,
                                            uint64_t seed) {
  if (img.width != mask.width || img.height != mask.height) {
    fail(ErrorKind::ShapeError, "image and mask dimensions differ");
  }
  GeomTransform t = sample_transform(spec, img.width, img.height, seed);
  return {warp_image(img, t), warp_mask(mask, t)};
}

}  // namespace rootscore
