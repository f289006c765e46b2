#include "rootscore/synth.hpp"

#include <algorithm>
#include <cmath>

#include "rootscore/error.hpp"
#include "rootscore/rng.hpp"

namespace rootscore {

namespace {

double clamped_radius(const DiscSpec& spec) {
  double r = spec.disc_radius;
  r = std::min(r, spec.center_x);
  r = std::min(r, spec.center_y);
  r = std::min(r, spec.image_side - spec.center_x);
  r = std::min(r, spec.image_side - spec.center_y);
  return r;
}

inline uint8_t clip_u8(double v) {
  return static_cast<uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
}

}  // namespace

std::pair<RgbImage, LabelMask> generate_disc(const DiscSpec& spec, uint64_t seed) {
  if (spec.image_side < 8) fail(ErrorKind::ConfigError, "image_side must be >= 8");
  if (spec.noise_stddev < 0.0 || spec.noise_stddev > 32.0) {
    fail(ErrorKind::ConfigError, "noise_stddev must be in [0,32]");
  }
  const double R = clamped_radius(spec);
  if (R < 1.0) fail(ErrorKind::ConfigError, "disc radius too small after clamping");
  for (const auto& l : spec.lesions) {
    if (l.radius < 1.0) fail(ErrorKind::ConfigError, "lesion radius must be >= 1");
    double d = std::hypot(l.cx - spec.center_x, l.cy - spec.center_y);
    if (d >= R + l.radius) {
      fail(ErrorKind::ConfigError, "lesion circle does not intersect the disc");
    }
  }

  const int side = spec.image_side;
  RgbImage img = RgbImage::filled(side, side, spec.background_color);
  LabelMask mask = LabelMask::filled(side, side, kClassBackground);

  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      double px = x + 0.5, py = y + 0.5;
      double dd = (px - spec.center_x) * (px - spec.center_x) +
                  (py - spec.center_y) * (py - spec.center_y);
      if (dd > R * R) continue;
      uint8_t cls = kClassRoot;
      Rgb color = spec.flesh_color;
      for (const auto& l : spec.lesions) {  // later lesions paint over earlier
        double ld = (px - l.cx) * (px - l.cx) + (py - l.cy) * (py - l.cy);
        if (ld <= l.radius * l.radius) {
          cls = kClassNecrosis;
          color = l.color;
        }
      }
      mask.set(x, y, cls);
      img.set(x, y, color);
    }
  }

  if (spec.noise_stddev > 0.0) {
    Rng rng(mix_seed(seed, 0x6e6f697365ull));  // noise stream
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        double n = rng.normal() * spec.noise_stddev;
        Rgb c = img.get(x, y);
        img.set(x, y, {clip_u8(c.r + n), clip_u8(c.g + n), clip_u8(c.b + n)});
      }
    }
  }
  return {std::move(img), std::move(mask)};
}

const std::vector<std::string>& category_tags() {
  static const std::vector<std::string> tags = {"many", "few",    "large",
                                                "small", "center", "edge"};
  return tags;
}

namespace {

Rgb jitter(Rng& rng, Rgb base, int amount) {
  auto j = [&](uint8_t v) {
    return clip_u8(v + rng.range_int(-amount, amount));
  };
  return {j(base.r), j(base.g), j(base.b)};
}

// Places count non-overlapping lesions with radii in [r_lo, r_hi]*R, centers
// at most max_center_frac*R from the disc center. Shrinks radii if placement
// keeps failing so the requested count is always reached.
std::vector<LesionSpec> place_disjoint(Rng& rng, const DiscSpec& d, double R,
                                       int count, double r_lo, double r_hi,
                                       double max_center_frac, Rgb color) {
  std::vector<LesionSpec> out;
  double shrink = 1.0;
  for (int attempt = 0; attempt < 64 && static_cast<int>(out.size()) < count;
       ++attempt) {
    out.clear();
    for (int i = 0; i < count; ++i) {
      bool placed = false;
      for (int t = 0; t < 200 && !placed; ++t) {
        double r = std::max(1.5, rng.uniform(r_lo, r_hi) * R * shrink);
        double ang = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        double dist = rng.uniform(0.0, std::max(0.0, max_center_frac * R - r));
        double cx = d.center_x + dist * std::cos(ang);
        double cy = d.center_y + dist * std::sin(ang);
        bool ok = true;
        for (const auto& l : out) {
          if (std::hypot(cx - l.cx, cy - l.cy) < r + l.radius + 2.0) {
            ok = false;
            break;
          }
        }
        if (ok) {
          out.push_back({cx, cy, r, color, LesionPlacement::Center});
          placed = true;
        }
      }
      if (!placed) break;
    }
    shrink *= 0.85;
  }
  return out;
}

SynthSample make_sample(int cat, int index, uint64_t seed, int image_side) {
  Rng rng(mix_seed(seed, static_cast<uint64_t>(cat), static_cast<uint64_t>(index)));
  DiscSpec d;
  d.image_side = image_side;
  d.center_x = image_side * rng.uniform(0.47, 0.53);
  d.center_y = image_side * rng.uniform(0.47, 0.53);
  d.disc_radius = image_side * rng.uniform(0.35, 0.44);
  d.flesh_color = jitter(rng, {235, 225, 190}, 15);
  d.background_color = jitter(rng, {40, 40, 46}, 5);
  d.noise_stddev = 8.0;
  const double R = clamped_radius(d);
  Rgb lesion_color = jitter(rng, {120, 80, 40}, 15);

  switch (cat) {
    case 0: {  // many: >= 5 disjoint lesions
      int count = rng.range_int(5, 7);
      d.lesions = place_disjoint(rng, d, R, count, 0.08, 0.14, 0.85, lesion_color);
      break;
    }
    case 1: {  // few: 1-2 lesions
      int count = rng.range_int(1, 2);
      d.lesions = place_disjoint(rng, d, R, count, 0.12, 0.20, 0.80, lesion_color);
      break;
    }
    case 2: {  // large: r >= 0.4 R
      double r = rng.uniform(0.40, 0.55) * R;
      double dist = rng.uniform(0.0, std::max(0.0, R - r));
      double ang = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      d.lesions.push_back({d.center_x + dist * std::cos(ang),
                           d.center_y + dist * std::sin(ang), r, lesion_color,
                           LesionPlacement::Center});
      break;
    }
    case 3: {  // small: r <= 0.1 R
      double r = std::max(1.5, rng.uniform(0.05, 0.10) * R);
      double dist = rng.uniform(0.0, std::max(0.0, 0.8 * R - r));
      double ang = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      d.lesions.push_back({d.center_x + dist * std::cos(ang),
                           d.center_y + dist * std::sin(ang), r, lesion_color,
                           LesionPlacement::Center});
      break;
    }
    case 4: {  // center-placed
      double r = rng.uniform(0.15, 0.25) * R;
      d.lesions.push_back({d.center_x + rng.uniform(-0.05, 0.05) * R,
                           d.center_y + rng.uniform(-0.05, 0.05) * R, r,
                           lesion_color, LesionPlacement::Center});
      break;
    }
    default: {  // edge-placed, may spill past the disc boundary
      int count = rng.range_int(1, 2);
      for (int i = 0; i < count; ++i) {
        double r = rng.uniform(0.15, 0.25) * R;
        double dist = rng.uniform(R - 0.9 * r, R - 0.2 * r);
        double ang = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        d.lesions.push_back({d.center_x + dist * std::cos(ang),
                             d.center_y + dist * std::sin(ang), r, lesion_color,
                             LesionPlacement::Edge});
      }
      break;
    }
  }

  auto [img, mask] = generate_disc(d, mix_seed(seed, 0x646973ull + cat, index));
  return {std::move(img), std::move(mask), category_tags()[cat]};
}

}  // namespace

std::vector<SynthSample> sample_category_suite(uint64_t seed, int per_category,
                                               int image_side) {
  if (per_category < 1) fail(ErrorKind::ConfigError, "per_category must be >= 1");
  std::vector<SynthSample> out;
  out.reserve(static_cast<size_t>(per_category) * kNumCategories);
  for (int k = 0; k < per_category; ++k) {
    for (int cat = 0; cat < kNumCategories; ++cat) {
      out.push_back(make_sample(cat, k, seed, image_side));
    }
  }
  return out;
}

}  // namespace rootscore
