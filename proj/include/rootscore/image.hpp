#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace rootscore {

struct Rgb {
  uint8_t r = 0, g = 0, b = 0;
  auto operator<=>(const Rgb&) const = default;
};

inline constexpr uint8_t kClassBackground = 0;
inline constexpr uint8_t kClassRoot = 1;
inline constexpr uint8_t kClassNecrosis = 2;
inline constexpr int kNumClasses = 3;

// 8-bit interleaved RGB raster, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // width * height * 3

  static RgbImage filled(int w, int h, Rgb color);

  size_t offset(int x, int y) const {
    return (static_cast<size_t>(y) * width + x) * 3;
  }
  Rgb get(int x, int y) const {
    size_t o = offset(x, y);
    return {pixels[o], pixels[o + 1], pixels[o + 2]};
  }
  void set(int x, int y, Rgb c) {
    size_t o = offset(x, y);
    pixels[o] = c.r;
    pixels[o + 1] = c.g;
    pixels[o + 2] = c.b;
  }
};

// Per-pixel class map: 0 = background, 1 = root, 2 = necrosis.
struct LabelMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> classes;  // width * height

  static LabelMask filled(int w, int h, uint8_t cls);

  uint8_t at(int x, int y) const {
    return classes[static_cast<size_t>(y) * width + x];
  }
  void set(int x, int y, uint8_t cls) {
    classes[static_cast<size_t>(y) * width + x] = cls;
  }
};

// Throws DataError unless dimensions are consistent and values are in {0,1,2}.
void validate_mask(const LabelMask& mask, const std::string& context);

using ColorMap = std::map<Rgb, uint8_t>;

struct Palette {
  std::array<Rgb, kNumClasses> color_of_class;
  ColorMap to_color_map() const;
};

// Palette for color-coded mask files. The upstream palette is not recoverable,
// so this project pins background=(0,0,0), root=(0,128,0), necrosis=(128,0,0).
Palette mask_file_palette();

// Overlay rendering palette: root green, necrosis red.
Palette overlay_palette();

// Throws UnmappedColor (with pixel coordinate) on a color missing from the map.
LabelMask mask_from_colors(const RgbImage& img, const ColorMap& palette);

RgbImage render_mask_colors(const LabelMask& mask, const Palette& palette);

// PNG I/O. Images are 8-bit RGB; masks are stored as single-channel 8-bit PNG
// holding raw class indices. read_mask_png also accepts RGB masks coded with
// mask_file_palette().
RgbImage read_image_png(const std::string& path);
void write_image_png(const RgbImage& img, const std::string& path);
LabelMask read_mask_png(const std::string& path);
void write_mask_png(const LabelMask& mask, const std::string& path);

RgbImage resize_bilinear(const RgbImage& img, int out_w, int out_h);
LabelMask resize_nearest(const LabelMask& mask, int out_w, int out_h);

// Image resized bilinearly, mask with nearest-neighbor so class values are
// never interpolated. side >= 8.
std::pair<RgbImage, LabelMask> resize_pair(const RgbImage& img,
                                           const LabelMask& mask, int side);

}  // namespace rootscore
