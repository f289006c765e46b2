#include "rootscore/image.hpp"

#include <png.h>

#include <cmath>
#include <cstring>

#include "rootscore/error.hpp"

namespace rootscore {

RgbImage RgbImage::filled(int w, int h, Rgb color) {
  if (w < 1 || h < 1) fail(ErrorKind::ConfigError, "image dimensions must be >= 1");
  RgbImage img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<size_t>(w) * h * 3);
  for (size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = color.r;
    img.pixels[i + 1] = color.g;
    img.pixels[i + 2] = color.b;
  }
  return img;
}

LabelMask LabelMask::filled(int w, int h, uint8_t cls) {
  if (w < 1 || h < 1) fail(ErrorKind::ConfigError, "mask dimensions must be >= 1");
  LabelMask m;
  m.width = w;
  m.height = h;
  m.classes.assign(static_cast<size_t>(w) * h, cls);
  return m;
}

void validate_mask(const LabelMask& mask, const std::string& context) {
  if (mask.width < 1 || mask.height < 1 ||
      mask.classes.size() != static_cast<size_t>(mask.width) * mask.height) {
    fail(ErrorKind::DataError, context + ": inconsistent mask dimensions");
  }
  for (uint8_t v : mask.classes) {
    if (v > 2) fail(ErrorKind::DataError, context + ": mask value out of {0,1,2}");
  }
}

ColorMap Palette::to_color_map() const {
  ColorMap m;
  for (int c = 0; c < kNumClasses; ++c) m[color_of_class[c]] = static_cast<uint8_t>(c);
  return m;
}

Palette mask_file_palette() {
  return Palette{{Rgb{0, 0, 0}, Rgb{0, 128, 0}, Rgb{128, 0, 0}}};
}

Palette overlay_palette() {
  return Palette{{Rgb{0, 0, 0}, Rgb{0, 255, 0}, Rgb{255, 0, 0}}};
}

LabelMask mask_from_colors(const RgbImage& img, const ColorMap& palette) {
  LabelMask mask = LabelMask::filled(img.width, img.height, 0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      Rgb c = img.get(x, y);
      auto it = palette.find(c);
      if (it == palette.end()) {
        fail(ErrorKind::UnmappedColor,
             "color (" + std::to_string(c.r) + "," + std::to_string(c.g) + "," +
                 std::to_string(c.b) + ") at pixel (" + std::to_string(x) + "," +
                 std::to_string(y) + ") not in palette");
      }
      mask.set(x, y, it->second);
    }
  }
  return mask;
}

RgbImage render_mask_colors(const LabelMask& mask, const Palette& palette) {
  RgbImage img = RgbImage::filled(mask.width, mask.height, palette.color_of_class[0]);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      img.set(x, y, palette.color_of_class[mask.at(x, y)]);
  return img;
}

namespace {

std::vector<uint8_t> read_png_raw(const std::string& path, int format, int* w, int* h,
                                  int channels) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    fail(ErrorKind::IoError, "cannot read PNG '" + path + "': " + image.message);
  }
  image.format = static_cast<png_uint_32>(format);
  std::vector<uint8_t> buf(static_cast<size_t>(PNG_IMAGE_SIZE(image)));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorKind::IoError, "cannot decode PNG '" + path + "': " + msg);
  }
  *w = static_cast<int>(image.width);
  *h = static_cast<int>(image.height);
  if (buf.size() != static_cast<size_t>(*w) * *h * channels) {
    fail(ErrorKind::IoError, "unexpected PNG buffer size for '" + path + "'");
  }
  return buf;
}

void write_png_raw(const std::string& path, const uint8_t* data, int w, int h,
                   int format) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = static_cast<png_uint_32>(format);
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
    fail(ErrorKind::IoError, "cannot write PNG '" + path + "': " + image.message);
  }
}

}  // namespace

RgbImage read_image_png(const std::string& path) {
  RgbImage img;
  img.pixels = read_png_raw(path, PNG_FORMAT_RGB, &img.width, &img.height, 3);
  return img;
}

void write_image_png(const RgbImage& img, const std::string& path) {
  write_png_raw(path, img.pixels.data(), img.width, img.height, PNG_FORMAT_RGB);
}

LabelMask read_mask_png(const std::string& path) {
  // Decode as RGB; index masks arrive as gray triples (v,v,v) with v <= 2,
  // anything else goes through the color palette.
  int w = 0, h = 0;
  std::vector<uint8_t> rgb = read_png_raw(path, PNG_FORMAT_RGB, &w, &h, 3);
  bool index_coded = true;
  for (size_t i = 0; i < rgb.size(); i += 3) {
    if (rgb[i] > 2 || rgb[i] != rgb[i + 1] || rgb[i] != rgb[i + 2]) {
      index_coded = false;
      break;
    }
  }
  LabelMask mask = LabelMask::filled(w, h, 0);
  if (index_coded) {
    for (size_t i = 0; i < mask.classes.size(); ++i) mask.classes[i] = rgb[i * 3];
    return mask;
  }
  RgbImage img;
  img.width = w;
  img.height = h;
  img.pixels = std::move(rgb);
  return mask_from_colors(img, mask_file_palette().to_color_map());
}

void write_mask_png(const LabelMask& mask, const std::string& path) {
  validate_mask(mask, "write_mask_png");
  write_png_raw(path, mask.classes.data(), mask.width, mask.height, PNG_FORMAT_GRAY);
}

namespace {

// align-centers source coordinate: src = (dst + 0.5) * scale - 0.5
inline double src_coord(int dst, double scale) { return (dst + 0.5) * scale - 0.5; }

}  // namespace

RgbImage resize_bilinear(const RgbImage& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) fail(ErrorKind::ConfigError, "resize target must be >= 1");
  if (out_w == img.width && out_h == img.height) return img;
  RgbImage out = RgbImage::filled(out_w, out_h, {0, 0, 0});
  double sx = static_cast<double>(img.width) / out_w;
  double sy = static_cast<double>(img.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    double fy = src_coord(y, sy);
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y0c = std::min(std::max(y0, 0), img.height - 1);
    int y1c = std::min(std::max(y0 + 1, 0), img.height - 1);
    for (int x = 0; x < out_w; ++x) {
      double fx = src_coord(x, sx);
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x0c = std::min(std::max(x0, 0), img.width - 1);
      int x1c = std::min(std::max(x0 + 1, 0), img.width - 1);
      Rgb p00 = img.get(x0c, y0c), p10 = img.get(x1c, y0c);
      Rgb p01 = img.get(x0c, y1c), p11 = img.get(x1c, y1c);
      auto lerp2 = [&](uint8_t a, uint8_t b, uint8_t c, uint8_t d) {
        double top = a + (b - a) * wx;
        double bot = c + (d - c) * wx;
        double v = top + (bot - top) * wy;
        return static_cast<uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
      };
      out.set(x, y,
              {lerp2(p00.r, p10.r, p01.r, p11.r), lerp2(p00.g, p10.g, p01.g, p11.g),
               lerp2(p00.b, p10.b, p01.b, p11.b)});
    }
  }
  return out;
}

LabelMask resize_nearest(const LabelMask& mask, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) fail(ErrorKind::ConfigError, "resize target must be >= 1");
  if (out_w == mask.width && out_h == mask.height) return mask;
  LabelMask out = LabelMask::filled(out_w, out_h, 0);
  double sx = static_cast<double>(mask.width) / out_w;
  double sy = static_cast<double>(mask.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    int iy = std::min(std::max(static_cast<int>(std::floor((y + 0.5) * sy)), 0),
                      mask.height - 1);
    for (int x = 0; x < out_w; ++x) {
      int ix = std::min(std::max(static_cast<int>(std::floor((x + 0.5) * sx)), 0),
                        mask.width - 1);
      out.set(x, y, mask.at(ix, iy));
    }
  }
  return out;
}

std::pair<RgbImage, LabelMask> resize_pair(const RgbImage& img, const LabelMask& mask,
                                           int side) {
  if (side < 8) fail(ErrorKind::ConfigError, "resize side must be >= 8");
  if (img.width != mask.width || img.height != mask.height) {
    fail(ErrorKind::ShapeError, "image and mask dimensions differ");
  }
  return {resize_bilinear(img, side, side), resize_nearest(mask, side, side)};
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorKind::UnmappedColor: return "UnmappedColor";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::InsufficientBatch: return "InsufficientBatch";
    case ErrorKind::MissingGradient: return "MissingGradient";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::RangeError: return "RangeError";
    case ErrorKind::NoRootDetected: return "NoRootDetected";
    case ErrorKind::DegenerateHistogram: return "DegenerateHistogram";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::DataError: return "DataError";
    case ErrorKind::DivergenceError: return "DivergenceError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace rootscore
