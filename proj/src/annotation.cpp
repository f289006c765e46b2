#include "rootscore/annotation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rootscore/error.hpp"

namespace rootscore {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

PolyLabel parse_label(const std::string& raw) {
  std::string s = lower(raw);
  if (s == "root") return PolyLabel::Root;
  if (s == "necrosis") return PolyLabel::Necrosis;
  fail(ErrorKind::UnknownLabel, "unknown polygon label '" + raw + "'");
}

}  // namespace

AnnotationFile parse_annotation(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string("annotation JSON: ") + e.what());
  }
  AnnotationFile ann;
  try {
    ann.image_path = j.at("image").get<std::string>();
    ann.width = j.at("width").get<int>();
    ann.height = j.at("height").get<int>();
    for (const auto& shape : j.at("shapes")) {
      PolygonAnnotation poly;
      poly.label = parse_label(shape.at("label").get<std::string>());
      for (const auto& pt : shape.at("points")) {
        if (!pt.is_array() || pt.size() != 2) {
          fail(ErrorKind::ParseError, "polygon point must be [x,y]");
        }
        poly.vertices.push_back({pt[0].get<double>(), pt[1].get<double>()});
      }
      if (poly.vertices.size() < 3) {
        fail(ErrorKind::DegeneratePolygon,
             "polygon has " + std::to_string(poly.vertices.size()) +
                 " vertices, need >= 3");
      }
      ann.polygons.push_back(std::move(poly));
    }
  } catch (const Error&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string("annotation JSON: ") + e.what());
  }
  if (ann.width < 1 || ann.height < 1) {
    fail(ErrorKind::ParseError, "annotation dimensions must be >= 1");
  }
  bool has_root = false, has_necrosis = false;
  for (const auto& p : ann.polygons) {
    has_root |= p.label == PolyLabel::Root;
    has_necrosis |= p.label == PolyLabel::Necrosis;
  }
  if (has_necrosis && !has_root) {
    fail(ErrorKind::ParseError, "necrosis polygon present without any root polygon");
  }
  return ann;
}

AnnotationFile load_annotation(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open annotation file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_annotation(ss.str());
}

namespace {

// Paints one polygon onto the mask with an even-odd scanline fill. A pixel is
// covered iff its center lies inside; crossings use the half-open rule
// min(y) <= sy < max(y) so vertices on a scanline are counted once.
void fill_polygon(LabelMask& mask, const PolygonAnnotation& poly, uint8_t cls) {
  const auto& v = poly.vertices;
  const size_t n = v.size();
  double min_y = v[0][1], max_y = v[0][1];
  for (const auto& p : v) {
    min_y = std::min(min_y, p[1]);
    max_y = std::max(max_y, p[1]);
  }
  int y_begin = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
  int y_end = std::min(mask.height - 1, static_cast<int>(std::ceil(max_y)));
  std::vector<double> xs;
  for (int y = y_begin; y <= y_end; ++y) {
    double sy = y + 0.5;
    xs.clear();
    for (size_t i = 0; i < n; ++i) {
      const auto& p = v[i];
      const auto& q = v[(i + 1) % n];
      if (p[1] == q[1]) continue;
      double lo = std::min(p[1], q[1]);
      double hi = std::max(p[1], q[1]);
      if (sy < lo || sy >= hi) continue;
      double t = (sy - p[1]) / (q[1] - p[1]);
      xs.push_back(p[0] + t * (q[0] - p[0]));
    }
    std::sort(xs.begin(), xs.end());
    for (size_t i = 0; i + 1 < xs.size(); i += 2) {
      // span [a,b): pixel centers x+0.5 with a <= x+0.5 < b
      int x_first = static_cast<int>(std::ceil(xs[i] - 0.5));
      int x_last = static_cast<int>(std::ceil(xs[i + 1] - 0.5)) - 1;
      x_first = std::max(x_first, 0);
      x_last = std::min(x_last, mask.width - 1);
      for (int x = x_first; x <= x_last; ++x) mask.set(x, y, cls);
    }
  }
}

bool outside_image(const PolygonAnnotation& poly, int w, int h) {
  double min_x = poly.vertices[0][0], max_x = min_x;
  double min_y = poly.vertices[0][1], max_y = min_y;
  for (const auto& p : poly.vertices) {
    min_x = std::min(min_x, p[0]);
    max_x = std::max(max_x, p[0]);
    min_y = std::min(min_y, p[1]);
    max_y = std::max(max_y, p[1]);
  }
  return max_x <= 0.0 || min_x >= w || max_y <= 0.0 || min_y >= h;
}

}  // namespace

LabelMask rasterize(const AnnotationFile& ann, std::vector<RasterWarning>* warnings) {
  if (ann.width < 1 || ann.height < 1) {
    fail(ErrorKind::ConfigError, "annotation dimensions must be >= 1");
  }
  LabelMask mask = LabelMask::filled(ann.width, ann.height, kClassBackground);
  for (PolyLabel pass : {PolyLabel::Root, PolyLabel::Necrosis}) {
    for (size_t i = 0; i < ann.polygons.size(); ++i) {
      const auto& poly = ann.polygons[i];
      if (poly.label != pass) continue;
      if (outside_image(poly, ann.width, ann.height)) {
        if (warnings) {
          warnings->push_back({i, "polygon entirely outside image, ignored"});
        }
        continue;
      }
      fill_polygon(mask, poly, static_cast<uint8_t>(poly.label));
    }
  }
  return mask;
}

}  // namespace rootscore
