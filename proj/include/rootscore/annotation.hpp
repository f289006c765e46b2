#pragma once

#include <array>
#include <string>
#include <vector>

#include "rootscore/image.hpp"

namespace rootscore {

enum class PolyLabel : uint8_t { Root = kClassRoot, Necrosis = kClassNecrosis };

struct PolygonAnnotation {
  PolyLabel label = PolyLabel::Root;
  std::vector<std::array<double, 2>> vertices;  // (x, y), length >= 3
};

// Annotation JSON schema:
//   {"image":"<path>","width":W,"height":H,
//    "shapes":[{"label":"root|necrosis","points":[[x,y],...]}]}
struct AnnotationFile {
  std::string image_path;
  int width = 0;
  int height = 0;
  std::vector<PolygonAnnotation> polygons;
};

// Labels are matched case-insensitively. Throws ParseError on malformed
// syntax, UnknownLabel on labels outside {root, necrosis}, DegeneratePolygon
// on polygons with fewer than 3 vertices.
AnnotationFile parse_annotation(const std::string& json_text);
AnnotationFile load_annotation(const std::string& path);

struct RasterWarning {
  size_t polygon_index;
  std::string message;
};

// Even-odd scanline fill sampled at pixel centers (x+0.5, y+0.5). Background
// is painted first, then all root polygons, then all necrosis polygons, so
// lesions overwrite the root they sit on. Polygons entirely outside the image
// are skipped with a warning record.
LabelMask rasterize(const AnnotationFile& ann,
                    std::vector<RasterWarning>* warnings = nullptr);

}  // namespace rootscore
