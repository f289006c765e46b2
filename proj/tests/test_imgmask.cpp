#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "rootscore/annotation.hpp"
#include "rootscore/error.hpp"
#include "rootscore/image.hpp"
#include "rootscore/rng.hpp"

using namespace rootscore;

namespace {

// Brute-force even-odd test at one pixel center: cast a ray to the right and
// count strict crossings, treating each edge's y-range as half-open so shared
// vertices are counted once.
bool center_inside(const PolygonAnnotation& poly, double px, double py) {
  const auto& v = poly.vertices;
  int crossings = 0;
  for (size_t i = 0; i < v.size(); ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % v.size()];
    if ((a[1] > py) == (b[1] > py)) continue;
    const double x_int = a[0] + (py - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
    if (px < x_int) ++crossings;
  }
  return crossings % 2 == 1;
}

LabelMask brute_force_mask(const AnnotationFile& ann) {
  LabelMask mask = LabelMask::filled(ann.width, ann.height, kClassBackground);
  for (PolyLabel pass : {PolyLabel::Root, PolyLabel::Necrosis}) {
    for (const auto& poly : ann.polygons) {
      if (poly.label != pass) continue;
      for (int y = 0; y < ann.height; ++y) {
        for (int x = 0; x < ann.width; ++x) {
          if (center_inside(poly, x + 0.5, y + 0.5)) {
            mask.set(x, y, static_cast<uint8_t>(poly.label));
          }
        }
      }
    }
  }
  return mask;
}

// Star-shaped polygons are always simple: sorted angles, random radii.
PolygonAnnotation random_star(Rng& rng, PolyLabel label, double cx, double cy,
                              double r_max) {
  PolygonAnnotation poly;
  poly.label = label;
  const int k = rng.range_int(3, 12);
  std::vector<double> angles(k);
  for (auto& a : angles) a = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  std::sort(angles.begin(), angles.end());
  for (int i = 0; i < k; ++i) {
    const double r = rng.uniform(1.0, r_max);
    poly.vertices.push_back({cx + r * std::cos(angles[i]),
                             cy + r * std::sin(angles[i])});
  }
  if (rng.bernoulli(0.5)) {
    std::reverse(poly.vertices.begin(), poly.vertices.end());
  }
  return poly;
}

}  // namespace

TEST_CASE("rasterize matches brute-force point-in-polygon on random polygons") {
  Rng rng(2024);
  int polys_checked = 0;
  while (polys_checked < 210) {
    AnnotationFile ann;
    ann.image_path = "synthetic";
    ann.width = rng.range_int(8, 64);
    ann.height = rng.range_int(8, 64);
    const int n_root = rng.range_int(1, 3);
    const int n_nec = rng.range_int(0, 2);
    for (int i = 0; i < n_root + n_nec; ++i) {
      // centers may fall outside the raster so clipping gets exercised
      const double cx = rng.uniform(-10.0, ann.width + 10.0);
      const double cy = rng.uniform(-10.0, ann.height + 10.0);
      ann.polygons.push_back(random_star(
          rng, i < n_root ? PolyLabel::Root : PolyLabel::Necrosis, cx, cy,
          rng.uniform(2.0, 28.0)));
    }
    polys_checked += static_cast<int>(ann.polygons.size());
    const LabelMask got = rasterize(ann);
    const LabelMask want = brute_force_mask(ann);
    REQUIRE(got.width == want.width);
    REQUIRE(got.height == want.height);
    CHECK(got.classes == want.classes);
  }
}

TEST_CASE("rasterize paints necrosis over root and is orientation-free") {
  AnnotationFile ann;
  ann.width = 16;
  ann.height = 16;
  PolygonAnnotation root;
  root.label = PolyLabel::Root;
  root.vertices = {{1, 1}, {15, 1}, {15, 15}, {1, 15}};
  PolygonAnnotation nec;
  nec.label = PolyLabel::Necrosis;
  nec.vertices = {{4, 4}, {8, 4}, {8, 8}, {4, 8}};
  ann.polygons = {nec, root};  // listed lesion-first on purpose
  const LabelMask m = rasterize(ann);
  CHECK(m.at(2, 2) == kClassRoot);
  CHECK(m.at(5, 5) == kClassNecrosis);
  CHECK(m.at(0, 0) == kClassBackground);

  std::reverse(ann.polygons[0].vertices.begin(), ann.polygons[0].vertices.end());
  std::reverse(ann.polygons[1].vertices.begin(), ann.polygons[1].vertices.end());
  CHECK(rasterize(ann).classes == m.classes);
}

TEST_CASE("rasterize warns about polygons entirely outside the image") {
  AnnotationFile ann;
  ann.width = 8;
  ann.height = 8;
  PolygonAnnotation in_poly;
  in_poly.label = PolyLabel::Root;
  in_poly.vertices = {{1, 1}, {6, 1}, {6, 6}};
  PolygonAnnotation out_poly = in_poly;
  out_poly.vertices = {{20, 20}, {30, 20}, {30, 30}};
  ann.polygons = {in_poly, out_poly};
  std::vector<RasterWarning> warnings;
  const LabelMask m = rasterize(ann, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].polygon_index == 1);
  CHECK(m.at(2, 2) == kClassRoot);
}

TEST_CASE("annotation parsing rejects bad inputs with the right kinds") {
  auto kind_of = [](const std::string& text) {
    try {
      parse_annotation(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::IoError;  // sentinel for "did not throw"
  };
  CHECK(kind_of("{not json") == ErrorKind::ParseError);
  CHECK(kind_of(R"({"image":"a","width":4,"height":4,"shapes":[
      {"label":"stem","points":[[0,0],[1,0],[1,1]]}]})") ==
        ErrorKind::UnknownLabel);
  CHECK(kind_of(R"({"image":"a","width":4,"height":4,"shapes":[
      {"label":"root","points":[[0,0],[1,0]]}]})") ==
        ErrorKind::DegeneratePolygon);
  CHECK(kind_of(R"({"image":"a","width":4,"height":4,"shapes":[
      {"label":"necrosis","points":[[0,0],[1,0],[1,1]]}]})") ==
        ErrorKind::ParseError);
  CHECK(kind_of(R"({"image":"a","width":0,"height":4,"shapes":[]})") ==
        ErrorKind::ParseError);

  // well-formed file parses, labels case-insensitively
  const AnnotationFile ann = parse_annotation(
      R"({"image":"a.png","width":8,"height":6,"shapes":[
          {"label":"Root","points":[[0,0],[5,0],[5,5]]},
          {"label":"NECROSIS","points":[[1,1],[2,1],[2,2]]}]})");
  CHECK(ann.width == 8);
  CHECK(ann.height == 6);
  REQUIRE(ann.polygons.size() == 2);
  CHECK(ann.polygons[0].label == PolyLabel::Root);
  CHECK(ann.polygons[1].label == PolyLabel::Necrosis);
}

TEST_CASE("mask color palette round-trips") {
  Rng rng(5);
  LabelMask m = LabelMask::filled(9, 7, 0);
  for (auto& c : m.classes) c = static_cast<uint8_t>(rng.below(3));
  const Palette pal = mask_file_palette();
  const RgbImage img = render_mask_colors(m, pal);
  const LabelMask back = mask_from_colors(img, pal.to_color_map());
  CHECK(back.classes == m.classes);

  RgbImage bad = img;
  bad.set(3, 3, Rgb{7, 7, 7});
  CHECK_THROWS_AS(mask_from_colors(bad, pal.to_color_map()), Error);
}

TEST_CASE("png io round-trips images and masks") {
  Rng rng(77);
  RgbImage img = RgbImage::filled(13, 9, Rgb{0, 0, 0});
  for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.below(256));
  const std::string ipath = "tmp_img_roundtrip.png";
  write_image_png(img, ipath);
  const RgbImage img2 = read_image_png(ipath);
  CHECK(img2.width == img.width);
  CHECK(img2.height == img.height);
  CHECK(img2.pixels == img.pixels);
  std::remove(ipath.c_str());

  LabelMask m = LabelMask::filled(11, 6, 0);
  for (auto& c : m.classes) c = static_cast<uint8_t>(rng.below(3));
  const std::string mpath = "tmp_mask_roundtrip.png";
  write_mask_png(m, mpath);
  const LabelMask m2 = read_mask_png(mpath);
  CHECK(m2.classes == m.classes);
  std::remove(mpath.c_str());

  // color-coded mask files read back through the pinned palette
  const std::string cpath = "tmp_mask_colors.png";
  write_image_png(render_mask_colors(m, mask_file_palette()), cpath);
  const LabelMask m3 = read_mask_png(cpath);
  CHECK(m3.classes == m.classes);
  std::remove(cpath.c_str());
}

TEST_CASE("resize keeps size-identical inputs untouched") {
  Rng rng(3);
  RgbImage img = RgbImage::filled(12, 10, Rgb{0, 0, 0});
  for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.below(256));
  const RgbImage same = resize_bilinear(img, 12, 10);
  CHECK(same.pixels == img.pixels);

  LabelMask m = LabelMask::filled(12, 10, 0);
  for (auto& c : m.classes) c = static_cast<uint8_t>(rng.below(3));
  CHECK(resize_nearest(m, 12, 10).classes == m.classes);
}

TEST_CASE("resize_nearest never invents classes") {
  Rng rng(9);
  LabelMask m = LabelMask::filled(17, 13, 0);
  for (auto& c : m.classes) c = (rng.below(4) == 0) ? 2 : 1;
  const LabelMask up = resize_nearest(m, 40, 31);
  for (uint8_t c : up.classes) CHECK((c == 1 || c == 2));
  const LabelMask down = resize_nearest(up, 17, 13);
  CHECK(down.width == 17);
  CHECK(down.height == 13);
}

TEST_CASE("validate_mask flags out-of-range classes") {
  LabelMask m = LabelMask::filled(4, 4, 1);
  CHECK_NOTHROW(validate_mask(m, "t"));
  m.classes[5] = 3;
  CHECK_THROWS_AS(validate_mask(m, "t"), Error);
  LabelMask shape_broken = m;
  shape_broken.classes.pop_back();
  CHECK_THROWS_AS(validate_mask(shape_broken, "t"), Error);
}
