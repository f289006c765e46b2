#include "rootscore/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "rootscore/error.hpp"

namespace rootscore {

OtsuResult otsu_threshold(const std::array<uint64_t, 256>& histogram) {
  uint64_t total = 0;
  double sum = 0;
  for (int i = 0; i < 256; ++i) {
    total += histogram[i];
    sum += (double)i * histogram[i];
  }
  if (total == 0) fail(ErrorKind::DegenerateHistogram, "empty histogram");

  OtsuResult best;
  bool found = false;
  uint64_t w0 = 0;
  double sum0 = 0;
  for (int t = 0; t < 256; ++t) {
    w0 += histogram[t];
    sum0 += (double)t * histogram[t];
    const uint64_t w1 = total - w0;
    if (w0 == 0 || w1 == 0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum - sum0) / w1;
    const double var = ((double)w0 / total) * ((double)w1 / total) *
                       (mu0 - mu1) * (mu0 - mu1);
    if (!found || var > best.between_class_variance) {
      best.threshold = t;
      best.between_class_variance = var;
      found = true;
    }
  }
  if (!found) {
    fail(ErrorKind::DegenerateHistogram, "all pixels share one gray level");
  }
  return best;
}

Components connected_components(const std::vector<uint8_t>& grid, int width,
                                int height) {
  Components out;
  out.label.assign((size_t)width * height, -1);
  std::vector<size_t> stack;
  for (size_t start = 0; start < grid.size(); ++start) {
    if (!grid[start] || out.label[start] != -1) continue;
    const int32_t id = (int32_t)out.sizes.size();
    int64_t size = 0;
    stack.push_back(start);
    out.label[start] = id;
    while (!stack.empty()) {
      const size_t i = stack.back();
      stack.pop_back();
      ++size;
      const int x = (int)(i % width), y = (int)(i / width);
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || nx[k] >= width || ny[k] < 0 || ny[k] >= height)
          continue;
        const size_t j = (size_t)ny[k] * width + nx[k];
        if (grid[j] && out.label[j] == -1) {
          out.label[j] = id;
          stack.push_back(j);
        }
      }
    }
    out.sizes.push_back(size);
  }
  return out;
}

namespace {

std::vector<uint8_t> to_gray(const RgbImage& img) {
  std::vector<uint8_t> gray(img.pixels.size() / 3);
  for (size_t i = 0; i < gray.size(); ++i) {
    const double v = 0.299 * img.pixels[3 * i] + 0.587 * img.pixels[3 * i + 1] +
                     0.114 * img.pixels[3 * i + 2];
    gray[i] = (uint8_t)std::lround(std::min(255.0, v));
  }
  return gray;
}

std::array<uint64_t, 256> histogram_of(const std::vector<uint8_t>& gray,
                                       const std::vector<uint8_t>* within) {
  std::array<uint64_t, 256> h{};
  for (size_t i = 0; i < gray.size(); ++i) {
    if (within && !(*within)[i]) continue;
    ++h[gray[i]];
  }
  return h;
}

// Keeps the largest component and fills any enclosed background pockets
// (complement components that never touch the image border).
std::vector<uint8_t> largest_component_filled(const std::vector<uint8_t>& fg,
                                              int w, int h) {
  const Components cc = connected_components(fg, w, h);
  if (cc.sizes.empty()) return {};
  const int32_t keep =
      (int32_t)(std::max_element(cc.sizes.begin(), cc.sizes.end()) -
                cc.sizes.begin());
  std::vector<uint8_t> root(fg.size(), 0);
  std::vector<uint8_t> comp(fg.size(), 0);
  for (size_t i = 0; i < fg.size(); ++i) {
    root[i] = cc.label[i] == keep;
    comp[i] = !root[i];
  }
  const Components holes = connected_components(comp, w, h);
  std::vector<uint8_t> touches_border(holes.sizes.size(), 0);
  for (int x = 0; x < w; ++x) {
    if (holes.label[x] >= 0) touches_border[holes.label[x]] = 1;
    if (holes.label[(size_t)(h - 1) * w + x] >= 0)
      touches_border[holes.label[(size_t)(h - 1) * w + x]] = 1;
  }
  for (int y = 0; y < h; ++y) {
    if (holes.label[(size_t)y * w] >= 0) touches_border[holes.label[(size_t)y * w]] = 1;
    if (holes.label[(size_t)y * w + w - 1] >= 0)
      touches_border[holes.label[(size_t)y * w + w - 1]] = 1;
  }
  for (size_t i = 0; i < root.size(); ++i) {
    if (!root[i] && holes.label[i] >= 0 && !touches_border[holes.label[i]]) {
      root[i] = 1;
    }
  }
  return root;
}

}  // namespace

BaselineResult baseline_score(const RgbImage& img, const BaselineParams& params) {
  const int w = img.width, h = img.height;
  const std::vector<uint8_t> gray = to_gray(img);

  OtsuResult split;
  try {
    split = otsu_threshold(histogram_of(gray, nullptr));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DegenerateHistogram) {
      fail(ErrorKind::NoRootDetected, "image has a single gray level");
    }
    throw;
  }

  std::vector<uint8_t> bright(gray.size());
  for (size_t i = 0; i < gray.size(); ++i) bright[i] = gray[i] > split.threshold;
  std::vector<uint8_t> root = largest_component_filled(bright, w, h);
  if (root.empty()) fail(ErrorKind::NoRootDetected, "no bright component found");

  // second pass: dark pixels inside the root are lesion candidates
  std::vector<uint8_t> lesion(gray.size(), 0);
  int lesion_threshold = -1;
  try {
    const auto root_hist = histogram_of(gray, &root);
    const OtsuResult inner = otsu_threshold(root_hist);
    double w0 = 0, s0 = 0, w1 = 0, s1 = 0;
    for (int v = 0; v < 256; ++v) {
      if (v <= inner.threshold) {
        w0 += (double)root_hist[v];
        s0 += (double)v * root_hist[v];
      } else {
        w1 += (double)root_hist[v];
        s1 += (double)v * root_hist[v];
      }
    }
    if (w0 > 0 && w1 > 0 && s1 / w1 - s0 / w0 >= params.min_lesion_contrast) {
      lesion_threshold = inner.threshold;
      for (size_t i = 0; i < gray.size(); ++i) {
        lesion[i] = root[i] && gray[i] <= inner.threshold;
      }
      const Components blobs = connected_components(lesion, w, h);
      for (size_t i = 0; i < lesion.size(); ++i) {
        if (lesion[i] && blobs.sizes[blobs.label[i]] < params.min_blob_px) {
          lesion[i] = 0;
        }
      }
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateHistogram) throw;
    // uniform root: no lesion split
  }

  BaselineResult out;
  out.root_threshold = split.threshold;
  out.lesion_threshold = lesion_threshold;
  out.mask = LabelMask::filled(w, h, kClassBackground);
  for (size_t i = 0; i < root.size(); ++i) {
    if (lesion[i]) {
      out.mask.classes[i] = kClassNecrosis;
    } else if (root[i]) {
      out.mask.classes[i] = kClassRoot;
    }
  }
  out.score = score_mask(out.mask);
  return out;
}

}  // namespace rootscore
