#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rootscore/image.hpp"
#include "rootscore/scoring.hpp"

namespace rootscore {

struct OtsuResult {
  int threshold = 0;  // class 0 is levels <= threshold
  double between_class_variance = 0.0;
};

// Maximizes w0*w1*(mu0-mu1)^2 over all 256 candidate thresholds; ties go to
// the smallest threshold. A single-valued histogram has no split.
OtsuResult otsu_threshold(const std::array<uint64_t, 256>& histogram);

// 4-connected components over nonzero cells. label[i] = component id or -1.
struct Components {
  std::vector<int32_t> label;
  std::vector<int64_t> sizes;  // indexed by component id
};
Components connected_components(const std::vector<uint8_t>& grid, int width,
                                int height);

struct BaselineParams {
  int min_blob_px = 16;
  // Second-pass Otsu splits noise on lesion-free roots; require the class
  // means to differ by at least this many gray levels before calling the dark
  // side a lesion.
  double min_lesion_contrast = 30.0;
};

struct BaselineResult {
  NecrosisScore score;
  LabelMask mask;
  int root_threshold = -1;
  int lesion_threshold = -1;  // -1 when no lesion split was accepted
};

// Classical pipeline: luma grayscale -> Otsu (root = brighter class) ->
// largest 4-connected component with interior holes filled -> second Otsu
// inside the root for dark lesion pixels -> drop blobs under min_blob_px ->
// necrosis percentage.
BaselineResult baseline_score(const RgbImage& img,
                              const BaselineParams& params = {});

}  // namespace rootscore
