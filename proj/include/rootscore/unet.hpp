#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rootscore/checkpoint.hpp"
#include "rootscore/image.hpp"
#include "rootscore/ops.hpp"
#include "rootscore/tensor.hpp"

namespace rootscore {

struct UnetConfig {
  int input_side = 256;
  int in_channels = 3;
  int num_classes = 3;
  int depth = 4;
  int base_channels = 64;
};

void validate(const UnetConfig& cfg);  // ConfigError on violation
nlohmann::json to_json(const UnetConfig& cfg);
UnetConfig unet_config_from_json(const nlohmann::json& j);

struct ConvLayer {
  nn::TensorPtr w, b;
};
struct BnLayer {
  nn::TensorPtr gamma, beta, run_mean, run_var;
};
struct DoubleConv {
  ConvLayer c1, c2;
  BnLayer n1, n2;
};
struct DecoderBlock {
  nn::TensorPtr up_w;  // [C, C/2, 2, 2]
  DoubleConv dc;
};

// Stage names with output shapes, appended by forward() when requested.
using ShapeTrace = std::vector<std::pair<std::string, std::vector<int>>>;

struct UnetModel {
  UnetConfig config;
  std::vector<DoubleConv> enc;  // encoder levels 0..depth-1
  DoubleConv bottleneck;
  std::vector<DecoderBlock> dec;  // index i produces the level-i resolution
  ConvLayer head;                 // 1x1 conv to num_classes

  // Every tensor (trainable + BN running stats) in a stable, documented order.
  std::vector<nn::NamedTensor> named_tensors() const;
  // Trainable parameters only, same relative order.
  std::vector<nn::TensorPtr> parameters() const;

  // x: [N, in_channels, side, side], values expected in [0,1].
  // Returns softmax probabilities [N, num_classes, side, side].
  nn::TensorPtr forward(nn::Tape* tape, const nn::TensorPtr& x, bool train,
                        ShapeTrace* trace = nullptr) const;
};

UnetModel build_unet(const UnetConfig& cfg, uint64_t seed);

// Resizes to input_side (bilinear), scales by 1/255, runs eval forward,
// argmaxes per pixel (lowest class index wins ties). restore_size upsamples
// the mask back to the source dimensions with nearest-neighbor.
LabelMask predict_mask(const UnetModel& model, const RgbImage& img,
                       bool restore_size = true);

// Checkpoint container plus a "<path>.json" sidecar carrying the config and
// the input normalization.
void save_model(const UnetModel& model, const std::string& path);
UnetModel load_model(const std::string& path);

}  // namespace rootscore
