#pragma once

#include <vector>

#include "rootscore/tensor.hpp"

namespace rootscore::nn {

// Differentiable ops over 4-D [N,C,H,W] tensors. Passing tape == nullptr runs
// pure inference: no closures are recorded and outputs carry
// requires_grad = false. With a tape, each op appends one backward closure
// that accumulates into the .grad buffers of inputs that require gradients.

// weight [F,C,k,k] (k odd), optional bias [F]; zero padding `pad` per side.
TensorPtr conv2d(Tape* tape, const TensorPtr& in, const TensorPtr& weight,
                 const TensorPtr& bias, int pad);

TensorPtr relu(Tape* tape, const TensorPtr& in);

// 2x2 window, stride 2; requires even H,W. Gradient goes to the first maximal
// element of each window in row-major scan order.
TensorPtr maxpool2x2(Tape* tape, const TensorPtr& in);

// Transposed conv, kernel 2x2, stride 2; weight [C,C/2,2,2], no bias.
// [N,C,H,W] -> [N,C/2,2H,2W].
TensorPtr upconv2x2(Tape* tape, const TensorPtr& in, const TensorPtr& weight);

// [N,Ca,H,W] + [N,Cb,H,W] -> [N,Ca+Cb,H,W]
TensorPtr concat_channels(Tape* tape, const TensorPtr& a, const TensorPtr& b);

TensorPtr softmax_channels(Tape* tape, const TensorPtr& in);

// gamma/beta [C]. train=true normalizes with batch statistics (and, when the
// running buffers are non-null, folds them in with `momentum`, storing the
// unbiased variance); train=false requires running buffers and uses them.
// Running buffers are plain [C] tensors and never receive gradients.
TensorPtr batchnorm2d(Tape* tape, const TensorPtr& in, const TensorPtr& gamma,
                      const TensorPtr& beta, const TensorPtr& running_mean,
                      const TensorPtr& running_var, bool train,
                      float momentum = 0.1f, float eps = 1e-5f);

struct DiceReport {
  double loss = 0.0;
  std::vector<double> per_class_dice;  // indexed by class id, -1 where unused
};

// Soft dice loss between predicted probabilities and a one-hot target, both
// [N,C,H,W]: mean over scored classes of 1 - (2*I_c + eps)/(S_c + eps), where
// I_c = sum(p*t) and S_c = sum(p) + sum(t). Background (class 0) is excluded
// unless include_background is set. Returns a scalar tensor.
TensorPtr dice_loss(Tape* tape, const TensorPtr& pred, const TensorPtr& target,
                    bool include_background = false,
                    DiceReport* report = nullptr, double eps = 1e-6);

// [N,C,H,W] one-hot encoding of class indices (row-major, values < C).
TensorPtr one_hot(const std::vector<uint8_t>& classes, int n, int c, int h,
                  int w);

}  // namespace rootscore::nn
