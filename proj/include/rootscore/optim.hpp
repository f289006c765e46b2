#pragma once

#include <cstdint>
#include <vector>

#include "rootscore/tensor.hpp"

namespace rootscore::nn {

// Uniform samples in [-b, b] with b = sqrt(6 / (fan_in + fan_out)).
TensorPtr xavier_init(std::vector<int> shape, int fan_in, int fan_out,
                      uint64_t seed);

// Adam with bias correction. Moments are kept in f64 so updates are easy to
// check against a scalar oracle; parameters stay f32.
struct AdamState {
  int64_t step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<std::vector<double>> m, v;  // one buffer per parameter
};

AdamState adam_init(const std::vector<TensorPtr>& params, double lr = 3e-4);

// One update over all params; every param must carry a populated gradient.
void adam_step(const std::vector<TensorPtr>& params, AdamState& state);

}  // namespace rootscore::nn
