#pragma once

#include <string>
#include <vector>

#include "rootscore/tensor.hpp"

namespace rootscore::nn {

struct NamedTensor {
  std::string name;
  TensorPtr tensor;
};

// Container layout: u32 little-endian header length, then a JSON header
// {"format_version":1,"tensors":[{"name":...,"offset":...,"shape":[...]}]}
// (offset in bytes into the payload), then tightly packed little-endian f32
// payloads in header order. Round-trips byte-exactly.
void save_checkpoint(const std::string& path,
                     const std::vector<NamedTensor>& tensors);

std::vector<NamedTensor> load_checkpoint(const std::string& path);

}  // namespace rootscore::nn
