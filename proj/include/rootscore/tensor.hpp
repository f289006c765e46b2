#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace rootscore::nn {

// Dense row-major f32 tensor with an optional gradient buffer.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty until ensure_grad()
  bool requires_grad = false;

  size_t numel() const {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
  }
  int dim(size_t i) const { return shape[i]; }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
  }
  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0f);
  }
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(std::vector<int> shape, bool requires_grad = false);
TensorPtr make_tensor(std::vector<int> shape, std::vector<float> data,
                      bool requires_grad = false);

// Reverse-mode tape over one forward pass. Ops append backward closures in
// forward order; backward() replays them in reverse. Single-threaded by
// contract; independent tapes may live on separate threads.
class Tape {
 public:
  void record(std::function<void()> step) { steps_.push_back(std::move(step)); }

  // loss must be scalar; seeds its grad with 1 and propagates.
  void backward(const TensorPtr& loss);

  void clear() { steps_.clear(); }
  size_t size() const { return steps_.size(); }

 private:
  std::vector<std::function<void()>> steps_;
};

}  // namespace rootscore::nn
