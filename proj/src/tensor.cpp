#include "rootscore/tensor.hpp"

#include "rootscore/error.hpp"

namespace rootscore::nn {

TensorPtr make_tensor(std::vector<int> shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data.assign(t->numel(), 0.0f);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr make_tensor(std::vector<int> shape, std::vector<float> data,
                      bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data = std::move(data);
  t->requires_grad = requires_grad;
  if (t->data.size() != t->numel()) {
    fail(ErrorKind::ShapeError, "tensor data length does not match shape");
  }
  return t;
}

void Tape::backward(const TensorPtr& loss) {
  if (loss->numel() != 1) fail(ErrorKind::ShapeError, "backward needs a scalar loss");
  loss->ensure_grad();
  loss->grad[0] = 1.0f;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

}  // namespace rootscore::nn
