#include "rootscore/optim.hpp"

#include <cmath>
#include <string>

#include "rootscore/error.hpp"
#include "rootscore/rng.hpp"

namespace rootscore::nn {

TensorPtr xavier_init(std::vector<int> shape, int fan_in, int fan_out,
                      uint64_t seed) {
  if (fan_in < 1 || fan_out < 1) {
    fail(ErrorKind::ConfigError, "xavier_init fans must be >= 1");
  }
  auto t = make_tensor(std::move(shape), true);
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Rng rng(seed);
  for (float& x : t->data) x = (float)rng.uniform(-bound, bound);
  return t;
}

AdamState adam_init(const std::vector<TensorPtr>& params, double lr) {
  AdamState st;
  st.lr = lr;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const auto& p : params) {
    st.m.emplace_back(p->numel(), 0.0);
    st.v.emplace_back(p->numel(), 0.0);
  }
  return st;
}

void adam_step(const std::vector<TensorPtr>& params, AdamState& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    fail(ErrorKind::ConfigError, "adam state does not match parameter list");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, (double)state.step);
  const double bc2 = 1.0 - std::pow(state.beta2, (double)state.step);
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    if (p.grad.size() != p.data.size()) {
      fail(ErrorKind::MissingGradient,
           "adam_step: parameter " + std::to_string(i) + " has no gradient");
    }
    std::vector<double>& m = state.m[i];
    std::vector<double>& v = state.v[i];
    if (m.size() != p.data.size()) {
      fail(ErrorKind::ConfigError, "adam moment buffer shape mismatch");
    }
    for (size_t j = 0; j < p.data.size(); ++j) {
      const double g = p.grad[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p.data[j] =
          (float)(p.data[j] - state.lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

}  // namespace rootscore::nn
