#include "rootscore/ops.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>

#include "rootscore/error.hpp"
#include "rootscore/kernels.hpp"

namespace rootscore::nn {

namespace k = kernels;

namespace {

void check4(const TensorPtr& t, const char* what) {
  if (!t || t->shape.size() != 4) {
    fail(ErrorKind::ShapeError, std::string(what) + " must be a 4-d tensor");
  }
}

bool wants_grad(Tape* tape, std::initializer_list<const TensorPtr*> ins) {
  if (!tape) return false;
  for (const TensorPtr* t : ins)
    if (*t && (*t)->requires_grad) return true;
  return false;
}

}  // namespace

TensorPtr conv2d(Tape* tape, const TensorPtr& in, const TensorPtr& weight,
                 const TensorPtr& bias, int pad) {
  check4(in, "conv2d input");
  check4(weight, "conv2d weight");
  if (weight->dim(2) != weight->dim(3) || weight->dim(2) % 2 == 0) {
    fail(ErrorKind::ShapeError, "conv2d kernel must be square with odd size");
  }
  if (weight->dim(1) != in->dim(1)) {
    fail(ErrorKind::ShapeError, "conv2d channel mismatch: input has " +
                                    std::to_string(in->dim(1)) +
                                    ", weight expects " +
                                    std::to_string(weight->dim(1)));
  }
  if (bias && (bias->shape.size() != 1 || bias->dim(0) != weight->dim(0))) {
    fail(ErrorKind::ShapeError, "conv2d bias must be [out_channels]");
  }
  const k::ConvShape s{in->dim(0), in->dim(1), in->dim(2), in->dim(3),
                       weight->dim(0), weight->dim(2), pad};
  if (s.out_h() < 1 || s.out_w() < 1) {
    fail(ErrorKind::ShapeError, "conv2d output would be empty");
  }
  auto out = make_tensor({s.n, s.c_out, s.out_h(), s.out_w()});
  k::conv2d_forward(in->data.data(), weight->data.data(),
                    bias ? bias->data.data() : nullptr, out->data.data(), s);
  if (wants_grad(tape, {&in, &weight, &bias})) {
    out->requires_grad = true;
    out->ensure_grad();
    tape->record([in, weight, bias, out, s] {
      if (in->requires_grad) {
        in->ensure_grad();
        k::conv2d_grad_input(out->grad.data(), weight->data.data(),
                             in->grad.data(), s);
      }
      if (weight->requires_grad) {
        weight->ensure_grad();
        k::conv2d_grad_weight(out->grad.data(), in->data.data(),
                              weight->grad.data(), s);
      }
      if (bias && bias->requires_grad) {
        bias->ensure_grad();
        k::conv2d_grad_bias(out->grad.data(), bias->grad.data(), s);
      }
    });
  }
  return out;
}

TensorPtr relu(Tape* tape, const TensorPtr& in) {
  auto out = make_tensor(in->shape);
  k::relu_forward(in->data.data(), out->data.data(), in->numel());
  if (wants_grad(tape, {&in})) {
    out->requires_grad = true;
    out->ensure_grad();
    tape->record([in, out] {
      in->ensure_grad();
      k::relu_grad(out->data.data(), out->grad.data(), in->grad.data(),
                   in->numel());
    });
  }
  return out;
}

TensorPtr maxpool2x2(Tape* tape, const TensorPtr& in) {
  check4(in, "maxpool2x2 input");
  const int n = in->dim(0), c = in->dim(1), h = in->dim(2), w = in->dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    fail(ErrorKind::ShapeError, "maxpool2x2 requires even spatial dims, got " +
                                    std::to_string(h) + "x" + std::to_string(w));
  }
  auto out = make_tensor({n, c, h / 2, w / 2});
  auto argmax = std::make_shared<std::vector<int32_t>>(out->numel());
  k::maxpool2x2_forward(in->data.data(), out->data.data(), argmax->data(), n, c,
                        h, w);
  if (wants_grad(tape, {&in})) {
    out->requires_grad = true;
    out->ensure_grad();
    tape->record([in, out, argmax, n, c, h, w] {
      in->ensure_grad();
      k::maxpool2x2_grad(out->grad.data(), argmax->data(), in->grad.data(), n,
                         c, h, w);
    });
  }
  return out;
}

TensorPtr upconv2x2(Tape* tape, const TensorPtr& in, const TensorPtr& weight) {
  check4(in, "upconv2x2 input");
  check4(weight, "upconv2x2 weight");
  const int c = in->dim(1);
  if (c % 2 != 0 || weight->dim(0) != c || weight->dim(1) != c / 2 ||
      weight->dim(2) != 2 || weight->dim(3) != 2) {
    fail(ErrorKind::ShapeError, "upconv2x2 weight must be [C,C/2,2,2] with even C");
  }
  const k::UpconvShape s{in->dim(0), c, in->dim(2), in->dim(3)};
  auto out = make_tensor({s.n, s.c_out(), s.h * 2, s.w * 2});
  k::upconv2x2_forward(in->data.data(), weight->data.data(), out->data.data(),
                       s);
  if (wants_grad(tape, {&in, &weight})) {
    out->requires_grad = true;
    out->ensure_grad();
    tape->record([in, weight, out, s] {
      if (in->requires_grad) {
        in->ensure_grad();
        k::upconv2x2_grad_input(out->grad.data(), weight->data.data(),
                                in->grad.data(), s);
      }
      if (weight->requires_grad) {
        weight->ensure_grad();
        k::upconv2x2_grad_weight(out->grad.data(), in->data.data(),
                                 weight->grad.data(), s);
      }
    });
  }
  return out;
}

TensorPtr concat_channels(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  check4(a, "concat_channels input");
  check4(b, "concat_channels input");
  if (a->dim(0) != b->dim(0) || a->dim(2) != b->dim(2) ||
      a->dim(3) != b->dim(3)) {
    fail(ErrorKind::ShapeError, "concat_channels requires matching N,H,W");
  }
  const int n = a->dim(0), ca = a->dim(1), cb = b->dim(1);
  const size_t plane = (size_t)a->dim(2) * a->dim(3);
  auto out = make_tensor({n, ca + cb, a->dim(2), a->dim(3)});
  for (int i = 0; i < n; ++i) {
    float* dst = out->data.data() + (size_t)i * (ca + cb) * plane;
    std::copy_n(a->data.data() + (size_t)i * ca * plane, ca * plane, dst);
    std::copy_n(b->data.data() + (size_t)i * cb * plane, cb * plane,
                dst + ca * plane);
  }
  if (wants_grad(tape, {&a, &b})) {
    out->requires_grad = true;
    out->ensure_grad();
    tape->record([a, b, out, n, ca, cb, plane] {
      for (int i = 0; i < n; ++i) {
        const float* src = out->grad.data() + (size_t)i * (ca + cb) * plane;
        if (a->requires_grad) {
          a->ensure_grad();
          float* ga = a->grad.data() + (size_t)i * ca * plane;
          for (size_t j = 0; j < ca * plane; ++j) ga[j] += src[j];
        }
        if (b->requires_grad) {
          b->ensure_grad();
          float* gb = b->grad.data() + (size_t)i * cb * plane;
          for (size_t j = 0; j < cb * plane; ++j) gb[j] += src[ca * plane + j];
        }
      }
    });
  }
  return out;
}

TensorPtr softmax_channels(Tape* tape, const TensorPtr& in) {
  check4(in, "softmax_channels input");
  const int n = in->dim(0), c = in->dim(1), h = in->dim(2), w = in->dim(3);
  auto out = make_tensor(in->shape);
  k::softmax_channels_forward(in->data.data(), out->data.data(), n, c, h, w);
  if (wants_grad(tape, {&in})) {
    out->requires_grad = true;
    out->ensure_grad();
    tape->record([in, out, n, c, h, w] {
      in->ensure_grad();
      k::softmax_channels_grad(out->data.data(), out->grad.data(),
                               in->grad.data(), n, c, h, w);
    });
  }
  return out;
}

TensorPtr batchnorm2d(Tape* tape, const TensorPtr& in, const TensorPtr& gamma,
                      const TensorPtr& beta, const TensorPtr& running_mean,
                      const TensorPtr& running_var, bool train, float momentum,
                      float eps) {
  check4(in, "batchnorm2d input");
  const int n = in->dim(0), c = in->dim(1), h = in->dim(2), w = in->dim(3);
  if (!gamma || !beta || gamma->numel() != (size_t)c ||
      beta->numel() != (size_t)c) {
    fail(ErrorKind::ShapeError, "batchnorm2d gamma/beta must be [C]");
  }
  auto mean = std::make_shared<std::vector<float>>(c);
  auto var = std::make_shared<std::vector<float>>(c);
  if (train) {
    const size_t m = (size_t)n * h * w;
    if (m < 2) {
      fail(ErrorKind::InsufficientBatch,
           "batchnorm2d train mode needs N*H*W >= 2");
    }
    k::bn_stats(in->data.data(), n, c, h, w, mean->data(), var->data());
    if (running_mean && running_var) {
      if (running_mean->numel() != (size_t)c || running_var->numel() != (size_t)c) {
        fail(ErrorKind::ShapeError, "batchnorm2d running stats must be [C]");
      }
      const float unbias = (float)m / (float)(m - 1);
      for (int ch = 0; ch < c; ++ch) {
        running_mean->data[ch] =
            (1.0f - momentum) * running_mean->data[ch] + momentum * (*mean)[ch];
        running_var->data[ch] = (1.0f - momentum) * running_var->data[ch] +
                                momentum * (*var)[ch] * unbias;
      }
    }
  } else {
    if (!running_mean || !running_var || running_mean->numel() != (size_t)c ||
        running_var->numel() != (size_t)c) {
      fail(ErrorKind::ConfigError, "batchnorm2d eval mode needs running stats");
    }
    std::copy(running_mean->data.begin(), running_mean->data.end(),
              mean->begin());
    std::copy(running_var->data.begin(), running_var->data.end(), var->begin());
  }
  auto out = make_tensor(in->shape);
  k::bn_forward(in->data.data(), mean->data(), var->data(), gamma->data.data(),
                beta->data.data(), eps, out->data.data(), n, c, h, w);
  if (wants_grad(tape, {&in, &gamma, &beta})) {
    out->requires_grad = true;
    out->ensure_grad();
    tape->record([in, gamma, beta, out, mean, var, eps, train, n, c, h, w] {
      in->ensure_grad();
      gamma->ensure_grad();
      beta->ensure_grad();
      k::bn_grad(in->data.data(), mean->data(), var->data(),
                 gamma->data.data(), eps, out->grad.data(), in->grad.data(),
                 gamma->grad.data(), beta->grad.data(), train, n, c, h, w);
    });
  }
  return out;
}

TensorPtr dice_loss(Tape* tape, const TensorPtr& pred, const TensorPtr& target,
                    bool include_background, DiceReport* report, double eps) {
  check4(pred, "dice_loss pred");
  check4(target, "dice_loss target");
  if (pred->shape != target->shape) {
    fail(ErrorKind::ShapeError, "dice_loss pred/target shape mismatch");
  }
  const int c = pred->dim(1);
  const int c0 = include_background ? 0 : 1;
  if (c0 >= c) fail(ErrorKind::ShapeError, "dice_loss has no classes to score");
  const size_t plane = (size_t)pred->dim(2) * pred->dim(3);
  const int n = pred->dim(0);

  // per-class sums over the whole batch, in double for stable small losses
  std::vector<double> inter(c, 0.0), sum(c, 0.0);
  for (int i = 0; i < n; ++i)
    for (int ch = c0; ch < c; ++ch) {
      const float* p = pred->data.data() + ((size_t)i * c + ch) * plane;
      const float* t = target->data.data() + ((size_t)i * c + ch) * plane;
      double di = 0.0, ds = 0.0;
      for (size_t j = 0; j < plane; ++j) {
        di += (double)p[j] * t[j];
        ds += (double)p[j] + t[j];
      }
      inter[ch] += di;
      sum[ch] += ds;
    }

  const int classes = c - c0;
  double loss = 0.0;
  std::vector<double> dice(c, -1.0);
  for (int ch = c0; ch < c; ++ch) {
    dice[ch] = (2.0 * inter[ch] + eps) / (sum[ch] + eps);
    loss += 1.0 - dice[ch];
  }
  loss /= classes;
  if (report) {
    report->loss = loss;
    report->per_class_dice = dice;
  }

  auto out = make_tensor({1});
  out->data[0] = (float)loss;
  if (wants_grad(tape, {&pred})) {
    out->requires_grad = true;
    out->ensure_grad();
    auto inter_c = std::make_shared<std::vector<double>>(std::move(inter));
    auto sum_c = std::make_shared<std::vector<double>>(std::move(sum));
    tape->record([pred, target, out, inter_c, sum_c, eps, c0, c, n, plane,
                  classes] {
      pred->ensure_grad();
      const double g0 = out->grad[0];
      for (int ch = c0; ch < c; ++ch) {
        const double s = (*sum_c)[ch] + eps;
        const double num = 2.0 * (*inter_c)[ch] + eps;
        // d(1 - dice_c)/dp = -(2*t*s - num) / s^2, averaged over classes
        const double a = g0 / (classes * s * s);
        for (int i = 0; i < n; ++i) {
          const float* t = target->data.data() + ((size_t)i * c + ch) * plane;
          float* gp = pred->grad.data() + ((size_t)i * c + ch) * plane;
          for (size_t j = 0; j < plane; ++j) {
            gp[j] += (float)(-a * (2.0 * t[j] * s - num));
          }
        }
      }
    });
  }
  return out;
}

TensorPtr one_hot(const std::vector<uint8_t>& classes, int n, int c, int h,
                  int w) {
  const size_t plane = (size_t)h * w;
  if (classes.size() != (size_t)n * plane) {
    fail(ErrorKind::ShapeError, "one_hot class buffer size mismatch");
  }
  auto out = make_tensor({n, c, h, w});
  for (int i = 0; i < n; ++i) {
    const uint8_t* src = classes.data() + (size_t)i * plane;
    float* dst = out->data.data() + (size_t)i * c * plane;
    for (size_t j = 0; j < plane; ++j) {
      if (src[j] >= c) fail(ErrorKind::ShapeError, "one_hot class out of range");
      dst[(size_t)src[j] * plane + j] = 1.0f;
    }
  }
  return out;
}

}  // namespace rootscore::nn
