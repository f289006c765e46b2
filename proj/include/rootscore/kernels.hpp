#pragma once

#include <cstddef>
#include <cstdint>

namespace rootscore::nn::kernels {

// Two builds of every kernel: a plain serial reference and an OpenMP version.
// Both accumulate each output element in the same term order, so for any
// thread count the parallel results are bitwise identical to the reference
// (kernel translation units are compiled with -ffp-contract=off to keep the
// instruction-level arithmetic identical as well).
enum class Backend { Serial, Parallel };

void set_backend(Backend b);
Backend backend();

// n <= 1 selects the serial reference; n > 1 selects OpenMP with n threads;
// n == 0 selects OpenMP with the library default thread count.
void set_threads(int n);
int threads();

struct ConvShape {
  int n, c_in, h, w;  // input
  int c_out, k, pad;  // square kernel, symmetric zero padding
  int out_h() const { return h + 2 * pad - k + 1; }
  int out_w() const { return w + 2 * pad - k + 1; }
};

struct UpconvShape {
  int n, c_in, h, w;  // kernel 2x2, stride 2, channels halved
  int c_out() const { return c_in / 2; }
};

// Gradient kernels accumulate (+=) into their destination buffers; callers
// zero-initialize.
#define ROOTSCORE_KERNEL_DECLS                                                      \
  void conv2d_forward(const float* in, const float* weight, const float* bias,     \
                      float* out, const ConvShape& s);                              \
  void conv2d_grad_input(const float* d_out, const float* weight, float* d_in,     \
                         const ConvShape& s);                                       \
  void conv2d_grad_weight(const float* d_out, const float* in, float* d_weight,    \
                          const ConvShape& s);                                      \
  void conv2d_grad_bias(const float* d_out, float* d_bias, const ConvShape& s);    \
  void upconv2x2_forward(const float* in, const float* weight, float* out,         \
                         const UpconvShape& s);                                     \
  void upconv2x2_grad_input(const float* d_out, const float* weight, float* d_in,  \
                            const UpconvShape& s);                                  \
  void upconv2x2_grad_weight(const float* d_out, const float* in, float* d_weight, \
                             const UpconvShape& s);                                 \
  void relu_forward(const float* in, float* out, size_t n);                        \
  void relu_grad(const float* out, const float* d_out, float* d_in, size_t n);     \
  void maxpool2x2_forward(const float* in, float* out, int32_t* argmax, int n,     \
                          int c, int h, int w);                                     \
  void maxpool2x2_grad(const float* d_out, const int32_t* argmax, float* d_in,     \
                       int n, int c, int h, int w);                                 \
  void bn_stats(const float* in, int n, int c, int h, int w, float* mean,          \
                float* var);                                                        \
  void bn_forward(const float* in, const float* mean, const float* var,            \
                  const float* gamma, const float* beta, float eps, float* out,    \
                  int n, int c, int h, int w);                                      \
  void bn_grad(const float* in, const float* mean, const float* var,              \
               const float* gamma, float eps, const float* d_out, float* d_in,    \
               float* d_gamma, float* d_beta, bool train_stats, int n, int c,     \
               int h, int w);                                                       \
  void softmax_channels_forward(const float* in, float* out, int n, int c, int h, \
                                int w);                                             \
  void softmax_channels_grad(const float* out, const float* d_out, float* d_in,   \
                             int n, int c, int h, int w);

namespace serial {
ROOTSCORE_KERNEL_DECLS
}
namespace par {
ROOTSCORE_KERNEL_DECLS
}

// Dispatch on the active backend.
ROOTSCORE_KERNEL_DECLS

#undef ROOTSCORE_KERNEL_DECLS

}  // namespace rootscore::nn::kernels
