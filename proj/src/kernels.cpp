#include "rootscore/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rootscore::nn::kernels {

namespace {
Backend g_backend = Backend::Parallel;
int g_threads = 0;
}  // namespace

void set_backend(Backend b) { g_backend = b; }
Backend backend() { return g_backend; }

void set_threads(int n) {
  g_threads = n;
  if (n == 1) {
    g_backend = Backend::Serial;
    return;
  }
  g_backend = Backend::Parallel;
#ifdef _OPENMP
  if (n > 1) omp_set_num_threads(n);
#endif
}

int threads() { return g_threads; }

#define ROOTSCORE_DISPATCH(fn, ...)                            \
  do {                                                         \
    if (g_backend == Backend::Serial)                          \
      serial::fn(__VA_ARGS__);                                 \
    else                                                       \
      par::fn(__VA_ARGS__);                                    \
  } while (0)

void conv2d_forward(const float* in, const float* weight, const float* bias,
                    float* out, const ConvShape& s) {
  ROOTSCORE_DISPATCH(conv2d_forward, in, weight, bias, out, s);
}
void conv2d_grad_input(const float* d_out, const float* weight, float* d_in,
                       const ConvShape& s) {
  ROOTSCORE_DISPATCH(conv2d_grad_input, d_out, weight, d_in, s);
}
void conv2d_grad_weight(const float* d_out, const float* in, float* d_weight,
                        const ConvShape& s) {
  ROOTSCORE_DISPATCH(conv2d_grad_weight, d_out, in, d_weight, s);
}
void conv2d_grad_bias(const float* d_out, float* d_bias, const ConvShape& s) {
  ROOTSCORE_DISPATCH(conv2d_grad_bias, d_out, d_bias, s);
}
void upconv2x2_forward(const float* in, const float* weight, float* out,
                       const UpconvShape& s) {
  ROOTSCORE_DISPATCH(upconv2x2_forward, in, weight, out, s);
}
void upconv2x2_grad_input(const float* d_out, const float* weight, float* d_in,
                          const UpconvShape& s) {
  ROOTSCORE_DISPATCH(upconv2x2_grad_input, d_out, weight, d_in, s);
}
void upconv2x2_grad_weight(const float* d_out, const float* in,
                           float* d_weight, const UpconvShape& s) {
  ROOTSCORE_DISPATCH(upconv2x2_grad_weight, d_out, in, d_weight, s);
}
void relu_forward(const float* in, float* out, size_t n) {
  ROOTSCORE_DISPATCH(relu_forward, in, out, n);
}
void relu_grad(const float* out, const float* d_out, float* d_in, size_t n) {
  ROOTSCORE_DISPATCH(relu_grad, out, d_out, d_in, n);
}
void maxpool2x2_forward(const float* in, float* out, int32_t* argmax, int n,
                        int c, int h, int w) {
  ROOTSCORE_DISPATCH(maxpool2x2_forward, in, out, argmax, n, c, h, w);
}
void maxpool2x2_grad(const float* d_out, const int32_t* argmax, float* d_in,
                     int n, int c, int h, int w) {
  ROOTSCORE_DISPATCH(maxpool2x2_grad, d_out, argmax, d_in, n, c, h, w);
}
void bn_stats(const float* in, int n, int c, int h, int w, float* mean,
              float* var) {
  ROOTSCORE_DISPATCH(bn_stats, in, n, c, h, w, mean, var);
}
void bn_forward(const float* in, const float* mean, const float* var,
                const float* gamma, const float* beta, float eps, float* out,
                int n, int c, int h, int w) {
  ROOTSCORE_DISPATCH(bn_forward, in, mean, var, gamma, beta, eps, out, n, c, h,
                     w);
}
void bn_grad(const float* in, const float* mean, const float* var,
             const float* gamma, float eps, const float* d_out, float* d_in,
             float* d_gamma, float* d_beta, bool train_stats, int n, int c,
             int h, int w) {
  ROOTSCORE_DISPATCH(bn_grad, in, mean, var, gamma, eps, d_out, d_in, d_gamma,
                     d_beta, train_stats, n, c, h, w);
}
void softmax_channels_forward(const float* in, float* out, int n, int c, int h,
                              int w) {
  ROOTSCORE_DISPATCH(softmax_channels_forward, in, out, n, c, h, w);
}
void softmax_channels_grad(const float* out, const float* d_out, float* d_in,
                           int n, int c, int h, int w) {
  ROOTSCORE_DISPATCH(softmax_channels_grad, out, d_out, d_in, n, c, h, w);
}

#undef ROOTSCORE_DISPATCH

}  // namespace rootscore::nn::kernels
