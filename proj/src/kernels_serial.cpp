#include <algorithm>
#include <cmath>

#include "rootscore/kernels.hpp"

// Naive reference kernels. The loop nests here define the exact term order for
// every accumulated value; the OpenMP kernels restructure the loops for speed
// but must reproduce these sums bitwise. Keep this file dumb and readable.
//
// Accumulation contracts (shared with kernels_omp.cpp):
//   conv2d_forward        out = bias, then += terms in (c, ky, kx) order
//   conv2d_grad_input     d_in += term-by-term in (f, ky, kx) order
//   conv2d_grad_weight    local acc over (n, oy, ox), then one +=
//   conv2d_grad_bias      local acc over (n, oy, ox), then one +=
//   upconv2x2_forward     out = 0, then += terms in c order
//   upconv2x2_grad_input  d_in += term-by-term in (g, dy, dx) order
//   upconv2x2_grad_weight local acc over (n, iy, ix), then one +=
//   bn / softmax          per-channel or per-pixel reductions in scan order

namespace rootscore::nn::kernels::serial {

namespace {

inline size_t idx4(int a, int b, int c, int d, int nb, int nc, int nd) {
  return (((size_t)a * nb + b) * nc + c) * nd + d;
}

}  // namespace

void conv2d_forward(const float* in, const float* weight, const float* bias,
                    float* out, const ConvShape& s) {
  const int oh = s.out_h(), ow = s.out_w();
  for (int n = 0; n < s.n; ++n)
    for (int f = 0; f < s.c_out; ++f)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          float acc = bias ? bias[f] : 0.0f;
          for (int c = 0; c < s.c_in; ++c)
            for (int ky = 0; ky < s.k; ++ky)
              for (int kx = 0; kx < s.k; ++kx) {
                const int iy = oy + ky - s.pad;
                const int ix = ox + kx - s.pad;
                if (iy < 0 || iy >= s.h || ix < 0 || ix >= s.w) continue;
                acc += in[idx4(n, c, iy, ix, s.c_in, s.h, s.w)] *
                       weight[idx4(f, c, ky, kx, s.c_in, s.k, s.k)];
              }
          out[idx4(n, f, oy, ox, s.c_out, oh, ow)] = acc;
        }
}

void conv2d_grad_input(const float* d_out, const float* weight, float* d_in,
                       const ConvShape& s) {
  const int oh = s.out_h(), ow = s.out_w();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c_in; ++c)
      for (int iy = 0; iy < s.h; ++iy)
        for (int ix = 0; ix < s.w; ++ix) {
          const size_t di = idx4(n, c, iy, ix, s.c_in, s.h, s.w);
          for (int f = 0; f < s.c_out; ++f)
            for (int ky = 0; ky < s.k; ++ky)
              for (int kx = 0; kx < s.k; ++kx) {
                const int oy = iy + s.pad - ky;
                const int ox = ix + s.pad - kx;
                if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) continue;
                d_in[di] += d_out[idx4(n, f, oy, ox, s.c_out, oh, ow)] *
                            weight[idx4(f, c, ky, kx, s.c_in, s.k, s.k)];
              }
        }
}

void conv2d_grad_weight(const float* d_out, const float* in, float* d_weight,
                        const ConvShape& s) {
  const int oh = s.out_h(), ow = s.out_w();
  for (int f = 0; f < s.c_out; ++f)
    for (int c = 0; c < s.c_in; ++c)
      for (int ky = 0; ky < s.k; ++ky)
        for (int kx = 0; kx < s.k; ++kx) {
          float acc = 0.0f;
          for (int n = 0; n < s.n; ++n)
            for (int oy = 0; oy < oh; ++oy)
              for (int ox = 0; ox < ow; ++ox) {
                const int iy = oy + ky - s.pad;
                const int ix = ox + kx - s.pad;
                if (iy < 0 || iy >= s.h || ix < 0 || ix >= s.w) continue;
                acc += d_out[idx4(n, f, oy, ox, s.c_out, oh, ow)] *
                       in[idx4(n, c, iy, ix, s.c_in, s.h, s.w)];
              }
          d_weight[idx4(f, c, ky, kx, s.c_in, s.k, s.k)] += acc;
        }
}

void conv2d_grad_bias(const float* d_out, float* d_bias, const ConvShape& s) {
  const int oh = s.out_h(), ow = s.out_w();
  for (int f = 0; f < s.c_out; ++f) {
    float acc = 0.0f;
    for (int n = 0; n < s.n; ++n)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
          acc += d_out[idx4(n, f, oy, ox, s.c_out, oh, ow)];
    d_bias[f] += acc;
  }
}

void upconv2x2_forward(const float* in, const float* weight, float* out,
                       const UpconvShape& s) {
  const int gs = s.c_out(), oh = s.h * 2, ow = s.w * 2;
  for (int n = 0; n < s.n; ++n)
    for (int g = 0; g < gs; ++g)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          float acc = 0.0f;
          for (int c = 0; c < s.c_in; ++c)
            acc += in[idx4(n, c, oy / 2, ox / 2, s.c_in, s.h, s.w)] *
                   weight[idx4(c, g, oy % 2, ox % 2, gs, 2, 2)];
          out[idx4(n, g, oy, ox, gs, oh, ow)] = acc;
        }
}

void upconv2x2_grad_input(const float* d_out, const float* weight, float* d_in,
                          const UpconvShape& s) {
  const int gs = s.c_out(), oh = s.h * 2, ow = s.w * 2;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c_in; ++c)
      for (int iy = 0; iy < s.h; ++iy)
        for (int ix = 0; ix < s.w; ++ix) {
          const size_t di = idx4(n, c, iy, ix, s.c_in, s.h, s.w);
          for (int g = 0; g < gs; ++g)
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx)
                d_in[di] +=
                    d_out[idx4(n, g, 2 * iy + dy, 2 * ix + dx, gs, oh, ow)] *
                    weight[idx4(c, g, dy, dx, gs, 2, 2)];
        }
}

void upconv2x2_grad_weight(const float* d_out, const float* in, float* d_weight,
                           const UpconvShape& s) {
  const int gs = s.c_out(), oh = s.h * 2, ow = s.w * 2;
  for (int c = 0; c < s.c_in; ++c)
    for (int g = 0; g < gs; ++g)
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          float acc = 0.0f;
          for (int n = 0; n < s.n; ++n)
            for (int iy = 0; iy < s.h; ++iy)
              for (int ix = 0; ix < s.w; ++ix)
                acc += in[idx4(n, c, iy, ix, s.c_in, s.h, s.w)] *
                       d_out[idx4(n, g, 2 * iy + dy, 2 * ix + dx, gs, oh, ow)];
          d_weight[idx4(c, g, dy, dx, gs, 2, 2)] += acc;
        }
}

void relu_forward(const float* in, float* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0f ? in[i] : 0.0f;
}

void relu_grad(const float* out, const float* d_out, float* d_in, size_t n) {
  for (size_t i = 0; i < n; ++i) d_in[i] += out[i] > 0.0f ? d_out[i] : 0.0f;
}

void maxpool2x2_forward(const float* in, float* out, int32_t* argmax, int n,
                        int c, int h, int w) {
  const int oh = h / 2, ow = w / 2;
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const float* plane = in + ((size_t)i * c + ch) * h * w;
      float* oplane = out + ((size_t)i * c + ch) * oh * ow;
      int32_t* aplane = argmax + ((size_t)i * c + ch) * oh * ow;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          int best = 2 * oy * w + 2 * ox;
          float bv = plane[best];
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const int pos = (2 * oy + dy) * w + 2 * ox + dx;
              if (plane[pos] > bv) {
                bv = plane[pos];
                best = pos;
              }
            }
          oplane[oy * ow + ox] = bv;
          aplane[oy * ow + ox] = (int32_t)best;
        }
    }
}

void maxpool2x2_grad(const float* d_out, const int32_t* argmax, float* d_in,
                     int n, int c, int h, int w) {
  const int oh = h / 2, ow = w / 2;
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      float* plane = d_in + ((size_t)i * c + ch) * h * w;
      const float* oplane = d_out + ((size_t)i * c + ch) * oh * ow;
      const int32_t* aplane = argmax + ((size_t)i * c + ch) * oh * ow;
      for (int j = 0; j < oh * ow; ++j) plane[aplane[j]] += oplane[j];
    }
}

void bn_stats(const float* in, int n, int c, int h, int w, float* mean,
              float* var) {
  const size_t plane = (size_t)h * w;
  const float inv = 1.0f / ((float)n * (float)h * (float)w);
  for (int ch = 0; ch < c; ++ch) {
    float sum = 0.0f;
    for (int i = 0; i < n; ++i) {
      const float* p = in + ((size_t)i * c + ch) * plane;
      for (size_t j = 0; j < plane; ++j) sum += p[j];
    }
    const float m = sum * inv;
    float sq = 0.0f;
    for (int i = 0; i < n; ++i) {
      const float* p = in + ((size_t)i * c + ch) * plane;
      for (size_t j = 0; j < plane; ++j) {
        const float d = p[j] - m;
        sq += d * d;
      }
    }
    mean[ch] = m;
    var[ch] = sq * inv;
  }
}

void bn_forward(const float* in, const float* mean, const float* var,
                const float* gamma, const float* beta, float eps, float* out,
                int n, int c, int h, int w) {
  const size_t plane = (size_t)h * w;
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const float* p = in + ((size_t)i * c + ch) * plane;
      float* o = out + ((size_t)i * c + ch) * plane;
      const float m = mean[ch];
      const float is = 1.0f / std::sqrt(var[ch] + eps);
      const float g = gamma[ch], b = beta[ch];
      for (size_t j = 0; j < plane; ++j) o[j] = (p[j] - m) * is * g + b;
    }
}

void bn_grad(const float* in, const float* mean, const float* var,
             const float* gamma, float eps, const float* d_out, float* d_in,
             float* d_gamma, float* d_beta, bool train_stats, int n, int c,
             int h, int w) {
  const size_t plane = (size_t)h * w;
  const float count = (float)n * (float)h * (float)w;
  for (int ch = 0; ch < c; ++ch) {
    const float m = mean[ch];
    const float is = 1.0f / std::sqrt(var[ch] + eps);
    float sum_dy = 0.0f, sum_dy_xh = 0.0f;
    for (int i = 0; i < n; ++i) {
      const float* p = in + ((size_t)i * c + ch) * plane;
      const float* dy = d_out + ((size_t)i * c + ch) * plane;
      for (size_t j = 0; j < plane; ++j) {
        sum_dy += dy[j];
        sum_dy_xh += dy[j] * (p[j] - m) * is;
      }
    }
    d_gamma[ch] += sum_dy_xh;
    d_beta[ch] += sum_dy;
    const float sg = gamma[ch] * is;
    if (train_stats) {
      // batch mean/var depend on the input, so their gradient paths fold in
      const float mean_dy = sum_dy / count;
      const float mean_dy_xh = sum_dy_xh / count;
      for (int i = 0; i < n; ++i) {
        const float* p = in + ((size_t)i * c + ch) * plane;
        const float* dy = d_out + ((size_t)i * c + ch) * plane;
        float* dx = d_in + ((size_t)i * c + ch) * plane;
        for (size_t j = 0; j < plane; ++j) {
          const float xh = (p[j] - m) * is;
          dx[j] += sg * (dy[j] - mean_dy - xh * mean_dy_xh);
        }
      }
    } else {
      for (int i = 0; i < n; ++i) {
        const float* dy = d_out + ((size_t)i * c + ch) * plane;
        float* dx = d_in + ((size_t)i * c + ch) * plane;
        for (size_t j = 0; j < plane; ++j) dx[j] += sg * dy[j];
      }
    }
  }
}

void softmax_channels_forward(const float* in, float* out, int n, int c, int h,
                              int w) {
  const size_t plane = (size_t)h * w;
  for (int i = 0; i < n; ++i) {
    const float* base = in + (size_t)i * c * plane;
    float* obase = out + (size_t)i * c * plane;
    for (size_t j = 0; j < plane; ++j) {
      float m = base[j];
      for (int ch = 1; ch < c; ++ch)
        m = std::max(m, base[ch * plane + j]);
      float sum = 0.0f;
      for (int ch = 0; ch < c; ++ch) {
        const float e = std::exp(base[ch * plane + j] - m);
        obase[ch * plane + j] = e;
        sum += e;
      }
      const float inv = 1.0f / sum;
      for (int ch = 0; ch < c; ++ch) obase[ch * plane + j] *= inv;
    }
  }
}

void softmax_channels_grad(const float* out, const float* d_out, float* d_in,
                           int n, int c, int h, int w) {
  const size_t plane = (size_t)h * w;
  for (int i = 0; i < n; ++i) {
    const float* p = out + (size_t)i * c * plane;
    const float* dy = d_out + (size_t)i * c * plane;
    float* dx = d_in + (size_t)i * c * plane;
    for (size_t j = 0; j < plane; ++j) {
      float dot = 0.0f;
      for (int ch = 0; ch < c; ++ch) dot += dy[ch * plane + j] * p[ch * plane + j];
      for (int ch = 0; ch < c; ++ch)
        dx[ch * plane + j] += p[ch * plane + j] * (dy[ch * plane + j] - dot);
    }
  }
}

}  // namespace rootscore::nn::kernels::serial
