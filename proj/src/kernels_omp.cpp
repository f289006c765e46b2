#include <algorithm>
#include <cmath>

#include "rootscore/kernels.hpp"

// OpenMP kernels. Parallelism is always across independent output elements,
// and inner loops are restructured so the hot path runs along contiguous rows,
// but every accumulated value receives its terms in the same order as the
// serial reference in kernels_serial.cpp (contracts listed there). That makes
// results bitwise identical for any thread count. Out-of-bounds (zero-pad)
// terms are skipped via index ranges, never added as literal zeros, to match
// the reference exactly.

namespace rootscore::nn::kernels::par {

namespace {

inline size_t idx4(int a, int b, int c, int d, int nb, int nc, int nd) {
  return (((size_t)a * nb + b) * nc + c) * nd + d;
}

}  // namespace

void conv2d_forward(const float* in, const float* weight, const float* bias,
                    float* out, const ConvShape& s) {
  const int oh = s.out_h(), ow = s.out_w();
  const size_t in_plane = (size_t)s.h * s.w;
  const size_t out_plane = (size_t)oh * ow;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < s.n; ++n)
    for (int f = 0; f < s.c_out; ++f) {
      float* o = out + ((size_t)n * s.c_out + f) * out_plane;
      const float b = bias ? bias[f] : 0.0f;
      for (size_t j = 0; j < out_plane; ++j) o[j] = b;
      for (int c = 0; c < s.c_in; ++c) {
        const float* ip = in + ((size_t)n * s.c_in + c) * in_plane;
        const float* wp = weight + idx4(f, c, 0, 0, s.c_in, s.k, s.k);
        for (int ky = 0; ky < s.k; ++ky) {
          const int oy_lo = std::max(0, s.pad - ky);
          const int oy_hi = std::min(oh, s.h + s.pad - ky);
          for (int kx = 0; kx < s.k; ++kx) {
            const float ws = wp[ky * s.k + kx];
            const int ox_lo = std::max(0, s.pad - kx);
            const int ox_hi = std::min(ow, s.w + s.pad - kx);
            const int shift = kx - s.pad;
            for (int oy = oy_lo; oy < oy_hi; ++oy) {
              const float* irow = ip + (size_t)(oy + ky - s.pad) * s.w;
              float* orow = o + (size_t)oy * ow;
              for (int ox = ox_lo; ox < ox_hi; ++ox)
                orow[ox] += ws * irow[ox + shift];
            }
          }
        }
      }
    }
}

void conv2d_grad_input(const float* d_out, const float* weight, float* d_in,
                       const ConvShape& s) {
  const int oh = s.out_h(), ow = s.out_w();
  const size_t in_plane = (size_t)s.h * s.w;
  const size_t out_plane = (size_t)oh * ow;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c_in; ++c) {
      float* di = d_in + ((size_t)n * s.c_in + c) * in_plane;
      for (int f = 0; f < s.c_out; ++f) {
        const float* dop = d_out + ((size_t)n * s.c_out + f) * out_plane;
        const float* wp = weight + idx4(f, c, 0, 0, s.c_in, s.k, s.k);
        for (int ky = 0; ky < s.k; ++ky) {
          const int iy_lo = std::max(0, ky - s.pad);
          const int iy_hi = std::min(s.h, oh + ky - s.pad);
          for (int kx = 0; kx < s.k; ++kx) {
            const float ws = wp[ky * s.k + kx];
            const int ix_lo = std::max(0, kx - s.pad);
            const int ix_hi = std::min(s.w, ow + kx - s.pad);
            const int shift = s.pad - kx;
            for (int iy = iy_lo; iy < iy_hi; ++iy) {
              const float* drow = dop + (size_t)(iy + s.pad - ky) * ow;
              float* irow = di + (size_t)iy * s.w;
              for (int ix = ix_lo; ix < ix_hi; ++ix)
                irow[ix] += ws * drow[ix + shift];
            }
          }
        }
      }
    }
}

void conv2d_grad_weight(const float* d_out, const float* in, float* d_weight,
                        const ConvShape& s) {
  const int oh = s.out_h(), ow = s.out_w();
  const size_t in_plane = (size_t)s.h * s.w;
  const size_t out_plane = (size_t)oh * ow;
#pragma omp parallel for collapse(2) schedule(static)
  for (int f = 0; f < s.c_out; ++f)
    for (int c = 0; c < s.c_in; ++c)
      for (int ky = 0; ky < s.k; ++ky) {
        // one running sum per kx: independent accumulator chains
        float acc[16];
        for (int kx = 0; kx < s.k; ++kx) acc[kx] = 0.0f;
        for (int n = 0; n < s.n; ++n) {
          const float* dop = d_out + ((size_t)n * s.c_out + f) * out_plane;
          const float* ip = in + ((size_t)n * s.c_in + c) * in_plane;
          const int oy_lo = std::max(0, s.pad - ky);
          const int oy_hi = std::min(oh, s.h + s.pad - ky);
          for (int oy = oy_lo; oy < oy_hi; ++oy) {
            const float* drow = dop + (size_t)oy * ow;
            const float* irow = ip + (size_t)(oy + ky - s.pad) * s.w;
            for (int ox = 0; ox < ow; ++ox) {
              const float d = drow[ox];
              for (int kx = 0; kx < s.k; ++kx) {
                const int ix = ox + kx - s.pad;
                if (ix < 0 || ix >= s.w) continue;
                acc[kx] += d * irow[ix];
              }
            }
          }
        }
        for (int kx = 0; kx < s.k; ++kx)
          d_weight[idx4(f, c, ky, kx, s.c_in, s.k, s.k)] += acc[kx];
      }
}

void conv2d_grad_bias(const float* d_out, float* d_bias, const ConvShape& s) {
  const int oh = s.out_h(), ow = s.out_w();
  const size_t out_plane = (size_t)oh * ow;
#pragma omp parallel for schedule(static)
  for (int f = 0; f < s.c_out; ++f) {
    float acc = 0.0f;
    for (int n = 0; n < s.n; ++n) {
      const float* dop = d_out + ((size_t)n * s.c_out + f) * out_plane;
      for (size_t j = 0; j < out_plane; ++j) acc += dop[j];
    }
    d_bias[f] += acc;
  }
}

void upconv2x2_forward(const float* in, const float* weight, float* out,
                       const UpconvShape& s) {
  const int gs = s.c_out(), oh = s.h * 2, ow = s.w * 2;
  const size_t in_plane = (size_t)s.h * s.w;
  const size_t out_plane = (size_t)oh * ow;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < s.n; ++n)
    for (int g = 0; g < gs; ++g) {
      float* o = out + ((size_t)n * gs + g) * out_plane;
      for (size_t j = 0; j < out_plane; ++j) o[j] = 0.0f;
      for (int c = 0; c < s.c_in; ++c) {
        const float* ip = in + ((size_t)n * s.c_in + c) * in_plane;
        const float* wp = weight + idx4(c, g, 0, 0, gs, 2, 2);
        for (int oy = 0; oy < oh; ++oy) {
          const float* irow = ip + (size_t)(oy / 2) * s.w;
          const float w0 = wp[(oy % 2) * 2], w1 = wp[(oy % 2) * 2 + 1];
          float* orow = o + (size_t)oy * ow;
          for (int ix = 0; ix < s.w; ++ix) {
            orow[2 * ix] += irow[ix] * w0;
            orow[2 * ix + 1] += irow[ix] * w1;
          }
        }
      }
    }
}

void upconv2x2_grad_input(const float* d_out, const float* weight, float* d_in,
                          const UpconvShape& s) {
  const int gs = s.c_out(), ow = s.w * 2;
  const size_t in_plane = (size_t)s.h * s.w;
  const size_t out_plane = (size_t)s.h * 2 * ow;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c_in; ++c) {
      float* di = d_in + ((size_t)n * s.c_in + c) * in_plane;
      for (int g = 0; g < gs; ++g) {
        const float* dop = d_out + ((size_t)n * gs + g) * out_plane;
        const float* wp = weight + idx4(c, g, 0, 0, gs, 2, 2);
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const float ws = wp[dy * 2 + dx];
            for (int iy = 0; iy < s.h; ++iy) {
              const float* drow = dop + (size_t)(2 * iy + dy) * ow + dx;
              float* irow = di + (size_t)iy * s.w;
              for (int ix = 0; ix < s.w; ++ix) irow[ix] += ws * drow[2 * ix];
            }
          }
      }
    }
}

void upconv2x2_grad_weight(const float* d_out, const float* in, float* d_weight,
                           const UpconvShape& s) {
  const int gs = s.c_out(), ow = s.w * 2;
  const size_t in_plane = (size_t)s.h * s.w;
  const size_t out_plane = (size_t)s.h * 2 * ow;
#pragma omp parallel for collapse(2) schedule(static)
  for (int c = 0; c < s.c_in; ++c)
    for (int g = 0; g < gs; ++g)
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          float acc = 0.0f;
          for (int n = 0; n < s.n; ++n) {
            const float* ip = in + ((size_t)n * s.c_in + c) * in_plane;
            const float* dop = d_out + ((size_t)n * gs + g) * out_plane;
            for (int iy = 0; iy < s.h; ++iy) {
              const float* irow = ip + (size_t)iy * s.w;
              const float* drow = dop + (size_t)(2 * iy + dy) * ow + dx;
              for (int ix = 0; ix < s.w; ++ix) acc += irow[ix] * drow[2 * ix];
            }
          }
          d_weight[idx4(c, g, dy, dx, gs, 2, 2)] += acc;
        }
}

void relu_forward(const float* in, float* out, size_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < (int64_t)n; ++i)
    out[i] = in[i] > 0.0f ? in[i] : 0.0f;
}

void relu_grad(const float* out, const float* d_out, float* d_in, size_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < (int64_t)n; ++i)
    d_in[i] += out[i] > 0.0f ? d_out[i] : 0.0f;
}

void maxpool2x2_forward(const float* in, float* out, int32_t* argmax, int n,
                        int c, int h, int w) {
  const int oh = h / 2, ow = w / 2;
#pragma omp parallel for collapse(2) schedule(static)
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
#pragma omp parallel for collapse(2) schedule(static)
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
#pragma omp parallel for schedule(static)
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
#pragma omp parallel for collapse(2) schedule(static)
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
#pragma omp parallel for schedule(static)
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
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < n; ++i)
    for (int y = 0; y < h; ++y) {
      const float* base = in + (size_t)i * c * plane + (size_t)y * w;
      float* obase = out + (size_t)i * c * plane + (size_t)y * w;
      for (int x = 0; x < w; ++x) {
        float m = base[x];
        for (int ch = 1; ch < c; ++ch)
          m = std::max(m, base[ch * plane + x]);
        float sum = 0.0f;
        for (int ch = 0; ch < c; ++ch) {
          const float e = std::exp(base[ch * plane + x] - m);
          obase[ch * plane + x] = e;
          sum += e;
        }
        const float inv = 1.0f / sum;
        for (int ch = 0; ch < c; ++ch) obase[ch * plane + x] *= inv;
      }
    }
}

void softmax_channels_grad(const float* out, const float* d_out, float* d_in,
                           int n, int c, int h, int w) {
  const size_t plane = (size_t)h * w;
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < n; ++i)
    for (int y = 0; y < h; ++y) {
      const float* p = out + (size_t)i * c * plane + (size_t)y * w;
      const float* dy = d_out + (size_t)i * c * plane + (size_t)y * w;
      float* dx = d_in + (size_t)i * c * plane + (size_t)y * w;
      for (int x = 0; x < w; ++x) {
        float dot = 0.0f;
        for (int ch = 0; ch < c; ++ch) dot += dy[ch * plane + x] * p[ch * plane + x];
        for (int ch = 0; ch < c; ++ch)
          dx[ch * plane + x] += p[ch * plane + x] * (dy[ch * plane + x] - dot);
      }
    }
}

}  // namespace rootscore::nn::kernels::par
