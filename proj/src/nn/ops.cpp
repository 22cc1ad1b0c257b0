#include "fv/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace fv::nn {
namespace {

using std::int64_t;

// Output pixels are processed in strips so the im2col buffer stays a few MB
// regardless of image size. Strip length is a multiple of the GEMM tile.
constexpr int64_t kStrip = 16384;
constexpr int64_t kMr = 4;
constexpr int64_t kNr = 32;

// C[M x N] += A[M x K] * B[K x N], row-major with leading dimensions.
// Each C element accumulates over k in ascending order, so results are
// identical from run to run.
void gemm_nn(int64_t M, int64_t N, int64_t K, const float* __restrict A,
             int64_t lda, const float* __restrict B, int64_t ldb,
             float* __restrict C, int64_t ldc) {
  int64_t i = 0;
  for (; i + kMr <= M; i += kMr) {
    int64_t j = 0;
    for (; j + kNr <= N; j += kNr) {
      float acc[kMr][kNr];
      for (int64_t r = 0; r < kMr; ++r)
        for (int64_t t = 0; t < kNr; ++t) acc[r][t] = C[(i + r) * ldc + j + t];
      const float* a0 = A + (i + 0) * lda;
      const float* a1 = A + (i + 1) * lda;
      const float* a2 = A + (i + 2) * lda;
      const float* a3 = A + (i + 3) * lda;
      for (int64_t k = 0; k < K; ++k) {
        const float* bp = B + k * ldb + j;
        const float x0 = a0[k], x1 = a1[k], x2 = a2[k], x3 = a3[k];
        for (int64_t t = 0; t < kNr; ++t) {
          const float b = bp[t];
          acc[0][t] += x0 * b;
          acc[1][t] += x1 * b;
          acc[2][t] += x2 * b;
          acc[3][t] += x3 * b;
        }
      }
      for (int64_t r = 0; r < kMr; ++r)
        for (int64_t t = 0; t < kNr; ++t) C[(i + r) * ldc + j + t] = acc[r][t];
    }
    for (; j < N; ++j) {
      for (int64_t r = 0; r < kMr; ++r) {
        const float* ar = A + (i + r) * lda;
        float acc = C[(i + r) * ldc + j];
        for (int64_t k = 0; k < K; ++k) acc += ar[k] * B[k * ldb + j];
        C[(i + r) * ldc + j] = acc;
      }
    }
  }
  for (; i < M; ++i) {
    const float* ar = A + i * lda;
    int64_t j = 0;
    for (; j + kNr <= N; j += kNr) {
      float acc[kNr];
      for (int64_t t = 0; t < kNr; ++t) acc[t] = C[i * ldc + j + t];
      for (int64_t k = 0; k < K; ++k) {
        const float* bp = B + k * ldb + j;
        const float x = ar[k];
        for (int64_t t = 0; t < kNr; ++t) acc[t] += x * bp[t];
      }
      for (int64_t t = 0; t < kNr; ++t) C[i * ldc + j + t] = acc[t];
    }
    for (; j < N; ++j) {
      float acc = C[i * ldc + j];
      for (int64_t k = 0; k < K; ++k) acc += ar[k] * B[k * ldb + j];
      C[i * ldc + j] = acc;
    }
  }
}

// Dot product with sixteen fixed lanes: vectorisable without reassociation
// and bit-stable across runs.
float dot(const float* __restrict a, const float* __restrict b, int64_t n) {
  float acc[16] = {};
  int64_t i = 0;
  for (; i + 16 <= n; i += 16)
    for (int l = 0; l < 16; ++l) acc[l] += a[i + l] * b[i + l];
  float tail = 0.f;
  for (; i < n; ++i) tail += a[i] * b[i];
  for (int s = 8; s > 0; s >>= 1)
    for (int l = 0; l < s; ++l) acc[l] += acc[l + s];
  return acc[0] + tail;
}

// C[M x K2] += A[M x N] * B[K2 x N]^T
void gemm_nt(int64_t M, int64_t N, int64_t K2, const float* A, int64_t lda,
             const float* B, int64_t ldb, float* C, int64_t ldc) {
  for (int64_t i = 0; i < M; ++i)
    for (int64_t k = 0; k < K2; ++k)
      C[i * ldc + k] += dot(A + i * lda, B + k * ldb, N);
}

void im2col_strip(const float* x, int64_t cin, int64_t h, int64_t w, int64_t kh,
                  int64_t kw, int stride, int pad, int64_t ow, int64_t p0,
                  int64_t p1, float* col) {
  const int64_t S = p1 - p0;
  int64_t r = 0;
  for (int64_t ci = 0; ci < cin; ++ci) {
    const float* plane = x + ci * h * w;
    for (int64_t ky = 0; ky < kh; ++ky) {
      for (int64_t kx = 0; kx < kw; ++kx, ++r) {
        float* dst = col + r * S;
        int64_t oy = p0 / ow;
        int64_t ox = p0 % ow;
        for (int64_t j = 0; j < S; ++j) {
          const int64_t iy = oy * stride - pad + ky;
          const int64_t ix = ox * stride - pad + kx;
          dst[j] = (iy >= 0 && iy < h && ix >= 0 && ix < w) ? plane[iy * w + ix] : 0.f;
          if (++ox == ow) {
            ox = 0;
            ++oy;
          }
        }
      }
    }
  }
}

void col2im_add_strip(const float* col, int64_t cin, int64_t h, int64_t w,
                      int64_t kh, int64_t kw, int stride, int pad, int64_t ow,
                      int64_t p0, int64_t p1, float* x) {
  const int64_t S = p1 - p0;
  int64_t r = 0;
  for (int64_t ci = 0; ci < cin; ++ci) {
    float* plane = x + ci * h * w;
    for (int64_t ky = 0; ky < kh; ++ky) {
      for (int64_t kx = 0; kx < kw; ++kx, ++r) {
        const float* src = col + r * S;
        int64_t oy = p0 / ow;
        int64_t ox = p0 % ow;
        for (int64_t j = 0; j < S; ++j) {
          const int64_t iy = oy * stride - pad + ky;
          const int64_t ix = ox * stride - pad + kx;
          if (iy >= 0 && iy < h && ix >= 0 && ix < w) plane[iy * w + ix] += src[j];
          if (++ox == ow) {
            ox = 0;
            ++oy;
          }
        }
      }
    }
  }
}

}  // namespace

Conv2dParams make_conv(int64_t c_out, int64_t c_in, int64_t kh, int64_t kw,
                       int stride, int pad) {
  if (c_out <= 0 || c_in <= 0 || kh <= 0 || kw <= 0)
    throw ParamError("conv: channel and kernel dims must be positive");
  if (stride < 1) throw ParamError("conv: stride must be >= 1");
  if (pad < 0) throw ParamError("conv: padding must be >= 0");
  Conv2dParams p;
  p.weight = Tensor({c_out, c_in, kh, kw});
  p.bias = Tensor({1, c_out, 1, 1});
  p.stride = stride;
  p.pad = pad;
  return p;
}

Shape conv2d_out_shape(const Shape& in, const Conv2dParams& p) {
  if (p.stride < 1) throw ParamError("conv2d: stride must be >= 1");
  if (p.pad < 0) throw ParamError("conv2d: padding must be >= 0");
  if (in.c != p.in_channels())
    throw ParamError("conv2d: input has " + std::to_string(in.c) +
                     " channels, weight expects " + std::to_string(p.in_channels()));
  const Shape bs = p.bias.shape();
  if (bs.n != 1 || bs.c != p.out_channels() || bs.h != 1 || bs.w != 1)
    throw ParamError("conv2d: bias shape " + bs.str() + " does not match weight");
  const int64_t ph = in.h + 2 * p.pad;
  const int64_t pw = in.w + 2 * p.pad;
  if (ph < p.kh() || pw < p.kw())
    throw GeometryError("conv2d: kernel " + std::to_string(p.kh()) + "x" +
                        std::to_string(p.kw()) + " exceeds padded input " +
                        std::to_string(ph) + "x" + std::to_string(pw));
  Shape out;
  out.n = in.n;
  out.c = p.out_channels();
  out.h = (ph - p.kh()) / p.stride + 1;
  out.w = (pw - p.kw()) / p.stride + 1;
  return out;
}

Tensor conv2d(const Tensor& x, const Conv2dParams& p) {
  const Shape os = conv2d_out_shape(x.shape(), p);
  Tensor out(os);
  const Shape is = x.shape();
  const int64_t K = p.in_channels() * p.kh() * p.kw();
  const int64_t P = os.h * os.w;
  const int64_t M = os.c;
  std::vector<float> col(static_cast<std::size_t>(K * std::min(P, kStrip)));
  const float* bias = p.bias.data();
  for (int64_t n = 0; n < is.n; ++n) {
    const float* xn = x.data() + n * is.c * is.h * is.w;
    float* on = out.data() + n * M * P;
    for (int64_t p0 = 0; p0 < P; p0 += kStrip) {
      const int64_t p1 = std::min(P, p0 + kStrip);
      const int64_t S = p1 - p0;
      im2col_strip(xn, is.c, is.h, is.w, p.kh(), p.kw(), p.stride, p.pad, os.w,
                   p0, p1, col.data());
      for (int64_t m = 0; m < M; ++m)
        std::fill(on + m * P + p0, on + m * P + p1, bias[m]);
      gemm_nn(M, S, K, p.weight.data(), K, col.data(), S, on + p0, P);
    }
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& x, const Conv2dParams& p,
                            const Tensor& grad_out) {
  const Shape os = conv2d_out_shape(x.shape(), p);
  if (!(grad_out.shape() == os))
    throw ParamError("conv2d_backward: grad shape " + grad_out.shape().str() +
                     " does not match forward output " + os.str());
  const Shape is = x.shape();
  Conv2dGrads g;
  g.x = Tensor(is);
  g.weight = Tensor(p.weight.shape());
  g.bias = Tensor(p.bias.shape());

  const int64_t K = p.in_channels() * p.kh() * p.kw();
  const int64_t P = os.h * os.w;
  const int64_t M = os.c;

  for (int64_t m = 0; m < M; ++m) {
    double s = 0.0;
    for (int64_t n = 0; n < os.n; ++n) {
      const float* gp = grad_out.data() + (n * M + m) * P;
      for (int64_t i = 0; i < P; ++i) s += gp[i];
    }
    g.bias.data()[m] = static_cast<float>(s);
  }

  std::vector<float> wt(static_cast<std::size_t>(K * M));
  for (int64_t m = 0; m < M; ++m)
    for (int64_t k = 0; k < K; ++k) wt[k * M + m] = p.weight.data()[m * K + k];

  const int64_t S_max = std::min(P, kStrip);
  std::vector<float> col(static_cast<std::size_t>(K * S_max));
  std::vector<float> dcol(static_cast<std::size_t>(K * S_max));

  for (int64_t n = 0; n < is.n; ++n) {
    const float* xn = x.data() + n * is.c * is.h * is.w;
    const float* gn = grad_out.data() + n * M * P;
    float* gxn = g.x.data() + n * is.c * is.h * is.w;
    for (int64_t p0 = 0; p0 < P; p0 += kStrip) {
      const int64_t p1 = std::min(P, p0 + kStrip);
      const int64_t S = p1 - p0;
      im2col_strip(xn, is.c, is.h, is.w, p.kh(), p.kw(), p.stride, p.pad, os.w,
                   p0, p1, col.data());
      gemm_nt(M, S, K, gn + p0, P, col.data(), S, g.weight.data(), K);
      std::fill(dcol.begin(), dcol.begin() + K * S, 0.f);
      gemm_nn(K, S, M, wt.data(), M, gn + p0, P, dcol.data(), S);
      col2im_add_strip(dcol.data(), is.c, is.h, is.w, p.kh(), p.kw(), p.stride,
                       p.pad, os.w, p0, p1, gxn);
    }
  }
  return g;
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  const float* px = x.data();
  float* po = out.data();
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) po[i] = px[i] > 0.f ? px[i] : 0.f;
  return out;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  if (!(x.shape() == grad_out.shape()))
    throw ParamError("relu_backward: shape mismatch");
  Tensor g(x.shape());
  const float* px = x.data();
  const float* pg = grad_out.data();
  float* po = g.data();
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) po[i] = px[i] > 0.f ? pg[i] : 0.f;
  return g;
}

BatchNormParams make_batchnorm(int64_t channels, float eps, float momentum) {
  if (channels <= 0) throw ParamError("batchnorm: channels must be positive");
  if (!(eps > 0.f)) throw ParamError("batchnorm: eps must be positive");
  if (momentum < 0.f || momentum > 1.f)
    throw ParamError("batchnorm: momentum must lie in [0, 1]");
  BatchNormParams p;
  p.gamma = Tensor({1, channels, 1, 1}, 1.f);
  p.beta = Tensor({1, channels, 1, 1}, 0.f);
  p.running_mean = Tensor({1, channels, 1, 1}, 0.f);
  p.running_var = Tensor({1, channels, 1, 1}, 1.f);
  p.eps = eps;
  p.momentum = momentum;
  return p;
}

Tensor batchnorm(const Tensor& x, BatchNormParams& p, BnCache* cache) {
  const Shape s = x.shape();
  const int64_t C = p.gamma.shape().c;
  if (s.c != C)
    throw ParamError("batchnorm: input has " + std::to_string(s.c) +
                     " channels, params have " + std::to_string(C));
  const int64_t plane = s.h * s.w;
  const int64_t m = s.n * plane;
  Tensor out(s);
  const float* gam = p.gamma.data();
  const float* bet = p.beta.data();

  if (p.mode == BnMode::train) {
    if (m < 2)
      throw NumericError("batchnorm: train mode needs >= 2 values per channel, got " +
                         std::to_string(m));
    if (cache) {
      cache->x_hat = Tensor(s);
      cache->inv_std.assign(static_cast<std::size_t>(C), 0.f);
      cache->count = m;
    }
    for (int64_t c = 0; c < C; ++c) {
      double sum = 0.0;
      for (int64_t n = 0; n < s.n; ++n) {
        const float* px = x.data() + (n * C + c) * plane;
        for (int64_t i = 0; i < plane; ++i) sum += px[i];
      }
      const double mean = sum / static_cast<double>(m);
      double ss = 0.0;
      for (int64_t n = 0; n < s.n; ++n) {
        const float* px = x.data() + (n * C + c) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          const double d = px[i] - mean;
          ss += d * d;
        }
      }
      const double var = ss / static_cast<double>(m);
      const double inv_std = 1.0 / std::sqrt(var + p.eps);
      const float gc = gam[c];
      const float bc = bet[c];
      for (int64_t n = 0; n < s.n; ++n) {
        const float* px = x.data() + (n * C + c) * plane;
        float* po = out.data() + (n * C + c) * plane;
        float* ph = cache ? cache->x_hat.data() + (n * C + c) * plane : nullptr;
        for (int64_t i = 0; i < plane; ++i) {
          const float xh = static_cast<float>((px[i] - mean) * inv_std);
          po[i] = gc * xh + bc;
          if (ph) ph[i] = xh;
        }
      }
      if (cache) cache->inv_std[static_cast<std::size_t>(c)] = static_cast<float>(inv_std);
      const double unbiased = var * static_cast<double>(m) / static_cast<double>(m - 1);
      float* rm = p.running_mean.data();
      float* rv = p.running_var.data();
      rm[c] = static_cast<float>((1.0 - p.momentum) * rm[c] + p.momentum * mean);
      rv[c] = static_cast<float>((1.0 - p.momentum) * rv[c] + p.momentum * unbiased);
    }
  } else {
    if (cache) {
      cache->x_hat = Tensor();
      cache->inv_std.clear();
      cache->count = 0;
    }
    const float* rm = p.running_mean.data();
    const float* rv = p.running_var.data();
    for (int64_t c = 0; c < C; ++c) {
      if (!(rv[c] > 0.f))
        throw NumericError("batchnorm: running variance must stay positive, channel " +
                           std::to_string(c));
      const float mu = rm[c];
      const float iv = static_cast<float>(1.0 / std::sqrt(static_cast<double>(rv[c]) + p.eps));
      const float gc = gam[c];
      const float bc = bet[c];
      for (int64_t n = 0; n < s.n; ++n) {
        const float* px = x.data() + (n * C + c) * plane;
        float* po = out.data() + (n * C + c) * plane;
        for (int64_t i = 0; i < plane; ++i) po[i] = gc * (px[i] - mu) * iv + bc;
      }
    }
  }
  return out;
}

BnGrads batchnorm_backward(const BnCache& cache, const BatchNormParams& p,
                           const Tensor& grad_out) {
  if (cache.count == 0 || cache.x_hat.numel() == 0)
    throw ParamError("batchnorm_backward: requires a cache from a train-mode forward");
  const Shape s = cache.x_hat.shape();
  if (!(grad_out.shape() == s))
    throw ParamError("batchnorm_backward: grad shape mismatch");
  const int64_t C = s.c;
  const int64_t plane = s.h * s.w;
  const double m = static_cast<double>(cache.count);

  BnGrads g;
  g.x = Tensor(s);
  g.gamma = Tensor(p.gamma.shape());
  g.beta = Tensor(p.beta.shape());

  for (int64_t c = 0; c < C; ++c) {
    double sg = 0.0;
    double sgx = 0.0;
    for (int64_t n = 0; n < s.n; ++n) {
      const float* pg = grad_out.data() + (n * C + c) * plane;
      const float* ph = cache.x_hat.data() + (n * C + c) * plane;
      for (int64_t i = 0; i < plane; ++i) {
        sg += pg[i];
        sgx += static_cast<double>(pg[i]) * ph[i];
      }
    }
    g.beta.data()[c] = static_cast<float>(sg);
    g.gamma.data()[c] = static_cast<float>(sgx);
    const double coef =
        static_cast<double>(p.gamma.data()[c]) * cache.inv_std[static_cast<std::size_t>(c)] / m;
    for (int64_t n = 0; n < s.n; ++n) {
      const float* pg = grad_out.data() + (n * C + c) * plane;
      const float* ph = cache.x_hat.data() + (n * C + c) * plane;
      float* po = g.x.data() + (n * C + c) * plane;
      for (int64_t i = 0; i < plane; ++i)
        po[i] = static_cast<float>(coef * (m * pg[i] - sg - ph[i] * sgx));
    }
  }
  return g;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out(x.shape());
  const float* px = x.data();
  float* po = out.data();
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) {
    const float v = px[i];
    if (v >= 0.f) {
      po[i] = 1.f / (1.f + std::exp(-v));
    } else {
      const float e = std::exp(v);
      po[i] = e / (1.f + e);
    }
  }
  return out;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out) {
  if (!(y.shape() == grad_out.shape()))
    throw ParamError("sigmoid_backward: shape mismatch");
  Tensor g(y.shape());
  const float* py = y.data();
  const float* pg = grad_out.data();
  float* po = g.data();
  const int64_t n = y.numel();
  for (int64_t i = 0; i < n; ++i) po[i] = pg[i] * py[i] * (1.f - py[i]);
  return g;
}

Tensor upsample_nearest(const Tensor& x, int factor) {
  if (factor < 1) throw ParamError("upsample: factor must be >= 1");
  const Shape s = x.shape();
  Tensor out({s.n, s.c, s.h * factor, s.w * factor});
  const int64_t oh = s.h * factor;
  const int64_t ow = s.w * factor;
  for (int64_t nc = 0; nc < s.n * s.c; ++nc) {
    const float* src = x.data() + nc * s.h * s.w;
    float* dst = out.data() + nc * oh * ow;
    for (int64_t y = 0; y < oh; ++y) {
      const float* srow = src + (y / factor) * s.w;
      float* drow = dst + y * ow;
      for (int64_t xo = 0; xo < ow; ++xo) drow[xo] = srow[xo / factor];
    }
  }
  return out;
}

Tensor upsample_nearest_backward(const Shape& in_shape, int factor,
                                 const Tensor& grad_out) {
  if (factor < 1) throw ParamError("upsample: factor must be >= 1");
  const Shape gs = grad_out.shape();
  if (gs.n != in_shape.n || gs.c != in_shape.c || gs.h != in_shape.h * factor ||
      gs.w != in_shape.w * factor)
    throw ParamError("upsample_backward: grad shape " + gs.str() +
                     " does not match input " + in_shape.str() + " x" +
                     std::to_string(factor));
  Tensor g(in_shape);
  for (int64_t nc = 0; nc < in_shape.n * in_shape.c; ++nc) {
    float* dst = g.data() + nc * in_shape.h * in_shape.w;
    const float* src = grad_out.data() + nc * gs.h * gs.w;
    for (int64_t y = 0; y < gs.h; ++y) {
      float* drow = dst + (y / factor) * in_shape.w;
      const float* srow = src + y * gs.w;
      for (int64_t xo = 0; xo < gs.w; ++xo) drow[xo / factor] += srow[xo];
    }
  }
  return g;
}

Tensor concat_channels(const std::vector<const Tensor*>& xs) {
  if (xs.empty()) throw ParamError("concat: needs at least one input");
  const Shape s0 = xs[0]->shape();
  int64_t ctot = 0;
  for (const Tensor* t : xs) {
    const Shape s = t->shape();
    if (s.n != s0.n || s.h != s0.h || s.w != s0.w)
      throw ParamError("concat: inputs disagree on batch or spatial dims: " +
                       s0.str() + " vs " + s.str());
    ctot += s.c;
  }
  Tensor out({s0.n, ctot, s0.h, s0.w});
  const int64_t plane = s0.h * s0.w;
  for (int64_t n = 0; n < s0.n; ++n) {
    float* dst = out.data() + n * ctot * plane;
    for (const Tensor* t : xs) {
      const int64_t c = t->shape().c;
      std::memcpy(dst, t->data() + n * c * plane,
                  static_cast<std::size_t>(c * plane) * sizeof(float));
      dst += c * plane;
    }
  }
  return out;
}

std::vector<Tensor> concat_channels_backward(const std::vector<Shape>& in_shapes,
                                             const Tensor& grad_out) {
  if (in_shapes.empty()) throw ParamError("concat_backward: needs input shapes");
  const Shape gs = grad_out.shape();
  int64_t ctot = 0;
  for (const Shape& s : in_shapes) ctot += s.c;
  if (ctot != gs.c)
    throw ParamError("concat_backward: channel totals disagree");
  std::vector<Tensor> grads;
  grads.reserve(in_shapes.size());
  const int64_t plane = gs.h * gs.w;
  int64_t coff = 0;
  for (const Shape& s : in_shapes) {
    if (s.n != gs.n || s.h != gs.h || s.w != gs.w)
      throw ParamError("concat_backward: shape mismatch");
    Tensor g(s);
    for (int64_t n = 0; n < gs.n; ++n)
      std::memcpy(g.data() + n * s.c * plane,
                  grad_out.data() + (n * ctot + coff) * plane,
                  static_cast<std::size_t>(s.c * plane) * sizeof(float));
    coff += s.c;
    grads.push_back(std::move(g));
  }
  return grads;
}

double bce_loss(const Tensor& y, const Tensor& target) {
  if (!(y.shape() == target.shape()))
    throw ParamError("bce_loss: shape mismatch " + y.shape().str() + " vs " +
                     target.shape().str());
  const float* py = y.data();
  const float* pt = target.data();
  const int64_t n = y.numel();
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double yc = std::clamp<double>(py[i], kBceEps, 1.0 - kBceEps);
    const double t = pt[i];
    acc -= t * std::log(yc) + (1.0 - t) * std::log(1.0 - yc);
  }
  return acc / static_cast<double>(n);
}

Tensor bce_loss_backward(const Tensor& y, const Tensor& target) {
  if (!(y.shape() == target.shape()))
    throw ParamError("bce_loss_backward: shape mismatch");
  Tensor g(y.shape());
  const float* py = y.data();
  const float* pt = target.data();
  float* po = g.data();
  const int64_t n = y.numel();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int64_t i = 0; i < n; ++i) {
    const double yc = std::clamp<double>(py[i], kBceEps, 1.0 - kBceEps);
    const double t = pt[i];
    po[i] = static_cast<float>((yc - t) / (yc * (1.0 - yc)) * inv_n);
  }
  return g;
}

}  // namespace fv::nn
