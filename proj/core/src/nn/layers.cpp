#include "crackdet/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "crackdet/errors.hpp"
#include "crackdet/nn/gemm.hpp"

namespace crackdet::nn {

namespace {

// TF-style "same" padding: total = max((ceil(n/s)-1)*s + k - n, 0), split
// with the extra pixel at the end.
int same_pad_before(int n, int k, int s) {
  const int out = (n + s - 1) / s;
  const int total = std::max((out - 1) * s + k - n, 0);
  return total / 2;
}

int out_dim(int n, int k, int s, Padding p) {
  if (p == Padding::Same) return (n + s - 1) / s;
  return (n - k) / s + 1;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

float glorot_limit(int fan_in, int fan_out) {
  return std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
}

void init_uniform(Tensor& t, Rng& rng, float limit) {
  for (float& v : t.flat()) v = rng.uniform_f(-limit, limit);
}

}  // namespace

Param& Layer::add_param(const std::string& suffix, std::vector<int> shape,
                        bool optimizable) {
  Param p;
  p.name = name_ + "." + suffix;
  p.value = Tensor(shape);
  p.grad = Tensor(std::move(shape));
  p.optimizable = optimizable;
  params_.push_back(std::move(p));
  return params_.back();
}

// ---------------------------------------------------------------- Conv2D

Shape3 Conv2D::infer(const std::vector<Shape3>& in) {
  require(in.size() == 1 && !in[0].is_vector(), name_ + ": conv2d wants one NHWC input");
  in_shape_ = in[0];
  require(cfg_.padding == Padding::Same ||
              (in_shape_.h >= cfg_.kh && in_shape_.w >= cfg_.kw),
          name_ + ": kernel larger than input under valid padding");
  out_shape_ = {out_dim(in_shape_.h, cfg_.kh, cfg_.sh, cfg_.padding),
                out_dim(in_shape_.w, cfg_.kw, cfg_.sw, cfg_.padding), cfg_.filters};
  if (cfg_.padding == Padding::Same) {
    pad_top_ = same_pad_before(in_shape_.h, cfg_.kh, cfg_.sh);
    pad_left_ = same_pad_before(in_shape_.w, cfg_.kw, cfg_.sw);
  }
  add_param("w", {cfg_.kh, cfg_.kw, in_shape_.c, cfg_.filters});
  if (cfg_.use_bias) add_param("b", {cfg_.filters});
  return out_shape_;
}

void Conv2D::init_params(Rng& rng) {
  const int fan_in = cfg_.kh * cfg_.kw * in_shape_.c;
  const int fan_out = cfg_.kh * cfg_.kw * cfg_.filters;
  init_uniform(params_[0].value, rng, glorot_limit(fan_in, fan_out));
}

namespace {

// Fill `rows` im2col rows starting at output pixel `row0` of sample `n`.
void im2col_rows(const float* x, int H, int W, int C, int kh, int kw, int sh,
                 int sw, int pad_top, int pad_left, int OW, int row0, int rows,
                 float* col) {
  const int K = kh * kw * C;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const int pix = row0 + r;
    const int oy = pix / OW, ox = pix % OW;
    float* dst = col + static_cast<size_t>(r) * K;
    const int iy0 = oy * sh - pad_top;
    const int ix0 = ox * sw - pad_left;
    for (int ky = 0; ky < kh; ++ky) {
      const int iy = iy0 + ky;
      if (iy < 0 || iy >= H) {
        std::memset(dst, 0, sizeof(float) * static_cast<size_t>(kw) * C);
        dst += kw * C;
        continue;
      }
      for (int kx = 0; kx < kw; ++kx) {
        const int ix = ix0 + kx;
        if (ix < 0 || ix >= W) {
          std::memset(dst, 0, sizeof(float) * C);
        } else {
          std::memcpy(dst, x + (static_cast<size_t>(iy) * W + ix) * C,
                      sizeof(float) * C);
        }
        dst += C;
      }
    }
  }
}

// Scatter-add im2col-layout gradients back into the input gradient.
void col2im_rows(const float* col, int H, int W, int C, int kh, int kw, int sh,
                 int sw, int pad_top, int pad_left, int OW, int row0, int rows,
                 float* dx) {
  const int K = kh * kw * C;
  for (int r = 0; r < rows; ++r) {
    const int pix = row0 + r;
    const int oy = pix / OW, ox = pix % OW;
    const float* src = col + static_cast<size_t>(r) * K;
    const int iy0 = oy * sh - pad_top;
    const int ix0 = ox * sw - pad_left;
    for (int ky = 0; ky < kh; ++ky) {
      const int iy = iy0 + ky;
      if (iy < 0 || iy >= H) {
        src += kw * C;
        continue;
      }
      for (int kx = 0; kx < kw; ++kx) {
        const int ix = ix0 + kx;
        if (ix >= 0 && ix < W) {
          float* d = dx + (static_cast<size_t>(iy) * W + ix) * C;
          for (int c = 0; c < C; ++c) d[c] += src[c];
        }
        src += C;
      }
    }
  }
}

constexpr size_t kColBudgetFloats = 8u << 20;  // 32 MB im2col scratch cap

}  // namespace

void Conv2D::forward(const std::vector<const Tensor*>& in, Tensor& out, bool) {
  const Tensor& x = *in[0];
  const int N = x.dim(0), H = in_shape_.h, W = in_shape_.w, C = in_shape_.c;
  const int OH = out_shape_.h, OW = out_shape_.w, OC = cfg_.filters;
  out = Tensor({N, OH, OW, OC});
  const Tensor& w = params_[0].value;
  const float* bias = cfg_.use_bias ? params_[1].value.data() : nullptr;

  const bool pointwise = cfg_.kh == 1 && cfg_.kw == 1 && cfg_.sh == 1 &&
                         cfg_.sw == 1 && pad_top_ == 0 && pad_left_ == 0;
  if (pointwise) {
    const int rows = N * OH * OW;
    sgemm(false, false, rows, OC, C, 1.0f, x.data(), C, w.data(), OC, 0.0f,
          out.data(), OC);
  } else {
    const int K = cfg_.kh * cfg_.kw * C;
    const int pixels = OH * OW;
    const int chunk = std::max(1, static_cast<int>(std::min<size_t>(
                                      pixels, kColBudgetFloats / static_cast<size_t>(K))));
    std::vector<float> col(static_cast<size_t>(chunk) * K);
    for (int n = 0; n < N; ++n) {
      const float* xn = x.data() + static_cast<size_t>(n) * H * W * C;
      float* on = out.data() + static_cast<size_t>(n) * pixels * OC;
      for (int row0 = 0; row0 < pixels; row0 += chunk) {
        const int rows = std::min(chunk, pixels - row0);
        im2col_rows(xn, H, W, C, cfg_.kh, cfg_.kw, cfg_.sh, cfg_.sw, pad_top_,
                    pad_left_, OW, row0, rows, col.data());
        sgemm(false, false, rows, OC, K, 1.0f, col.data(), K, w.data(), OC,
              0.0f, on + static_cast<size_t>(row0) * OC, OC);
      }
    }
  }
  if (bias) {
    const size_t rows = out.size() / static_cast<size_t>(OC);
    float* o = out.data();
#pragma omp parallel for schedule(static)
    for (long long r = 0; r < static_cast<long long>(rows); ++r) {
      float* row = o + static_cast<size_t>(r) * OC;
      for (int c = 0; c < OC; ++c) row[c] += bias[c];
    }
  }
}

void Conv2D::backward(const std::vector<const Tensor*>& in, const Tensor&,
                      const Tensor& dout, const std::vector<Tensor*>& din) {
  const Tensor& x = *in[0];
  const int N = x.dim(0), H = in_shape_.h, W = in_shape_.w, C = in_shape_.c;
  const int OH = out_shape_.h, OW = out_shape_.w, OC = cfg_.filters;
  Tensor& dw = params_[0].grad;
  const Tensor& w = params_[0].value;

  if (cfg_.use_bias) {
    float* db = params_[1].grad.data();
    const float* g = dout.data();
    const size_t rows = dout.size() / static_cast<size_t>(OC);
    for (size_t r = 0; r < rows; ++r)
      for (int c = 0; c < OC; ++c) db[c] += g[r * OC + c];
  }

  const bool pointwise = cfg_.kh == 1 && cfg_.kw == 1 && cfg_.sh == 1 &&
                         cfg_.sw == 1 && pad_top_ == 0 && pad_left_ == 0;
  if (pointwise) {
    const int rows = N * OH * OW;
    sgemm(true, false, C, OC, rows, 1.0f, x.data(), C, dout.data(), OC, 1.0f,
          dw.data(), OC);
    if (din[0] != nullptr) {
      sgemm(false, true, rows, C, OC, 1.0f, dout.data(), OC, w.data(), OC,
            1.0f, din[0]->data(), C);
    }
    return;
  }

  const int K = cfg_.kh * cfg_.kw * C;
  const int pixels = OH * OW;
  const int chunk = std::max(1, static_cast<int>(std::min<size_t>(
                                    pixels, kColBudgetFloats / static_cast<size_t>(K))));
  std::vector<float> col(static_cast<size_t>(chunk) * K);
  std::vector<float> dcol(din[0] ? col.size() : 0);
  for (int n = 0; n < N; ++n) {
    const float* xn = x.data() + static_cast<size_t>(n) * H * W * C;
    const float* gn = dout.data() + static_cast<size_t>(n) * pixels * OC;
    for (int row0 = 0; row0 < pixels; row0 += chunk) {
      const int rows = std::min(chunk, pixels - row0);
      im2col_rows(xn, H, W, C, cfg_.kh, cfg_.kw, cfg_.sh, cfg_.sw, pad_top_,
                  pad_left_, OW, row0, rows, col.data());
      sgemm(true, false, K, OC, rows, 1.0f, col.data(), K,
            gn + static_cast<size_t>(row0) * OC, OC, 1.0f, dw.data(), OC);
      if (din[0] != nullptr) {
        sgemm(false, true, rows, K, OC, 1.0f,
              gn + static_cast<size_t>(row0) * OC, OC, w.data(), OC, 0.0f,
              dcol.data(), K);
        col2im_rows(dcol.data(), H, W, C, cfg_.kh, cfg_.kw, cfg_.sh, cfg_.sw,
                    pad_top_, pad_left_, OW, row0, rows,
                    din[0]->data() + static_cast<size_t>(n) * H * W * C);
      }
    }
  }
}

// ------------------------------------------------------- DepthwiseConv2D

Shape3 DepthwiseConv2D::infer(const std::vector<Shape3>& in) {
  require(in.size() == 1 && !in[0].is_vector(), name_ + ": depthwise wants one NHWC input");
  in_shape_ = in[0];
  out_shape_ = {out_dim(in_shape_.h, cfg_.kh, cfg_.sh, cfg_.padding),
                out_dim(in_shape_.w, cfg_.kw, cfg_.sw, cfg_.padding), in_shape_.c};
  if (cfg_.padding == Padding::Same) {
    pad_top_ = same_pad_before(in_shape_.h, cfg_.kh, cfg_.sh);
    pad_left_ = same_pad_before(in_shape_.w, cfg_.kw, cfg_.sw);
  }
  add_param("w", {cfg_.kh, cfg_.kw, in_shape_.c});
  if (cfg_.use_bias) add_param("b", {in_shape_.c});
  return out_shape_;
}

void DepthwiseConv2D::init_params(Rng& rng) {
  const int fan_in = cfg_.kh * cfg_.kw;
  init_uniform(params_[0].value, rng, glorot_limit(fan_in, fan_in));
}

void DepthwiseConv2D::forward(const std::vector<const Tensor*>& in, Tensor& out, bool) {
  const Tensor& x = *in[0];
  const int N = x.dim(0), H = in_shape_.h, W = in_shape_.w, C = in_shape_.c;
  const int OH = out_shape_.h, OW = out_shape_.w;
  out = Tensor({N, OH, OW, C});
  const float* w = params_[0].value.data();
  const float* bias = cfg_.use_bias ? params_[1].value.data() : nullptr;

#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n) {
    for (int oy = 0; oy < OH; ++oy) {
      const float* xn = x.data() + static_cast<size_t>(n) * H * W * C;
      float* orow = out.data() + ((static_cast<size_t>(n) * OH + oy) * OW) * C;
      for (int ox = 0; ox < OW; ++ox) {
        float* opix = orow + static_cast<size_t>(ox) * C;
        if (bias)
          std::memcpy(opix, bias, sizeof(float) * static_cast<size_t>(C));
        else
          std::memset(opix, 0, sizeof(float) * static_cast<size_t>(C));
        const int iy0 = oy * cfg_.sh - pad_top_;
        const int ix0 = ox * cfg_.sw - pad_left_;
        for (int ky = 0; ky < cfg_.kh; ++ky) {
          const int iy = iy0 + ky;
          if (iy < 0 || iy >= H) continue;
          for (int kx = 0; kx < cfg_.kw; ++kx) {
            const int ix = ix0 + kx;
            if (ix < 0 || ix >= W) continue;
            const float* xp = xn + (static_cast<size_t>(iy) * W + ix) * C;
            const float* wp = w + (static_cast<size_t>(ky) * cfg_.kw + kx) * C;
            for (int c = 0; c < C; ++c) opix[c] += xp[c] * wp[c];
          }
        }
      }
    }
  }
}

void DepthwiseConv2D::backward(const std::vector<const Tensor*>& in, const Tensor&,
                               const Tensor& dout, const std::vector<Tensor*>& din) {
  const Tensor& x = *in[0];
  const int N = x.dim(0), H = in_shape_.h, W = in_shape_.w, C = in_shape_.c;
  const int OH = out_shape_.h, OW = out_shape_.w;
  float* dw = params_[0].grad.data();
  const float* w = params_[0].value.data();
  float* dx = din[0] ? din[0]->data() : nullptr;

  if (cfg_.use_bias) {
    float* db = params_[1].grad.data();
    const float* g = dout.data();
    const size_t rows = dout.size() / static_cast<size_t>(C);
    for (size_t r = 0; r < rows; ++r)
      for (int c = 0; c < C; ++c) db[c] += g[r * C + c];
  }

  for (int n = 0; n < N; ++n) {
    const float* xn = x.data() + static_cast<size_t>(n) * H * W * C;
    const float* gn = dout.data() + static_cast<size_t>(n) * OH * OW * C;
    float* dxn = dx ? dx + static_cast<size_t>(n) * H * W * C : nullptr;
    for (int oy = 0; oy < OH; ++oy) {
      for (int ox = 0; ox < OW; ++ox) {
        const float* gpix = gn + (static_cast<size_t>(oy) * OW + ox) * C;
        const int iy0 = oy * cfg_.sh - pad_top_;
        const int ix0 = ox * cfg_.sw - pad_left_;
        for (int ky = 0; ky < cfg_.kh; ++ky) {
          const int iy = iy0 + ky;
          if (iy < 0 || iy >= H) continue;
          for (int kx = 0; kx < cfg_.kw; ++kx) {
            const int ix = ix0 + kx;
            if (ix < 0 || ix >= W) continue;
            const float* xp = xn + (static_cast<size_t>(iy) * W + ix) * C;
            float* wgrad = dw + (static_cast<size_t>(ky) * cfg_.kw + kx) * C;
            for (int c = 0; c < C; ++c) wgrad[c] += xp[c] * gpix[c];
            if (dxn) {
              const float* wp = w + (static_cast<size_t>(ky) * cfg_.kw + kx) * C;
              float* dxp = dxn + (static_cast<size_t>(iy) * W + ix) * C;
              for (int c = 0; c < C; ++c) dxp[c] += wp[c] * gpix[c];
            }
          }
        }
      }
    }
  }
}

// ----------------------------------------------------------------- Dense

Shape3 Dense::infer(const std::vector<Shape3>& in) {
  require(in.size() == 1 && in[0].is_vector(), name_ + ": dense wants one [N,C] input");
  in_features_ = in[0].c;
  add_param("w", {in_features_, units_});
  if (use_bias_) add_param("b", {units_});
  return {0, 0, units_};
}

void Dense::init_params(Rng& rng) {
  // Uniform fan-in scheme.
  init_uniform(params_[0].value, rng,
               std::sqrt(3.0f / static_cast<float>(in_features_)));
}

void Dense::forward(const std::vector<const Tensor*>& in, Tensor& out, bool) {
  const Tensor& x = *in[0];
  const int N = x.dim(0);
  out = Tensor({N, units_});
  sgemm(false, false, N, units_, in_features_, 1.0f, x.data(), in_features_,
        params_[0].value.data(), units_, 0.0f, out.data(), units_);
  if (use_bias_) {
    const float* b = params_[1].value.data();
    for (int n = 0; n < N; ++n)
      for (int u = 0; u < units_; ++u) out.at(n, u) += b[u];
  }
}

void Dense::backward(const std::vector<const Tensor*>& in, const Tensor&,
                     const Tensor& dout, const std::vector<Tensor*>& din) {
  const Tensor& x = *in[0];
  const int N = x.dim(0);
  sgemm(true, false, in_features_, units_, N, 1.0f, x.data(), in_features_,
        dout.data(), units_, 1.0f, params_[0].grad.data(), units_);
  if (use_bias_) {
    float* db = params_[1].grad.data();
    for (int n = 0; n < N; ++n)
      for (int u = 0; u < units_; ++u) db[u] += dout.at(n, u);
  }
  if (din[0] != nullptr) {
    sgemm(false, true, N, in_features_, units_, 1.0f, dout.data(), units_,
          params_[0].value.data(), units_, 1.0f, din[0]->data(), in_features_);
  }
}

// ------------------------------------------------------------- BatchNorm

Shape3 BatchNorm::infer(const std::vector<Shape3>& in) {
  require(in.size() == 1 && !in[0].is_vector(), name_ + ": batch_norm wants one NHWC input");
  shape_ = in[0];
  const int c = shape_.c;
  add_param("gamma", {c}).value.fill(1.0f);
  add_param("beta", {c});
  add_param("moving_mean", {c}, /*optimizable=*/false);
  add_param("moving_var", {c}, /*optimizable=*/false).value.fill(1.0f);
  mean_.resize(static_cast<size_t>(c));
  inv_std_.resize(static_cast<size_t>(c));
  return shape_;
}

void BatchNorm::forward(const std::vector<const Tensor*>& in, Tensor& out, bool training) {
  const Tensor& x = *in[0];
  const int C = shape_.c;
  const size_t rows = x.size() / static_cast<size_t>(C);
  out = Tensor(x.shape());
  const float* gamma = params_[0].value.data();
  const float* beta = params_[1].value.data();

  // A frozen layer behaves as inference even inside a training step; the
  // transfer regime depends on moving statistics staying bit-identical.
  const bool use_batch_stats = training && params_[0].trainable;

  if (use_batch_stats) {
    std::vector<double> sum(static_cast<size_t>(C), 0.0), sq(static_cast<size_t>(C), 0.0);
    const float* xd = x.data();
    for (size_t r = 0; r < rows; ++r) {
      const float* row = xd + r * C;
      for (int c = 0; c < C; ++c) {
        sum[static_cast<size_t>(c)] += row[c];
        sq[static_cast<size_t>(c)] += static_cast<double>(row[c]) * row[c];
      }
    }
    float* mm = params_[2].value.data();
    float* mv = params_[3].value.data();
    for (int c = 0; c < C; ++c) {
      const double m = sum[static_cast<size_t>(c)] / static_cast<double>(rows);
      const double v = std::max(0.0, sq[static_cast<size_t>(c)] / static_cast<double>(rows) - m * m);
      mean_[static_cast<size_t>(c)] = static_cast<float>(m);
      inv_std_[static_cast<size_t>(c)] = 1.0f / std::sqrt(static_cast<float>(v) + eps_);
      mm[c] = momentum_ * mm[c] + (1.0f - momentum_) * static_cast<float>(m);
      mv[c] = momentum_ * mv[c] + (1.0f - momentum_) * static_cast<float>(v);
    }
    const float* mu = mean_.data();
    const float* is = inv_std_.data();
    float* od = out.data();
#pragma omp parallel for schedule(static)
    for (long long r = 0; r < static_cast<long long>(rows); ++r) {
      const float* row = xd + static_cast<size_t>(r) * C;
      float* orow = od + static_cast<size_t>(r) * C;
      for (int c = 0; c < C; ++c)
        orow[c] = gamma[c] * (row[c] - mu[c]) * is[c] + beta[c];
    }
  } else {
    const float* mm = params_[2].value.data();
    const float* mv = params_[3].value.data();
    const float* xd = x.data();
    float* od = out.data();
#pragma omp parallel for schedule(static)
    for (long long r = 0; r < static_cast<long long>(rows); ++r) {
      const float* row = xd + static_cast<size_t>(r) * C;
      float* orow = od + static_cast<size_t>(r) * C;
      for (int c = 0; c < C; ++c) {
        const float is = 1.0f / std::sqrt(mv[c] + eps_);
        orow[c] = gamma[c] * (row[c] - mm[c]) * is + beta[c];
      }
    }
  }
}

void BatchNorm::backward(const std::vector<const Tensor*>& in, const Tensor&,
                         const Tensor& dout, const std::vector<Tensor*>& din) {
  const Tensor& x = *in[0];
  const int C = shape_.c;
  const size_t rows = x.size() / static_cast<size_t>(C);
  const float* xd = x.data();
  const float* gd = dout.data();
  const float* gamma = params_[0].value.data();
  float* dgamma = params_[0].grad.data();
  float* dbeta = params_[1].grad.data();

  // Backward assumes the preceding forward ran with batch statistics.
  std::vector<double> sum_g(static_cast<size_t>(C), 0.0), sum_gx(static_cast<size_t>(C), 0.0);
  for (size_t r = 0; r < rows; ++r) {
    const float* grow = gd + r * C;
    const float* xrow = xd + r * C;
    for (int c = 0; c < C; ++c) {
      const float xhat = (xrow[c] - mean_[static_cast<size_t>(c)]) * inv_std_[static_cast<size_t>(c)];
      sum_g[static_cast<size_t>(c)] += grow[c];
      sum_gx[static_cast<size_t>(c)] += static_cast<double>(grow[c]) * xhat;
    }
  }
  for (int c = 0; c < C; ++c) {
    dgamma[c] += static_cast<float>(sum_gx[static_cast<size_t>(c)]);
    dbeta[c] += static_cast<float>(sum_g[static_cast<size_t>(c)]);
  }
  if (din[0] == nullptr) return;
  float* dx = din[0]->data();
  const double inv_rows = 1.0 / static_cast<double>(rows);
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < static_cast<long long>(rows); ++r) {
    const float* grow = gd + static_cast<size_t>(r) * C;
    const float* xrow = xd + static_cast<size_t>(r) * C;
    float* dxrow = dx + static_cast<size_t>(r) * C;
    for (int c = 0; c < C; ++c) {
      const size_t cc = static_cast<size_t>(c);
      const float xhat = (xrow[c] - mean_[cc]) * inv_std_[cc];
      const double term = grow[c] - sum_g[cc] * inv_rows - xhat * sum_gx[cc] * inv_rows;
      dxrow[c] += static_cast<float>(gamma[c] * inv_std_[cc] * term);
    }
  }
}

// ------------------------------------------------------------ Activation

Shape3 Activation::infer(const std::vector<Shape3>& in) {
  require(in.size() == 1, name_ + ": activation wants one input");
  if (act_ == Act::Softmax)
    require(in[0].is_vector(), name_ + ": softmax expects an [N,C] input");
  return in[0];
}

void Activation::forward(const std::vector<const Tensor*>& in, Tensor& out, bool) {
  const Tensor& x = *in[0];
  out = Tensor(x.shape());
  const float* xd = x.data();
  float* od = out.data();
  const size_t n = x.size();
  switch (act_) {
    case Act::Relu:
      for (size_t i = 0; i < n; ++i) od[i] = xd[i] > 0.0f ? xd[i] : 0.0f;
      break;
    case Act::Relu6:
      for (size_t i = 0; i < n; ++i) od[i] = std::clamp(xd[i], 0.0f, 6.0f);
      break;
    case Act::HardSwish:
      for (size_t i = 0; i < n; ++i)
        od[i] = xd[i] * std::clamp(xd[i] + 3.0f, 0.0f, 6.0f) * (1.0f / 6.0f);
      break;
    case Act::HardSigmoid:
      for (size_t i = 0; i < n; ++i)
        od[i] = std::clamp(xd[i] + 3.0f, 0.0f, 6.0f) * (1.0f / 6.0f);
      break;
    case Act::Sigmoid:
      for (size_t i = 0; i < n; ++i) od[i] = 1.0f / (1.0f + std::exp(-xd[i]));
      break;
    case Act::Softmax: {
      const int N = x.dim(0), C = x.dim(1);
      for (int r = 0; r < N; ++r) {
        const float* row = xd + static_cast<size_t>(r) * C;
        float* orow = od + static_cast<size_t>(r) * C;
        float mx = row[0];
        for (int c = 1; c < C; ++c) mx = std::max(mx, row[c]);
        float sum = 0.0f;
        for (int c = 0; c < C; ++c) {
          orow[c] = std::exp(row[c] - mx);
          sum += orow[c];
        }
        for (int c = 0; c < C; ++c) orow[c] /= sum;
      }
      break;
    }
  }
}

void Activation::backward(const std::vector<const Tensor*>& in, const Tensor& out,
                          const Tensor& dout, const std::vector<Tensor*>& din) {
  if (din[0] == nullptr) return;
  const float* xd = in[0]->data();
  const float* od = out.data();
  const float* gd = dout.data();
  float* dx = din[0]->data();
  const size_t n = dout.size();
  switch (act_) {
    case Act::Relu:
      for (size_t i = 0; i < n; ++i) dx[i] += xd[i] > 0.0f ? gd[i] : 0.0f;
      break;
    case Act::Relu6:
      for (size_t i = 0; i < n; ++i)
        dx[i] += (xd[i] > 0.0f && xd[i] < 6.0f) ? gd[i] : 0.0f;
      break;
    case Act::HardSwish:
      for (size_t i = 0; i < n; ++i) {
        if (xd[i] <= -3.0f) continue;
        dx[i] += xd[i] >= 3.0f ? gd[i] : gd[i] * (2.0f * xd[i] + 3.0f) * (1.0f / 6.0f);
      }
      break;
    case Act::HardSigmoid:
      for (size_t i = 0; i < n; ++i)
        if (xd[i] > -3.0f && xd[i] < 3.0f) dx[i] += gd[i] * (1.0f / 6.0f);
      break;
    case Act::Sigmoid:
      for (size_t i = 0; i < n; ++i) dx[i] += gd[i] * od[i] * (1.0f - od[i]);
      break;
    case Act::Softmax: {
      const int N = dout.dim(0), C = dout.dim(1);
      for (int r = 0; r < N; ++r) {
        const float* p = od + static_cast<size_t>(r) * C;
        const float* g = gd + static_cast<size_t>(r) * C;
        float* d = dx + static_cast<size_t>(r) * C;
        float dot = 0.0f;
        for (int c = 0; c < C; ++c) dot += p[c] * g[c];
        for (int c = 0; c < C; ++c) d[c] += p[c] * (g[c] - dot);
      }
      break;
    }
  }
}

// ---------------------------------------------------------------- Pool2D

Shape3 Pool2D::infer(const std::vector<Shape3>& in) {
  require(in.size() == 1 && !in[0].is_vector(), name_ + ": pool wants one NHWC input");
  in_shape_ = in[0];
  out_shape_ = {out_dim(in_shape_.h, cfg_.kh, cfg_.sh, cfg_.padding),
                out_dim(in_shape_.w, cfg_.kw, cfg_.sw, cfg_.padding), in_shape_.c};
  if (cfg_.padding == Padding::Same) {
    pad_top_ = same_pad_before(in_shape_.h, cfg_.kh, cfg_.sh);
    pad_left_ = same_pad_before(in_shape_.w, cfg_.kw, cfg_.sw);
  }
  return out_shape_;
}

void Pool2D::forward(const std::vector<const Tensor*>& in, Tensor& out, bool training) {
  const Tensor& x = *in[0];
  const int N = x.dim(0), H = in_shape_.h, W = in_shape_.w, C = in_shape_.c;
  const int OH = out_shape_.h, OW = out_shape_.w;
  out = Tensor({N, OH, OW, C});
  const bool is_max = cfg_.kind == PoolKind::Max;
  if (is_max && training) argmax_.assign(out.size(), -1);

  const float* xd = x.data();
  float* od = out.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n) {
    for (int oy = 0; oy < OH; ++oy) {
      for (int ox = 0; ox < OW; ++ox) {
        const int iy0 = oy * cfg_.sh - pad_top_;
        const int ix0 = ox * cfg_.sw - pad_left_;
        for (int c = 0; c < C; ++c) {
          float best = -std::numeric_limits<float>::infinity();
          int best_idx = -1;
          float sum = 0.0f;
          int count = 0;
          for (int ky = 0; ky < cfg_.kh; ++ky) {
            const int iy = iy0 + ky;
            if (iy < 0 || iy >= H) continue;
            for (int kx = 0; kx < cfg_.kw; ++kx) {
              const int ix = ix0 + kx;
              if (ix < 0 || ix >= W) continue;
              const size_t idx =
                  ((static_cast<size_t>(n) * H + iy) * W + ix) * C + static_cast<size_t>(c);
              const float v = xd[idx];
              if (is_max) {
                if (v > best) {
                  best = v;
                  best_idx = static_cast<int>(idx);
                }
              } else {
                sum += v;
                ++count;
              }
            }
          }
          const size_t oidx =
              ((static_cast<size_t>(n) * OH + oy) * OW + ox) * C + static_cast<size_t>(c);
          if (is_max) {
            od[oidx] = best;
            if (training) argmax_[oidx] = best_idx;
          } else {
            od[oidx] = count > 0 ? sum / static_cast<float>(count) : 0.0f;
          }
        }
      }
    }
  }
}

void Pool2D::backward(const std::vector<const Tensor*>& in, const Tensor& out,
                      const Tensor& dout, const std::vector<Tensor*>& din) {
  if (din[0] == nullptr) return;
  float* dx = din[0]->data();
  const float* gd = dout.data();
  if (cfg_.kind == PoolKind::Max) {
    for (size_t i = 0; i < dout.size(); ++i)
      if (argmax_[i] >= 0) dx[static_cast<size_t>(argmax_[i])] += gd[i];
    return;
  }
  const Tensor& x = *in[0];
  const int N = x.dim(0), H = in_shape_.h, W = in_shape_.w, C = in_shape_.c;
  const int OH = out.dim(1), OW = out.dim(2);
  for (int n = 0; n < N; ++n) {
    for (int oy = 0; oy < OH; ++oy) {
      for (int ox = 0; ox < OW; ++ox) {
        const int iy0 = oy * cfg_.sh - pad_top_;
        const int ix0 = ox * cfg_.sw - pad_left_;
        int count = 0;
        for (int ky = 0; ky < cfg_.kh; ++ky) {
          const int iy = iy0 + ky;
          if (iy < 0 || iy >= H) continue;
          for (int kx = 0; kx < cfg_.kw; ++kx) {
            const int ix = ix0 + kx;
            if (ix >= 0 && ix < W) ++count;
          }
        }
        if (count == 0) continue;
        const float inv = 1.0f / static_cast<float>(count);
        for (int ky = 0; ky < cfg_.kh; ++ky) {
          const int iy = iy0 + ky;
          if (iy < 0 || iy >= H) continue;
          for (int kx = 0; kx < cfg_.kw; ++kx) {
            const int ix = ix0 + kx;
            if (ix < 0 || ix >= W) continue;
            for (int c = 0; c < C; ++c) {
              dx[((static_cast<size_t>(n) * H + iy) * W + ix) * C + static_cast<size_t>(c)] +=
                  gd[((static_cast<size_t>(n) * OH + oy) * OW + ox) * C + static_cast<size_t>(c)] * inv;
            }
          }
        }
      }
    }
  }
}

// --------------------------------------------------------- GlobalAvgPool

Shape3 GlobalAvgPool::infer(const std::vector<Shape3>& in) {
  require(in.size() == 1 && !in[0].is_vector(), name_ + ": gap wants one NHWC input");
  in_shape_ = in[0];
  if (keepdims_) return {1, 1, in_shape_.c};
  return {0, 0, in_shape_.c};
}

void GlobalAvgPool::forward(const std::vector<const Tensor*>& in, Tensor& out, bool) {
  const Tensor& x = *in[0];
  const int N = x.dim(0), HW = in_shape_.h * in_shape_.w, C = in_shape_.c;
  out = keepdims_ ? Tensor({N, 1, 1, C}) : Tensor({N, C});
  const float* xd = x.data();
  float* od = out.data();
  for (int n = 0; n < N; ++n) {
    const float* xn = xd + static_cast<size_t>(n) * HW * C;
    float* on = od + static_cast<size_t>(n) * C;
    std::vector<double> acc(static_cast<size_t>(C), 0.0);
    for (int p = 0; p < HW; ++p)
      for (int c = 0; c < C; ++c) acc[static_cast<size_t>(c)] += xn[static_cast<size_t>(p) * C + c];
    for (int c = 0; c < C; ++c)
      on[c] = static_cast<float>(acc[static_cast<size_t>(c)] / HW);
  }
}

void GlobalAvgPool::backward(const std::vector<const Tensor*>&, const Tensor&,
                             const Tensor& dout, const std::vector<Tensor*>& din) {
  if (din[0] == nullptr) return;
  const int N = dout.dim(0), HW = in_shape_.h * in_shape_.w, C = in_shape_.c;
  const float inv = 1.0f / static_cast<float>(HW);
  float* dx = din[0]->data();
  const float* gd = dout.data();
  for (int n = 0; n < N; ++n) {
    const float* gn = gd + static_cast<size_t>(n) * C;
    float* dxn = dx + static_cast<size_t>(n) * HW * C;
    for (int p = 0; p < HW; ++p)
      for (int c = 0; c < C; ++c) dxn[static_cast<size_t>(p) * C + c] += gn[c] * inv;
  }
}

// ------------------------------------------------------------------- Add

Shape3 Add::infer(const std::vector<Shape3>& in) {
  require(in.size() >= 2, name_ + ": add wants >= 2 inputs");
  for (const auto& s : in)
    require(s == in[0], name_ + ": add input shapes differ");
  if (scales_.empty()) scales_.assign(in.size(), 1.0f);
  require(scales_.size() == in.size(), name_ + ": one scale per input");
  return in[0];
}

void Add::forward(const std::vector<const Tensor*>& in, Tensor& out, bool) {
  out = Tensor(in[0]->shape());
  float* od = out.data();
  const size_t n = out.size();
  for (size_t k = 0; k < in.size(); ++k) {
    const float* xd = in[k]->data();
    const float s = scales_[k];
    if (k == 0) {
      for (size_t i = 0; i < n; ++i) od[i] = s * xd[i];
    } else {
      for (size_t i = 0; i < n; ++i) od[i] += s * xd[i];
    }
  }
}

void Add::backward(const std::vector<const Tensor*>&, const Tensor&,
                   const Tensor& dout, const std::vector<Tensor*>& din) {
  const float* gd = dout.data();
  const size_t n = dout.size();
  for (size_t k = 0; k < din.size(); ++k) {
    if (din[k] == nullptr) continue;
    float* dx = din[k]->data();
    const float s = scales_[k];
    for (size_t i = 0; i < n; ++i) dx[i] += s * gd[i];
  }
}

// ---------------------------------------------------------------- Concat

Shape3 Concat::infer(const std::vector<Shape3>& in) {
  require(in.size() >= 2, name_ + ": concat wants >= 2 inputs");
  int c = 0;
  widths_.clear();
  for (const auto& s : in) {
    require(!s.is_vector() && s.h == in[0].h && s.w == in[0].w,
            name_ + ": concat spatial dims differ");
    widths_.push_back(s.c);
    c += s.c;
  }
  return {in[0].h, in[0].w, c};
}

void Concat::forward(const std::vector<const Tensor*>& in, Tensor& out, bool) {
  const int N = in[0]->dim(0), H = in[0]->dim(1), W = in[0]->dim(2);
  int C = 0;
  for (int w : widths_) C += w;
  out = Tensor({N, H, W, C});
  const size_t pixels = static_cast<size_t>(N) * H * W;
  float* od = out.data();
  size_t off = 0;
  for (size_t k = 0; k < in.size(); ++k) {
    const float* xd = in[k]->data();
    const size_t w = static_cast<size_t>(widths_[k]);
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < static_cast<long long>(pixels); ++p)
      std::memcpy(od + static_cast<size_t>(p) * C + off, xd + static_cast<size_t>(p) * w,
                  sizeof(float) * w);
    off += w;
  }
}

void Concat::backward(const std::vector<const Tensor*>& in, const Tensor&,
                      const Tensor& dout, const std::vector<Tensor*>& din) {
  const int N = in[0]->dim(0), H = in[0]->dim(1), W = in[0]->dim(2);
  int C = 0;
  for (int w : widths_) C += w;
  const size_t pixels = static_cast<size_t>(N) * H * W;
  const float* gd = dout.data();
  size_t off = 0;
  for (size_t k = 0; k < din.size(); ++k) {
    const size_t w = static_cast<size_t>(widths_[k]);
    if (din[k] != nullptr) {
      float* dx = din[k]->data();
      for (size_t p = 0; p < pixels; ++p) {
        const float* g = gd + p * C + off;
        float* d = dx + p * w;
        for (size_t c = 0; c < w; ++c) d[c] += g[c];
      }
    }
    off += w;
  }
}

// ---------------------------------------------------------- ChannelScale

Shape3 ChannelScale::infer(const std::vector<Shape3>& in) {
  require(in.size() == 2 && !in[0].is_vector(), name_ + ": channel_scale wants (x, gate)");
  require(in[1].h == 1 && in[1].w == 1 && in[1].c == in[0].c,
          name_ + ": gate must be [N,1,1,C] with matching C");
  return in[0];
}

void ChannelScale::forward(const std::vector<const Tensor*>& in, Tensor& out, bool) {
  const Tensor& x = *in[0];
  const Tensor& g = *in[1];
  const int N = x.dim(0), HW = x.dim(1) * x.dim(2), C = x.dim(3);
  out = Tensor(x.shape());
  float* od = out.data();
  const float* xd = x.data();
  const float* gd = g.data();
  for (int n = 0; n < N; ++n) {
    const float* gate = gd + static_cast<size_t>(n) * C;
    const float* xn = xd + static_cast<size_t>(n) * HW * C;
    float* on = od + static_cast<size_t>(n) * HW * C;
    for (int p = 0; p < HW; ++p)
      for (int c = 0; c < C; ++c)
        on[static_cast<size_t>(p) * C + c] = xn[static_cast<size_t>(p) * C + c] * gate[c];
  }
}

void ChannelScale::backward(const std::vector<const Tensor*>& in, const Tensor&,
                            const Tensor& dout, const std::vector<Tensor*>& din) {
  const Tensor& x = *in[0];
  const Tensor& g = *in[1];
  const int N = x.dim(0), HW = x.dim(1) * x.dim(2), C = x.dim(3);
  const float* xd = x.data();
  const float* gd = g.data();
  const float* dd = dout.data();
  for (int n = 0; n < N; ++n) {
    const size_t xoff = static_cast<size_t>(n) * HW * C;
    if (din[0] != nullptr) {
      const float* gate = gd + static_cast<size_t>(n) * C;
      float* dx = din[0]->data() + xoff;
      for (int p = 0; p < HW; ++p)
        for (int c = 0; c < C; ++c)
          dx[static_cast<size_t>(p) * C + c] += dd[xoff + static_cast<size_t>(p) * C + c] * gate[c];
    }
    if (din[1] != nullptr) {
      float* dg = din[1]->data() + static_cast<size_t>(n) * C;
      for (int p = 0; p < HW; ++p)
        for (int c = 0; c < C; ++c)
          dg[c] += dd[xoff + static_cast<size_t>(p) * C + c] * xd[xoff + static_cast<size_t>(p) * C + c];
    }
  }
}

}  // namespace crackdet::nn
