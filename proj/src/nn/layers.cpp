// Copyright 2026  ttaudio authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "tta/nn/layers.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace tta {

namespace {

using EMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<EMat>;
using CMapM = Eigen::Map<const EMat>;
using StrideT = Eigen::OuterStride<>;
using SMapM = Eigen::Map<EMat, 0, StrideT>;
using CSMapM = Eigen::Map<const EMat, 0, StrideT>;

Tensor he_normal(std::vector<int> shape, int fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / static_cast<float>(fan_in)));
  for (auto& v : t.vec()) v = dist(rng);
  return t;
}

Tensor glorot_uniform(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const float a = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
  std::uniform_real_distribution<float> dist(-a, a);
  for (auto& v : t.vec()) v = dist(rng);
  return t;
}

Tensor ones(std::vector<int> shape) {
  Tensor t(std::move(shape));
  t.fill(1.0f);
  return t;
}

}  // namespace

std::string to_string(ParamTag t) {
  switch (t) {
    case ParamTag::SharedBackbone: return "shared_backbone";
    case ParamTag::ClassHead: return "class_head";
    case ParamTag::PretextHead: return "pretext_head";
    case ParamTag::BNAffine: return "bn_affine";
    case ParamTag::BNStats: return "bn_stats";
    case ParamTag::Other: return "other";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

Linear::Linear(const std::string& name, int in, int out, ParamTag tag, Rng& rng)
    : w(name + ".weight", tag, glorot_uniform({out, in}, in, out, rng)),
      b(name + ".bias", tag, Tensor({out})) {}

Tensor Linear::forward(const Tensor& x) {
  in_shape_ = x.shape();
  const int in = w.value.dim(1);
  const int out = w.value.dim(0);
  const int rows = static_cast<int>(x.numel() / in);
  x_ = x.rank() == 2 ? x : x.reshaped({rows, in});

  Tensor y({rows, out});
  MapM ym(y.data(), rows, out);
  CMapM xm(x_.data(), rows, in);
  CMapM wm(w.value.data(), out, in);
  ym.noalias() = xm * wm.transpose();
  ym.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(b.value.data(), out);

  if (x.rank() == 3) return y.reshaped({x.dim(0), x.dim(1), out});
  return y;
}

Tensor Linear::backward(const Tensor& dy) {
  const int in = w.value.dim(1);
  const int out = w.value.dim(0);
  const int rows = static_cast<int>(dy.numel() / out);
  const Tensor dy2 = dy.rank() == 2 ? dy : dy.reshaped({rows, out});

  CMapM dym(dy2.data(), rows, out);
  CMapM xm(x_.data(), rows, in);
  CMapM wm(w.value.data(), out, in);
  MapM dwm(w.grad.data(), out, in);
  dwm.noalias() += dym.transpose() * xm;
  Eigen::Map<Eigen::RowVectorXf>(b.grad.data(), out) += dym.colwise().sum();

  Tensor dx(in_shape_);
  MapM dxm(dx.data(), rows, in);
  dxm.noalias() = dym * wm;
  return dx;
}

void Linear::collect(std::vector<Parameter*>& out) {
  out.push_back(&w);
  out.push_back(&b);
}

// ---------------------------------------------------------------------------
// Conv2d
// ---------------------------------------------------------------------------

Conv2d::Conv2d(const std::string& name, int in_c, int out_c, int ksize, int stride, int pad,
               ParamTag tag, Rng& rng)
    : w(name + ".weight", tag, he_normal({out_c, in_c * ksize * ksize}, in_c * ksize * ksize, rng)),
      b(name + ".bias", tag, Tensor({out_c})),
      in_c_(in_c),
      out_c_(out_c),
      k_(ksize),
      stride_(stride),
      pad_(pad) {}

Tensor Conv2d::forward(const Tensor& x) {
  B_ = x.dim(0);
  H_ = x.dim(2);
  W_ = x.dim(3);
  OH_ = (H_ + 2 * pad_ - k_) / stride_ + 1;
  OW_ = (W_ + 2 * pad_ - k_) / stride_ + 1;
  const int ckk = in_c_ * k_ * k_;
  const int ohow = OH_ * OW_;
  cols_.assign(static_cast<std::size_t>(B_) * ckk * ohow, 0.0f);

  Tensor y({B_, out_c_, OH_, OW_});
  for (int n = 0; n < B_; ++n) {
    float* col = cols_.data() + static_cast<std::size_t>(n) * ckk * ohow;
    // im2col: rows index (c, ki, kj), columns index output pixels.
    for (int c = 0; c < in_c_; ++c) {
      for (int ki = 0; ki < k_; ++ki) {
        for (int kj = 0; kj < k_; ++kj) {
          float* row = col + (static_cast<std::size_t>(c) * k_ * k_ + ki * k_ + kj) * ohow;
          for (int oh = 0; oh < OH_; ++oh) {
            const int ih = oh * stride_ - pad_ + ki;
            if (ih < 0 || ih >= H_) continue;
            for (int ow = 0; ow < OW_; ++ow) {
              const int iw = ow * stride_ - pad_ + kj;
              if (iw < 0 || iw >= W_) continue;
              row[oh * OW_ + ow] = x.at(n, c, ih, iw);
            }
          }
        }
      }
    }
    CMapM colm(col, ckk, ohow);
    CMapM wm(w.value.data(), out_c_, ckk);
    MapM ym(y.data() + static_cast<std::size_t>(n) * out_c_ * ohow, out_c_, ohow);
    ym.noalias() = wm * colm;
    ym.colwise() += Eigen::Map<const Eigen::VectorXf>(b.value.data(), out_c_);
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
  const int ckk = in_c_ * k_ * k_;
  const int ohow = OH_ * OW_;
  Tensor dx({B_, in_c_, H_, W_});
  CMapM wm(w.value.data(), out_c_, ckk);
  MapM dwm(w.grad.data(), out_c_, ckk);
  Eigen::Map<Eigen::VectorXf> dbm(b.grad.data(), out_c_);

  EMat dcol(ckk, ohow);
  for (int n = 0; n < B_; ++n) {
    CMapM dym(dy.data() + static_cast<std::size_t>(n) * out_c_ * ohow, out_c_, ohow);
    CMapM colm(cols_.data() + static_cast<std::size_t>(n) * ckk * ohow, ckk, ohow);
    dwm.noalias() += dym * colm.transpose();
    dbm += dym.rowwise().sum();
    dcol.noalias() = wm.transpose() * dym;
    // col2im scatter-add.
    for (int c = 0; c < in_c_; ++c) {
      for (int ki = 0; ki < k_; ++ki) {
        for (int kj = 0; kj < k_; ++kj) {
          const float* row = dcol.data() + (static_cast<std::size_t>(c) * k_ * k_ + ki * k_ + kj) * ohow;
          for (int oh = 0; oh < OH_; ++oh) {
            const int ih = oh * stride_ - pad_ + ki;
            if (ih < 0 || ih >= H_) continue;
            for (int ow = 0; ow < OW_; ++ow) {
              const int iw = ow * stride_ - pad_ + kj;
              if (iw < 0 || iw >= W_) continue;
              dx.at(n, c, ih, iw) += row[oh * OW_ + ow];
            }
          }
        }
      }
    }
  }
  return dx;
}

void Conv2d::collect(std::vector<Parameter*>& out) {
  out.push_back(&w);
  out.push_back(&b);
}

// ---------------------------------------------------------------------------
// BatchNorm2d
// ---------------------------------------------------------------------------

BatchNorm2d::BatchNorm2d(const std::string& name, int channels, ParamTag affine_tag, double eps,
                         double momentum)
    : gamma(name + ".gamma", affine_tag, ones({channels})),
      beta(name + ".beta", affine_tag, Tensor({channels})),
      running_mean(name + ".running_mean", ParamTag::BNStats, Tensor({channels})),
      running_var(name + ".running_var", ParamTag::BNStats, ones({channels})),
      eps_(static_cast<float>(eps)),
      momentum_(static_cast<float>(momentum)),
      C_(channels) {}

Tensor BatchNorm2d::forward(const Tensor& x) {
  const int B = x.dim(0), H = x.dim(2), W = x.dim(3);
  const int hw = H * W;
  m_ = B * hw;
  fwd_mode_ = mode_;
  xhat_ = Tensor(x.shape());
  inv_std_.assign(static_cast<std::size_t>(C_), 0.0f);
  Tensor y(x.shape());

  for (int c = 0; c < C_; ++c) {
    float mean, var;
    if (mode_ == BnMode::Running) {
      mean = running_mean.value[c];
      var = running_var.value[c];
    } else {
      double acc = 0.0;
      for (int n = 0; n < B; ++n) {
        const float* p = x.data() + (static_cast<std::size_t>(n) * C_ + c) * hw;
        for (int i = 0; i < hw; ++i) acc += p[i];
      }
      mean = static_cast<float>(acc / m_);
      double vacc = 0.0;
      for (int n = 0; n < B; ++n) {
        const float* p = x.data() + (static_cast<std::size_t>(n) * C_ + c) * hw;
        for (int i = 0; i < hw; ++i) {
          const double d = p[i] - mean;
          vacc += d * d;
        }
      }
      var = static_cast<float>(vacc / m_);  // biased, used for normalization
      if (mode_ == BnMode::Train) {
        // Running variance uses the unbiased estimate, running mean the plain mean.
        const float unbiased =
            m_ > 1 ? static_cast<float>(vacc / (m_ - 1)) : var;
        running_mean.value[c] = (1.0f - momentum_) * running_mean.value[c] + momentum_ * mean;
        running_var.value[c] = (1.0f - momentum_) * running_var.value[c] + momentum_ * unbiased;
      }
    }
    const float is = 1.0f / std::sqrt(var + eps_);
    inv_std_[static_cast<std::size_t>(c)] = is;
    const float g = gamma.value[c], bt = beta.value[c];
    for (int n = 0; n < B; ++n) {
      const std::size_t base = (static_cast<std::size_t>(n) * C_ + c) * hw;
      const float* px = x.data() + base;
      float* ph = xhat_.data() + base;
      float* py = y.data() + base;
      for (int i = 0; i < hw; ++i) {
        const float xh = (px[i] - mean) * is;
        ph[i] = xh;
        py[i] = g * xh + bt;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
  const int B = dy.dim(0), H = dy.dim(2), W = dy.dim(3);
  const int hw = H * W;
  Tensor dx(dy.shape());

  for (int c = 0; c < C_; ++c) {
    const float g = gamma.value[c];
    const float is = inv_std_[static_cast<std::size_t>(c)];
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int n = 0; n < B; ++n) {
      const std::size_t base = (static_cast<std::size_t>(n) * C_ + c) * hw;
      const float* pdy = dy.data() + base;
      const float* ph = xhat_.data() + base;
      for (int i = 0; i < hw; ++i) {
        sum_dy += pdy[i];
        sum_dy_xhat += static_cast<double>(pdy[i]) * ph[i];
      }
    }
    gamma.grad[c] += static_cast<float>(sum_dy_xhat);
    beta.grad[c] += static_cast<float>(sum_dy);

    if (fwd_mode_ == BnMode::Running) {
      // Stats are constants: plain affine chain rule.
      const float scale = g * is;
      for (int n = 0; n < B; ++n) {
        const std::size_t base = (static_cast<std::size_t>(n) * C_ + c) * hw;
        const float* pdy = dy.data() + base;
        float* pdx = dx.data() + base;
        for (int i = 0; i < hw; ++i) pdx[i] = pdy[i] * scale;
      }
    } else {
      const float inv_m = 1.0f / static_cast<float>(m_);
      const auto s_dy = static_cast<float>(sum_dy);
      const auto s_dyx = static_cast<float>(sum_dy_xhat);
      for (int n = 0; n < B; ++n) {
        const std::size_t base = (static_cast<std::size_t>(n) * C_ + c) * hw;
        const float* pdy = dy.data() + base;
        const float* ph = xhat_.data() + base;
        float* pdx = dx.data() + base;
        for (int i = 0; i < hw; ++i) {
          pdx[i] = g * is * inv_m *
                   (static_cast<float>(m_) * pdy[i] - s_dy - ph[i] * s_dyx);
        }
      }
    }
  }
  return dx;
}

void BatchNorm2d::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
  out.push_back(&running_mean);
  out.push_back(&running_var);
}

// ---------------------------------------------------------------------------
// GroupNorm
// ---------------------------------------------------------------------------

GroupNorm::GroupNorm(const std::string& name, int groups, int channels, ParamTag tag, double eps)
    : gamma(name + ".gamma", tag, ones({channels})),
      beta(name + ".beta", tag, Tensor({channels})),
      groups_(groups),
      C_(channels),
      eps_(static_cast<float>(eps)) {}

Tensor GroupNorm::forward(const Tensor& x) {
  const int B = x.dim(0), H = x.dim(2), W = x.dim(3);
  const int hw = H * W;
  const int cg = C_ / groups_;
  const int m = cg * hw;
  xhat_ = Tensor(x.shape());
  inv_std_.assign(static_cast<std::size_t>(B) * groups_, 0.0f);
  Tensor y(x.shape());

  for (int n = 0; n < B; ++n) {
    for (int g = 0; g < groups_; ++g) {
      double acc = 0.0;
      for (int c = g * cg; c < (g + 1) * cg; ++c) {
        const float* p = x.data() + (static_cast<std::size_t>(n) * C_ + c) * hw;
        for (int i = 0; i < hw; ++i) acc += p[i];
      }
      const float mean = static_cast<float>(acc / m);
      double vacc = 0.0;
      for (int c = g * cg; c < (g + 1) * cg; ++c) {
        const float* p = x.data() + (static_cast<std::size_t>(n) * C_ + c) * hw;
        for (int i = 0; i < hw; ++i) {
          const double d = p[i] - mean;
          vacc += d * d;
        }
      }
      const float is = 1.0f / std::sqrt(static_cast<float>(vacc / m) + eps_);
      inv_std_[static_cast<std::size_t>(n) * groups_ + g] = is;
      for (int c = g * cg; c < (g + 1) * cg; ++c) {
        const std::size_t base = (static_cast<std::size_t>(n) * C_ + c) * hw;
        const float gm = gamma.value[c], bt = beta.value[c];
        const float* px = x.data() + base;
        float* ph = xhat_.data() + base;
        float* py = y.data() + base;
        for (int i = 0; i < hw; ++i) {
          const float xh = (px[i] - mean) * is;
          ph[i] = xh;
          py[i] = gm * xh + bt;
        }
      }
    }
  }
  return y;
}

Tensor GroupNorm::backward(const Tensor& dy) {
  const int B = dy.dim(0), H = dy.dim(2), W = dy.dim(3);
  const int hw = H * W;
  const int cg = C_ / groups_;
  const int m = cg * hw;
  Tensor dx(dy.shape());

  // Per-channel affine grads.
  for (int c = 0; c < C_; ++c) {
    double sg = 0.0, sb = 0.0;
    for (int n = 0; n < B; ++n) {
      const std::size_t base = (static_cast<std::size_t>(n) * C_ + c) * hw;
      const float* pdy = dy.data() + base;
      const float* ph = xhat_.data() + base;
      for (int i = 0; i < hw; ++i) {
        sg += static_cast<double>(pdy[i]) * ph[i];
        sb += pdy[i];
      }
    }
    gamma.grad[c] += static_cast<float>(sg);
    beta.grad[c] += static_cast<float>(sb);
  }

  for (int n = 0; n < B; ++n) {
    for (int g = 0; g < groups_; ++g) {
      const float is = inv_std_[static_cast<std::size_t>(n) * groups_ + g];
      // dxhat = dy * gamma_c inside the group; two reductions then the
      // standard normalization backward over the group's m elements.
      double s1 = 0.0, s2 = 0.0;
      for (int c = g * cg; c < (g + 1) * cg; ++c) {
        const std::size_t base = (static_cast<std::size_t>(n) * C_ + c) * hw;
        const float gm = gamma.value[c];
        const float* pdy = dy.data() + base;
        const float* ph = xhat_.data() + base;
        for (int i = 0; i < hw; ++i) {
          const float dxh = pdy[i] * gm;
          s1 += dxh;
          s2 += static_cast<double>(dxh) * ph[i];
        }
      }
      const auto fs1 = static_cast<float>(s1), fs2 = static_cast<float>(s2);
      for (int c = g * cg; c < (g + 1) * cg; ++c) {
        const std::size_t base = (static_cast<std::size_t>(n) * C_ + c) * hw;
        const float gm = gamma.value[c];
        const float* pdy = dy.data() + base;
        const float* ph = xhat_.data() + base;
        float* pdx = dx.data() + base;
        for (int i = 0; i < hw; ++i) {
          const float dxh = pdy[i] * gm;
          pdx[i] = is / static_cast<float>(m) *
                   (static_cast<float>(m) * dxh - fs1 - ph[i] * fs2);
        }
      }
    }
  }
  return dx;
}

void GroupNorm::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

// ---------------------------------------------------------------------------
// LayerNorm
// ---------------------------------------------------------------------------

LayerNorm::LayerNorm(const std::string& name, int dim, ParamTag tag, double eps)
    : gamma(name + ".gamma", tag, ones({dim})),
      beta(name + ".beta", tag, Tensor({dim})),
      dim_(dim),
      eps_(static_cast<float>(eps)) {}

Tensor LayerNorm::forward(const Tensor& x) {
  in_shape_ = x.shape();
  const int rows = static_cast<int>(x.numel() / dim_);
  xhat_ = Tensor({rows, dim_});
  inv_std_.assign(static_cast<std::size_t>(rows), 0.0f);
  Tensor y({rows, dim_});

  for (int r = 0; r < rows; ++r) {
    const float* px = x.data() + static_cast<std::size_t>(r) * dim_;
    double acc = 0.0;
    for (int j = 0; j < dim_; ++j) acc += px[j];
    const float mean = static_cast<float>(acc / dim_);
    double vacc = 0.0;
    for (int j = 0; j < dim_; ++j) {
      const double d = px[j] - mean;
      vacc += d * d;
    }
    const float is = 1.0f / std::sqrt(static_cast<float>(vacc / dim_) + eps_);
    inv_std_[static_cast<std::size_t>(r)] = is;
    float* ph = xhat_.data() + static_cast<std::size_t>(r) * dim_;
    float* py = y.data() + static_cast<std::size_t>(r) * dim_;
    for (int j = 0; j < dim_; ++j) {
      const float xh = (px[j] - mean) * is;
      ph[j] = xh;
      py[j] = gamma.value[j] * xh + beta.value[j];
    }
  }
  return y.reshaped(in_shape_);
}

Tensor LayerNorm::backward(const Tensor& dy) {
  const int rows = static_cast<int>(dy.numel() / dim_);
  Tensor dx({rows, dim_});
  for (int r = 0; r < rows; ++r) {
    const float* pdy = dy.data() + static_cast<std::size_t>(r) * dim_;
    const float* ph = xhat_.data() + static_cast<std::size_t>(r) * dim_;
    const float is = inv_std_[static_cast<std::size_t>(r)];
    double s1 = 0.0, s2 = 0.0;
    for (int j = 0; j < dim_; ++j) {
      const float dxh = pdy[j] * gamma.value[j];
      s1 += dxh;
      s2 += static_cast<double>(dxh) * ph[j];
      gamma.grad[j] += pdy[j] * ph[j];
      beta.grad[j] += pdy[j];
    }
    const auto fs1 = static_cast<float>(s1), fs2 = static_cast<float>(s2);
    float* pdx = dx.data() + static_cast<std::size_t>(r) * dim_;
    for (int j = 0; j < dim_; ++j) {
      const float dxh = pdy[j] * gamma.value[j];
      pdx[j] = is / static_cast<float>(dim_) *
               (static_cast<float>(dim_) * dxh - fs1 - ph[j] * fs2);
    }
  }
  return dx.reshaped(in_shape_);
}

void LayerNorm::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

// ---------------------------------------------------------------------------
// ReLU / GlobalAvgPool
// ---------------------------------------------------------------------------

Tensor ReLU::forward(const Tensor& x) {
  x_ = x;
  Tensor y(x.shape());
  // `x <= 0 ? 0 : x` keeps NaN (the comparison is false for it), so a
  // non-finite activation reaches the loss instead of being laundered to 0
  // and hiding a divergence from the finite-loss guard.
  for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] <= 0.0f ? 0.0f : x[i];
  return y;
}

Tensor ReLU::backward(const Tensor& dy) {
  Tensor dx(dy.shape());
  for (std::int64_t i = 0; i < dy.numel(); ++i) dx[i] = x_[i] > 0.0f ? dy[i] : 0.0f;
  return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& x) {
  B_ = x.dim(0);
  C_ = x.dim(1);
  H_ = x.dim(2);
  W_ = x.dim(3);
  const int hw = H_ * W_;
  Tensor y({B_, C_});
  for (int n = 0; n < B_; ++n) {
    for (int c = 0; c < C_; ++c) {
      const float* p = x.data() + (static_cast<std::size_t>(n) * C_ + c) * hw;
      double acc = 0.0;
      for (int i = 0; i < hw; ++i) acc += p[i];
      y.at(n, c) = static_cast<float>(acc / hw);
    }
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
  const int hw = H_ * W_;
  Tensor dx({B_, C_, H_, W_});
  for (int n = 0; n < B_; ++n) {
    for (int c = 0; c < C_; ++c) {
      const float g = dy.at(n, c) / static_cast<float>(hw);
      float* p = dx.data() + (static_cast<std::size_t>(n) * C_ + c) * hw;
      for (int i = 0; i < hw; ++i) p[i] = g;
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// MultiHeadAttention
// ---------------------------------------------------------------------------

MultiHeadAttention::MultiHeadAttention(const std::string& name, int dim, int heads, ParamTag tag,
                                       Rng& rng)
    : dim_(dim),
      heads_(heads),
      dh_(dim / heads),
      qkv_(name + ".qkv", dim, 3 * dim, tag, rng),
      proj_(name + ".proj", dim, dim, tag, rng) {}

Tensor MultiHeadAttention::forward(const Tensor& x) {
  B_ = x.dim(0);
  T_ = x.dim(1);
  qkv_out_ = qkv_.forward(x);  // (B, T, 3D)
  probs_.assign(static_cast<std::size_t>(B_) * heads_ * T_ * T_, 0.0f);
  Tensor ctx({B_, T_, dim_});
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh_));

  for (int n = 0; n < B_; ++n) {
    const float* base = qkv_out_.data() + static_cast<std::size_t>(n) * T_ * 3 * dim_;
    for (int h = 0; h < heads_; ++h) {
      CSMapM Q(base + static_cast<std::size_t>(h) * dh_, T_, dh_, StrideT(3 * dim_));
      CSMapM K(base + dim_ + static_cast<std::size_t>(h) * dh_, T_, dh_, StrideT(3 * dim_));
      CSMapM V(base + 2 * dim_ + static_cast<std::size_t>(h) * dh_, T_, dh_, StrideT(3 * dim_));
      MapM P(probs_.data() + (static_cast<std::size_t>(n) * heads_ + h) * T_ * T_, T_, T_);
      P.noalias() = Q * K.transpose() * scale;
      // Row softmax, max-shifted for stability.
      for (int i = 0; i < T_; ++i) {
        float mx = P.row(i).maxCoeff();
        float z = 0.0f;
        for (int j = 0; j < T_; ++j) {
          P(i, j) = std::exp(P(i, j) - mx);
          z += P(i, j);
        }
        P.row(i) /= z;
      }
      SMapM O(ctx.data() + static_cast<std::size_t>(n) * T_ * dim_ +
                  static_cast<std::size_t>(h) * dh_,
              T_, dh_, StrideT(dim_));
      O.noalias() = P * V;
    }
  }
  return proj_.forward(ctx);
}

Tensor MultiHeadAttention::backward(const Tensor& dy) {
  Tensor dctx = proj_.backward(dy);  // (B, T, D)
  Tensor dqkv({B_, T_, 3 * dim_});
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh_));

  for (int n = 0; n < B_; ++n) {
    const float* base = qkv_out_.data() + static_cast<std::size_t>(n) * T_ * 3 * dim_;
    float* dbase = dqkv.data() + static_cast<std::size_t>(n) * T_ * 3 * dim_;
    for (int h = 0; h < heads_; ++h) {
      CSMapM Q(base + static_cast<std::size_t>(h) * dh_, T_, dh_, StrideT(3 * dim_));
      CSMapM K(base + dim_ + static_cast<std::size_t>(h) * dh_, T_, dh_, StrideT(3 * dim_));
      CSMapM V(base + 2 * dim_ + static_cast<std::size_t>(h) * dh_, T_, dh_, StrideT(3 * dim_));
      CMapM P(probs_.data() + (static_cast<std::size_t>(n) * heads_ + h) * T_ * T_, T_, T_);
      CSMapM dO(dctx.data() + static_cast<std::size_t>(n) * T_ * dim_ +
                    static_cast<std::size_t>(h) * dh_,
                T_, dh_, StrideT(dim_));

      EMat dP = dO * V.transpose();          // (T, T)
      EMat dV = P.transpose() * dO;          // (T, dh)
      // Softmax backward per row: dS = P .* (dP - rowsum(dP .* P)).
      EMat dS(T_, T_);
      for (int i = 0; i < T_; ++i) {
        const float dot = dP.row(i).dot(P.row(i));
        for (int j = 0; j < T_; ++j) dS(i, j) = P(i, j) * (dP(i, j) - dot);
      }
      EMat dQ = dS * K * scale;
      EMat dK = dS.transpose() * Q * scale;

      SMapM(dbase + static_cast<std::size_t>(h) * dh_, T_, dh_, StrideT(3 * dim_)) = dQ;
      SMapM(dbase + dim_ + static_cast<std::size_t>(h) * dh_, T_, dh_, StrideT(3 * dim_)) = dK;
      SMapM(dbase + 2 * dim_ + static_cast<std::size_t>(h) * dh_, T_, dh_, StrideT(3 * dim_)) = dV;
    }
  }
  return qkv_.backward(dqkv);
}

void MultiHeadAttention::collect(std::vector<Parameter*>& out) {
  qkv_.collect(out);
  proj_.collect(out);
}

// ---------------------------------------------------------------------------
// TransformerBlock
// ---------------------------------------------------------------------------

TransformerBlock::TransformerBlock(const std::string& name, int dim, int heads, int mlp_hidden,
                                   ParamTag tag, Rng& rng)
    : ln1_(name + ".ln1", dim, tag),
      ln2_(name + ".ln2", dim, tag),
      attn_(name + ".attn", dim, heads, tag, rng),
      fc1_(name + ".fc1", dim, mlp_hidden, tag, rng),
      fc2_(name + ".fc2", mlp_hidden, dim, tag, rng) {}

Tensor TransformerBlock::forward(const Tensor& x) {
  Tensor a = attn_.forward(ln1_.forward(x));
  Tensor y(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] + a[i];
  Tensor m = fc2_.forward(act_.forward(fc1_.forward(ln2_.forward(y))));
  Tensor z(y.shape());
  for (std::int64_t i = 0; i < y.numel(); ++i) z[i] = y[i] + m[i];
  return z;
}

Tensor TransformerBlock::backward(const Tensor& dz) {
  Tensor dm = fc1_.backward(act_.backward(fc2_.backward(dz)));
  Tensor dy = ln2_.backward(dm);
  for (std::int64_t i = 0; i < dz.numel(); ++i) dy[i] += dz[i];
  Tensor da = ln1_.backward(attn_.backward(dy));
  for (std::int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i];
  return da;
}

void TransformerBlock::collect(std::vector<Parameter*>& out) {
  ln1_.collect(out);
  attn_.collect(out);
  ln2_.collect(out);
  fc1_.collect(out);
  fc2_.collect(out);
}

// ---------------------------------------------------------------------------
// BasicBlock
// ---------------------------------------------------------------------------

BasicBlock::BasicBlock(const std::string& name, int in_c, int out_c, int stride,
                       ParamTag conv_tag, ParamTag bn_affine_tag, Rng& rng)
    : conv1_(name + ".conv1", in_c, out_c, 3, stride, 1, conv_tag, rng),
      conv2_(name + ".conv2", out_c, out_c, 3, 1, 1, conv_tag, rng),
      bn1_(name + ".bn1", out_c, bn_affine_tag),
      bn2_(name + ".bn2", out_c, bn_affine_tag) {
  if (stride != 1 || in_c != out_c) {
    down_conv_.emplace(name + ".down.conv", in_c, out_c, 1, stride, 0, conv_tag, rng);
    down_bn_.emplace(name + ".down.bn", out_c, bn_affine_tag);
  }
}

Tensor BasicBlock::forward(const Tensor& x) {
  Tensor h = relu1_.forward(bn1_.forward(conv1_.forward(x)));
  Tensor h2 = bn2_.forward(conv2_.forward(h));
  Tensor s = down_conv_ ? down_bn_->forward(down_conv_->forward(x)) : x;
  for (std::int64_t i = 0; i < h2.numel(); ++i) h2[i] += s[i];
  return relu2_.forward(h2);
}

Tensor BasicBlock::backward(const Tensor& dy) {
  Tensor d = relu2_.backward(dy);
  Tensor dx_main = conv1_.backward(bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(d)))));
  Tensor dx_skip = down_conv_ ? down_conv_->backward(down_bn_->backward(d)) : d;
  for (std::int64_t i = 0; i < dx_main.numel(); ++i) dx_main[i] += dx_skip[i];
  return dx_main;
}

void BasicBlock::set_bn_mode(BnMode m) {
  bn1_.set_mode(m);
  bn2_.set_mode(m);
  if (down_bn_) down_bn_->set_mode(m);
}

int BasicBlock::num_bn() const { return down_bn_ ? 3 : 2; }

void BasicBlock::collect(std::vector<Parameter*>& out) {
  conv1_.collect(out);
  bn1_.collect(out);
  conv2_.collect(out);
  bn2_.collect(out);
  if (down_conv_) {
    down_conv_->collect(out);
    down_bn_->collect(out);
  }
}

}  // namespace tta
