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

#ifndef TTA_NN_LAYERS_HPP
#define TTA_NN_LAYERS_HPP

#include <optional>
#include <string>
#include <vector>

#include "tta/nn/tensor.hpp"
#include "tta/rng.hpp"

namespace tta {

// Every trainable array and BN statistic carries exactly one tag; adapters
// select update subsets by tag, and BNStats is never touched by an optimizer.
enum class ParamTag {
  SharedBackbone,  // θ_sh
  ClassHead,       // θ_cl
  PretextHead,     // θ_tf
  BNAffine,        // γ, β when adaptable on their own
  BNStats,         // running μ, σ² (updated by forward passes only)
  Other,
};

std::string to_string(ParamTag t);

struct Parameter {
  std::string name;  // layer path, e.g. "block1.conv1.weight"
  ParamTag tag = ParamTag::Other;
  Tensor value;
  Tensor grad;  // same shape as value; accumulated by backward passes

  Parameter() = default;
  Parameter(std::string n, ParamTag t, Tensor v)
      : name(std::move(n)), tag(t), value(std::move(v)), grad(Tensor(value.shape())) {}
};

// BN forward behaviour:
//   Running - normalize with stored running stats (eval; stats frozen)
//   Batch   - normalize with current-batch stats, running stats untouched
//             (test-time adaptation mode: the source stats are abandoned)
//   Train   - normalize with batch stats and update the running stats
enum class BnMode { Running, Batch, Train };

// ---------------------------------------------------------------------------
// Layers. Each forward caches what its backward needs; backward accumulates
// into Parameter::grad and returns the gradient w.r.t. its input.
// ---------------------------------------------------------------------------

class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out, ParamTag tag, Rng& rng);

  // x: (N, in) or (B, T, in); rank-3 inputs are treated as B*T rows.
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void collect(std::vector<Parameter*>& out);

  Parameter w;  // (out, in)
  Parameter b;  // (out)

 private:
  Tensor x_;                   // flattened (N, in)
  std::vector<int> in_shape_;  // original input shape
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in_c, int out_c, int ksize, int stride, int pad,
         ParamTag tag, Rng& rng);

  Tensor forward(const Tensor& x);  // (B, C, H, W) -> (B, OC, OH, OW)
  Tensor backward(const Tensor& dy);
  void collect(std::vector<Parameter*>& out);

  Parameter w;  // (out_c, in_c*k*k), GEMM-ready layout
  Parameter b;  // (out_c)

 private:
  int in_c_ = 0, out_c_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
  int B_ = 0, H_ = 0, W_ = 0, OH_ = 0, OW_ = 0;
  FVec cols_;  // cached im2col matrices, B x (CKK x OHOW)
};

class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name, int channels, ParamTag affine_tag, double eps = 1e-5,
              double momentum = 0.1);

  Tensor forward(const Tensor& x);  // (B, C, H, W)
  Tensor backward(const Tensor& dy);
  void set_mode(BnMode m) { mode_ = m; }
  BnMode mode() const { return mode_; }
  void collect(std::vector<Parameter*>& out);

  Parameter gamma, beta;                  // affine_tag
  Parameter running_mean, running_var;    // BNStats

 private:
  BnMode mode_ = BnMode::Train;
  float eps_ = 1e-5f;
  float momentum_ = 0.1f;
  int C_ = 0;
  // caches for backward
  Tensor xhat_;
  std::vector<float> inv_std_;
  int m_ = 0;  // elements per channel in the batch
  BnMode fwd_mode_ = BnMode::Train;
};

class GroupNorm {
 public:
  GroupNorm() = default;
  GroupNorm(const std::string& name, int groups, int channels, ParamTag tag, double eps = 1e-5);

  Tensor forward(const Tensor& x);  // (B, C, H, W)
  Tensor backward(const Tensor& dy);
  void collect(std::vector<Parameter*>& out);

  Parameter gamma, beta;  // per channel

 private:
  int groups_ = 1;
  int C_ = 0;
  float eps_ = 1e-5f;
  Tensor xhat_;
  std::vector<float> inv_std_;  // per (b, group)
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim, ParamTag tag, double eps = 1e-5);

  // Normalizes the last dimension; (N, D) or (B, T, D).
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void collect(std::vector<Parameter*>& out);

  Parameter gamma, beta;  // (D)

 private:
  int dim_ = 0;
  float eps_ = 1e-5f;
  Tensor xhat_;                 // flattened (N, D)
  std::vector<float> inv_std_;  // per row
  std::vector<int> in_shape_;
};

class ReLU {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

 private:
  Tensor x_;
};

// (B, C, H, W) -> (B, C) mean over the spatial extent.
class GlobalAvgPool {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

 private:
  int B_ = 0, C_ = 0, H_ = 0, W_ = 0;
};

class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, int dim, int heads, ParamTag tag, Rng& rng);

  Tensor forward(const Tensor& x);  // (B, T, D) -> (B, T, D)
  Tensor backward(const Tensor& dy);
  void collect(std::vector<Parameter*>& out);

 private:
  int dim_ = 0, heads_ = 0, dh_ = 0;
  int B_ = 0, T_ = 0;
  Linear qkv_;   // D -> 3D
  Linear proj_;  // D -> D
  Tensor qkv_out_;            // (B, T, 3D)
  FVec probs_;  // (B, heads, T, T) attention rows
};

// Pre-norm residual block: x + MHA(LN(x)), then y + MLP(LN(y)).
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(const std::string& name, int dim, int heads, int mlp_hidden, ParamTag tag,
                   Rng& rng);

  Tensor forward(const Tensor& x);  // (B, T, D)
  Tensor backward(const Tensor& dy);
  void collect(std::vector<Parameter*>& out);

 private:
  LayerNorm ln1_, ln2_;
  MultiHeadAttention attn_;
  Linear fc1_, fc2_;
  ReLU act_;
};

// Residual conv block: ReLU(BN(conv) -> ReLU -> BN(conv) + skip), with a
// strided 1x1 projection on the skip when shape changes.
class BasicBlock {
 public:
  BasicBlock() = default;
  BasicBlock(const std::string& name, int in_c, int out_c, int stride, ParamTag conv_tag,
             ParamTag bn_affine_tag, Rng& rng);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void set_bn_mode(BnMode m);
  int num_bn() const;
  void collect(std::vector<Parameter*>& out);

 private:
  Conv2d conv1_, conv2_;
  BatchNorm2d bn1_, bn2_;
  ReLU relu1_, relu2_;
  std::optional<Conv2d> down_conv_;
  std::optional<BatchNorm2d> down_bn_;
};

}  // namespace tta

#endif  // TTA_NN_LAYERS_HPP
