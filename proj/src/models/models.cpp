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

#include "tta/models/models.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "tta/errors.hpp"
#include "tta/nn/losses.hpp"

namespace tta {

std::string ModelConfig::canonical() const {
  std::ostringstream os;
  os << "family=" << static_cast<int>(family) << ";classes=" << num_classes
     << ";shifts=" << num_shift_classes << ";mel=" << mel_bins << ";frames=" << frames
     << ";width=" << width << ";depth=" << depth << ";embed=" << embed_dim
     << ";heads=" << heads << ";init_seed=" << init_seed;
  return os.str();
}

std::uint64_t ModelConfig::hash() const { return fnv1a64(canonical()); }

namespace {

// Shared residual trunk used by both conv families. Channel count doubles at
// every second block, which also strides by 2.
struct ConvTrunk {
  Conv2d stem_conv;
  BatchNorm2d stem_bn;
  ReLU stem_relu;
  std::vector<BasicBlock> blocks;
  GlobalAvgPool pool;
  int out_channels = 0;

  ConvTrunk(const ModelConfig& cfg, ParamTag conv_tag, ParamTag bn_tag, Rng& rng)
      : stem_conv("stem.conv", 1, cfg.width, 3, 2, 1, conv_tag, rng),
        stem_bn("stem.bn", cfg.width, bn_tag) {
    int c = cfg.width;
    blocks.reserve(static_cast<std::size_t>(cfg.depth));
    for (int i = 0; i < cfg.depth; ++i) {
      const int stride = i % 2 == 1 ? 2 : 1;
      const int out_c = stride == 2 ? c * 2 : c;
      blocks.emplace_back("block" + std::to_string(i), c, out_c, stride, conv_tag, bn_tag, rng);
      c = out_c;
    }
    out_channels = c;
  }

  Tensor forward(const Tensor& x) {
    Tensor h = stem_relu.forward(stem_bn.forward(stem_conv.forward(x)));
    for (auto& b : blocks) h = b.forward(h);
    return pool.forward(h);
  }

  Tensor backward(const Tensor& dfeat) {
    Tensor d = pool.backward(dfeat);
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) d = it->backward(d);
    return stem_conv.backward(stem_bn.backward(stem_relu.backward(d)));
  }

  void set_bn_mode(BnMode m) {
    stem_bn.set_mode(m);
    for (auto& b : blocks) b.set_bn_mode(m);
  }

  int num_bn() const {
    int n = 1;
    for (const auto& b : blocks) n += b.num_bn();
    return n;
  }

  void collect(std::vector<Parameter*>& out) {
    stem_conv.collect(out);
    stem_bn.collect(out);
    for (auto& b : blocks) b.collect(out);
  }
};

class BNResNet final : public AdaptableModel {
 public:
  explicit BNResNet(const ModelConfig& cfg) : cfg_(cfg), rng_(cfg.init_seed) {
    trunk_ = std::make_unique<ConvTrunk>(cfg, ParamTag::SharedBackbone, ParamTag::BNAffine, rng_);
    head_ = Linear("head", trunk_->out_channels, cfg.num_classes, ParamTag::ClassHead, rng_);
  }

  Tensor forward(const Tensor& x, Head head) override {
    if (head != Head::Class) throw HeadUnavailable("single-head model");
    features_ = trunk_->forward(x);
    return head_.forward(features_);
  }

  Tensor backward(const Tensor& dlogits) override {
    return trunk_->backward(head_.backward(dlogits));
  }

  const Tensor& features() const override { return features_; }

  std::vector<Parameter*> parameters() override {
    std::vector<Parameter*> out;
    trunk_->collect(out);
    head_.collect(out);
    return out;
  }

  void set_bn_mode(BnMode m) override { trunk_->set_bn_mode(m); }
  int num_bn_layers() const override { return trunk_->num_bn(); }
  const ModelConfig& config() const override { return cfg_; }

 private:
  ModelConfig cfg_;
  Rng rng_;
  std::unique_ptr<ConvTrunk> trunk_;
  Linear head_;
  Tensor features_;
};

class DualHeadResNet final : public AdaptableModel {
 public:
  explicit DualHeadResNet(const ModelConfig& cfg) : cfg_(cfg), rng_(cfg.init_seed) {
    // BN affine belongs to the shared trunk here: the pretext gradient is
    // allowed to move it, unlike in the entropy-adaptation family.
    trunk_ = std::make_unique<ConvTrunk>(cfg, ParamTag::SharedBackbone,
                                         ParamTag::SharedBackbone, rng_);
    class_head_ = Linear("class_head", trunk_->out_channels, cfg.num_classes,
                         ParamTag::ClassHead, rng_);
    pretext_head_ = Linear("pretext_head", trunk_->out_channels, cfg.num_shift_classes,
                           ParamTag::PretextHead, rng_);
  }

  Tensor forward(const Tensor& x, Head head) override {
    features_ = trunk_->forward(x);
    last_head_ = head;
    return head == Head::Class ? class_head_.forward(features_)
                               : pretext_head_.forward(features_);
  }

  Tensor backward(const Tensor& dlogits) override {
    Tensor dfeat = last_head_ == Head::Class ? class_head_.backward(dlogits)
                                             : pretext_head_.backward(dlogits);
    return trunk_->backward(dfeat);
  }

  const Tensor& features() const override { return features_; }

  std::vector<Parameter*> parameters() override {
    std::vector<Parameter*> out;
    trunk_->collect(out);
    class_head_.collect(out);
    pretext_head_.collect(out);
    return out;
  }

  void set_bn_mode(BnMode m) override { trunk_->set_bn_mode(m); }
  int num_bn_layers() const override { return trunk_->num_bn(); }
  const ModelConfig& config() const override { return cfg_; }

 private:
  ModelConfig cfg_;
  Rng rng_;
  std::unique_ptr<ConvTrunk> trunk_;
  Linear class_head_, pretext_head_;
  Head last_head_ = Head::Class;
  Tensor features_;
};

class GNTransformer final : public AdaptableModel {
 public:
  explicit GNTransformer(const ModelConfig& cfg) : cfg_(cfg), rng_(cfg.init_seed) {
    const ParamTag tag = ParamTag::SharedBackbone;
    const int w = cfg.width;
    const int d = cfg.embed_dim;
    conv1_ = Conv2d("embed.conv1", 1, w, 3, 2, 1, tag, rng_);
    gn1_ = GroupNorm("embed.gn1", std::min(4, w), w, tag);
    conv2_ = Conv2d("embed.conv2", w, w, 3, 2, 1, tag, rng_);
    gn2_ = GroupNorm("embed.gn2", std::min(4, w), w, tag);
    conv3_ = Conv2d("embed.conv3", w, d, 3, 2, 1, tag, rng_);
    th_ = spatial_out(spatial_out(spatial_out(cfg.mel_bins)));
    tw_ = spatial_out(spatial_out(spatial_out(cfg.frames)));
    tokens_ = th_ * tw_;

    Tensor pe({tokens_, d});
    std::normal_distribution<float> pdist(0.0f, 0.02f);
    for (auto& v : pe.vec()) v = pdist(rng_);
    pos_embed_ = Parameter("pos_embed", tag, std::move(pe));

    blocks_.reserve(static_cast<std::size_t>(cfg.depth));
    for (int i = 0; i < cfg.depth; ++i) {
      blocks_.emplace_back("tblock" + std::to_string(i), d, cfg.heads, 2 * d, tag, rng_);
    }
    final_ln_ = LayerNorm("final_ln", d, tag);
    head_ = Linear("head", d, cfg.num_classes, ParamTag::ClassHead, rng_);
  }

  Tensor forward(const Tensor& x, Head head) override {
    if (head != Head::Class) throw HeadUnavailable("single-head model");
    const int B = x.dim(0);
    const int d = cfg_.embed_dim;
    Tensor fmap = conv3_.forward(relu2_.forward(
        gn2_.forward(conv2_.forward(relu1_.forward(gn1_.forward(conv1_.forward(x)))))));
    // (B, D, th, tw) -> tokens (B, T, D), plus the learned position term.
    Tensor tok({B, tokens_, d});
    for (int n = 0; n < B; ++n) {
      for (int c = 0; c < d; ++c) {
        for (int t = 0; t < tokens_; ++t) {
          tok.data()[(static_cast<std::size_t>(n) * tokens_ + t) * d + c] =
              fmap.data()[(static_cast<std::size_t>(n) * d + c) * tokens_ + t] +
              pos_embed_.value.at(t, c);
        }
      }
    }
    Tensor h = tok;
    for (auto& b : blocks_) h = b.forward(h);
    h = final_ln_.forward(h);
    // Mean over tokens.
    features_ = Tensor({B, d});
    for (int n = 0; n < B; ++n) {
      for (int c = 0; c < d; ++c) {
        double acc = 0.0;
        for (int t = 0; t < tokens_; ++t) {
          acc += h.data()[(static_cast<std::size_t>(n) * tokens_ + t) * d + c];
        }
        features_.at(n, c) = static_cast<float>(acc / tokens_);
      }
    }
    return head_.forward(features_);
  }

  Tensor backward(const Tensor& dlogits) override {
    const int B = dlogits.dim(0);
    const int d = cfg_.embed_dim;
    Tensor dfeat = head_.backward(dlogits);  // (B, d)
    Tensor dh({B, tokens_, d});
    for (int n = 0; n < B; ++n) {
      for (int t = 0; t < tokens_; ++t) {
        for (int c = 0; c < d; ++c) {
          dh.data()[(static_cast<std::size_t>(n) * tokens_ + t) * d + c] =
              dfeat.at(n, c) / static_cast<float>(tokens_);
        }
      }
    }
    Tensor dtok = final_ln_.backward(dh);
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) dtok = it->backward(dtok);
    // Position term gradient sums over the batch.
    for (int n = 0; n < B; ++n) {
      for (int t = 0; t < tokens_; ++t) {
        for (int c = 0; c < d; ++c) {
          pos_embed_.grad.at(t, c) +=
              dtok.data()[(static_cast<std::size_t>(n) * tokens_ + t) * d + c];
        }
      }
    }
    // Tokens back to the conv feature map layout.
    Tensor dmap({B, d, th_, tw_});
    for (int n = 0; n < B; ++n) {
      for (int c = 0; c < d; ++c) {
        for (int t = 0; t < tokens_; ++t) {
          dmap.data()[(static_cast<std::size_t>(n) * d + c) * tokens_ + t] =
              dtok.data()[(static_cast<std::size_t>(n) * tokens_ + t) * d + c];
        }
      }
    }
    return conv1_.backward(gn1_.backward(relu1_.backward(
        conv2_.backward(gn2_.backward(relu2_.backward(conv3_.backward(dmap)))))));
  }

  const Tensor& features() const override { return features_; }

  std::vector<Parameter*> parameters() override {
    std::vector<Parameter*> out;
    conv1_.collect(out);
    gn1_.collect(out);
    conv2_.collect(out);
    gn2_.collect(out);
    conv3_.collect(out);
    out.push_back(&pos_embed_);
    for (auto& b : blocks_) b.collect(out);
    final_ln_.collect(out);
    head_.collect(out);
    return out;
  }

  void set_bn_mode(BnMode) override {}  // no BN layers in this family
  int num_bn_layers() const override { return 0; }
  const ModelConfig& config() const override { return cfg_; }

 private:
  static int spatial_out(int v) { return (v + 2 - 3) / 2 + 1; }

  ModelConfig cfg_;
  Rng rng_;
  Conv2d conv1_, conv2_, conv3_;
  GroupNorm gn1_, gn2_;
  ReLU relu1_, relu2_;
  Parameter pos_embed_;
  std::vector<TransformerBlock> blocks_;
  LayerNorm final_ln_;
  Linear head_;
  int th_ = 0, tw_ = 0, tokens_ = 0;
  Tensor features_;
};

}  // namespace

std::unique_ptr<AdaptableModel> make_model(const ModelConfig& cfg) {
  switch (cfg.family) {
    case ModelFamily::BNResNet: return std::make_unique<BNResNet>(cfg);
    case ModelFamily::DualHeadResNet: return std::make_unique<DualHeadResNet>(cfg);
    case ModelFamily::GNTransformer: return std::make_unique<GNTransformer>(cfg);
  }
  throw HeadUnavailable("unknown model family");
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kCkptMagic[8] = {'T', 'T', 'A', 'C', 'K', 'P', 'T', '1'};

void write_config(std::ofstream& os, const ModelConfig& cfg) {
  const std::uint64_t h = cfg.hash();
  os.write(reinterpret_cast<const char*>(&h), 8);
  const std::int32_t ints[9] = {
      static_cast<std::int32_t>(cfg.family), cfg.num_classes, cfg.num_shift_classes,
      cfg.mel_bins, cfg.frames, cfg.width, cfg.depth, cfg.embed_dim, cfg.heads};
  os.write(reinterpret_cast<const char*>(ints), sizeof(ints));
  os.write(reinterpret_cast<const char*>(&cfg.init_seed), 8);
}

ModelConfig read_config(std::ifstream& in, std::uint64_t* stored_hash) {
  in.read(reinterpret_cast<char*>(stored_hash), 8);
  std::int32_t ints[9];
  in.read(reinterpret_cast<char*>(ints), sizeof(ints));
  ModelConfig cfg;
  cfg.family = static_cast<ModelFamily>(ints[0]);
  cfg.num_classes = ints[1];
  cfg.num_shift_classes = ints[2];
  cfg.mel_bins = ints[3];
  cfg.frames = ints[4];
  cfg.width = ints[5];
  cfg.depth = ints[6];
  cfg.embed_dim = ints[7];
  cfg.heads = ints[8];
  in.read(reinterpret_cast<char*>(&cfg.init_seed), 8);
  return cfg;
}

void load_arrays_into(std::ifstream& in, AdaptableModel& model) {
  std::unordered_map<std::string, Parameter*> by_name;
  for (Parameter* p : model.parameters()) by_name[p->name] = p;
  std::uint32_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 4);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), 4);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    std::uint8_t tag = 0, rank = 0;
    in.read(reinterpret_cast<char*>(&tag), 1);
    in.read(reinterpret_cast<char*>(&rank), 1);
    std::vector<int> dims(rank);
    for (auto& d : dims) {
      std::int32_t v = 0;
      in.read(reinterpret_cast<char*>(&v), 4);
      d = v;
    }
    const auto numel = Tensor::numel_of(dims);
    auto it = by_name.find(name);
    if (it == by_name.end() || it->second->value.shape() != dims ||
        static_cast<std::uint8_t>(it->second->tag) != tag) {
      throw CheckpointConfigMismatch("array " + name + " does not match the model");
    }
    in.read(reinterpret_cast<char*>(it->second->value.data()),
            static_cast<std::streamsize>(numel * sizeof(float)));
  }
  if (!in) throw CheckpointConfigMismatch("truncated checkpoint");
}

}  // namespace

void save_checkpoint(const std::string& path, AdaptableModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointMissing("cannot write " + path);
  os.write(kCkptMagic, 8);
  write_config(os, model.config());
  const auto params = model.parameters();
  const auto count = static_cast<std::uint32_t>(params.size());
  os.write(reinterpret_cast<const char*>(&count), 4);
  for (const Parameter* p : params) {
    const auto name_len = static_cast<std::uint32_t>(p->name.size());
    os.write(reinterpret_cast<const char*>(&name_len), 4);
    os.write(p->name.data(), name_len);
    const auto tag = static_cast<std::uint8_t>(p->tag);
    const auto rank = static_cast<std::uint8_t>(p->value.rank());
    os.write(reinterpret_cast<const char*>(&tag), 1);
    os.write(reinterpret_cast<const char*>(&rank), 1);
    for (int d : p->value.shape()) {
      const std::int32_t v = d;
      os.write(reinterpret_cast<const char*>(&v), 4);
    }
    os.write(reinterpret_cast<const char*>(p->value.data()),
             static_cast<std::streamsize>(p->value.numel() * sizeof(float)));
  }
}

std::unique_ptr<AdaptableModel> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointMissing(path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kCkptMagic, 8) != 0) throw CheckpointConfigMismatch("bad magic");
  std::uint64_t stored_hash = 0;
  const ModelConfig cfg = read_config(in, &stored_hash);
  if (stored_hash != cfg.hash()) throw CheckpointConfigMismatch("config hash mismatch");
  auto model = make_model(cfg);
  load_arrays_into(in, *model);
  return model;
}

void load_checkpoint_into(const std::string& path, AdaptableModel& model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointMissing(path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kCkptMagic, 8) != 0) throw CheckpointConfigMismatch("bad magic");
  std::uint64_t stored_hash = 0;
  read_config(in, &stored_hash);
  if (stored_hash != model.config().hash()) {
    throw CheckpointConfigMismatch("checkpoint was written for a different config");
  }
  load_arrays_into(in, model);
}

std::vector<std::vector<float>> snapshot_parameters(AdaptableModel& model) {
  std::vector<std::vector<float>> snap;
  for (Parameter* p : model.parameters()) {
    snap.emplace_back(p->value.vec().begin(), p->value.vec().end());
  }
  return snap;
}

std::vector<std::string> diff_parameters(AdaptableModel& model,
                                         const std::vector<std::vector<float>>& snapshot) {
  std::vector<std::string> changed;
  const auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& cur = params[i]->value.vec();
    const auto& old = snapshot[i];
    const bool same = cur.size() == old.size() && std::equal(cur.begin(), cur.end(), old.begin());
    if (!same) changed.push_back(params[i]->name);
  }
  return changed;
}

void restore_parameters(AdaptableModel& model,
                        const std::vector<std::vector<float>>& snapshot) {
  const auto params = model.parameters();
  assert(params.size() == snapshot.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& v = params[i]->value.vec();
    assert(v.size() == snapshot[i].size());
    std::copy(snapshot[i].begin(), snapshot[i].end(), v.begin());
  }
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.dim(0)));
  for (int i = 0; i < logits.dim(0); ++i) {
    int best = 0;
    for (int j = 1; j < logits.dim(1); ++j) {
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, int batch_size, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(n, i + static_cast<std::size_t>(batch_size));
    batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(i),
                         idx.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() >= 2 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

std::vector<int> predict_labels(AdaptableModel& model, const std::vector<SpectrogramImage>& inputs,
                                int chunk) {
  model.set_bn_mode(BnMode::Running);
  std::vector<int> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); i += static_cast<std::size_t>(chunk)) {
    const std::size_t end = std::min(inputs.size(), i + static_cast<std::size_t>(chunk));
    std::vector<const SpectrogramImage*> items;
    items.reserve(end - i);
    for (std::size_t j = i; j < end; ++j) items.push_back(&inputs[j]);
    const Tensor logits = model.forward(stack_batch(items), Head::Class);
    const auto ids = argmax_rows(logits);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pre-training
// ---------------------------------------------------------------------------

namespace {

int argmax_row(const Tensor& logits, int row) {
  int best = 0;
  for (int j = 1; j < logits.dim(1); ++j) {
    if (logits.at(row, j) > logits.at(row, best)) best = j;
  }
  return best;
}

}  // namespace

TrainTrace pretrain_classifier(AdaptableModel& model, const LabeledSpectrogramSet& train,
                               const TrainConfig& cfg) {
  TrainTrace trace;
  model.set_bn_mode(BnMode::Train);
  Sgd opt({cfg.lr, cfg.momentum}, cfg.update_tags);
  const auto params = model.parameters();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, "pretrain_epoch", static_cast<std::uint64_t>(epoch)));
    const auto batches = make_batches(train.inputs.size(), cfg.batch_size, rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (const auto& batch : batches) {
      std::vector<const SpectrogramImage*> items;
      std::vector<int> labels;
      for (std::size_t j : batch) {
        items.push_back(&train.inputs[j]);
        labels.push_back(train.labels[j]);
      }
      Tensor logits = model.forward(stack_batch(items), Head::Class);
      const LossResult lr = cross_entropy_loss(logits_to_dmat(logits), labels);
      if (!std::isfinite(lr.value)) throw DivergedLoss("epoch " + std::to_string(epoch));
      loss_sum += lr.value * static_cast<double>(batch.size());
      for (std::size_t r = 0; r < batch.size(); ++r) {
        if (argmax_row(logits, static_cast<int>(r)) == labels[r]) ++correct;
      }
      Sgd::zero_grad(params);
      model.backward(dmat_to_tensor(lr.dlogits));
      opt.step(params);
      trace.step_class_loss.push_back(lr.value);
    }
    trace.epoch_loss.push_back(loss_sum / static_cast<double>(train.inputs.size()));
    trace.epoch_accuracy.push_back(static_cast<double>(correct) /
                                   static_cast<double>(train.inputs.size()));
  }
  model.set_bn_mode(BnMode::Running);
  return trace;
}

TrainTrace pretrain_ttt(AdaptableModel& model, const LabeledWaveSet& train,
                        const FeatureConfig& fcfg, double shift_fraction,
                        const TrainConfig& cfg) {
  if (model.config().family != ModelFamily::DualHeadResNet) {
    throw HeadUnavailable("joint shift pre-training needs the dual-head family");
  }
  TrainTrace trace;
  model.set_bn_mode(BnMode::Train);
  Sgd opt({cfg.lr, cfg.momentum}, cfg.update_tags);
  const auto params = model.parameters();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, "ttt_epoch", static_cast<std::uint64_t>(epoch)));
    const auto batches = make_batches(train.waves.size(), cfg.batch_size, rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (const auto& batch : batches) {
      std::vector<SpectrogramImage> class_in;
      std::vector<int> class_labels;
      std::vector<SpectrogramImage> pretext_in;
      std::vector<int> pretext_labels;
      for (std::size_t j : batch) {
        const Waveform& w = train.waves[j];
        class_in.push_back(mel_spectrogram(w, fcfg));
        class_labels.push_back(train.labels[j]);
        for (Shift k : {Shift::None, Shift::Left, Shift::Right}) {
          pretext_in.push_back(mel_spectrogram(time_shift(w, {k, shift_fraction}), fcfg));
          pretext_labels.push_back(static_cast<int>(k));
        }
      }
      Sgd::zero_grad(params);

      Tensor class_logits = model.forward(stack_batch(class_in), Head::Class);
      const LossResult lc = cross_entropy_loss(logits_to_dmat(class_logits), class_labels);
      model.backward(dmat_to_tensor(lc.dlogits));

      Tensor pre_logits = model.forward(stack_batch(pretext_in), Head::Pretext);
      const LossResult lp = cross_entropy_loss(logits_to_dmat(pre_logits), pretext_labels);
      model.backward(dmat_to_tensor(lp.dlogits));

      if (!std::isfinite(lc.value) || !std::isfinite(lp.value)) {
        throw DivergedLoss("epoch " + std::to_string(epoch));
      }
      opt.step(params);

      trace.step_class_loss.push_back(lc.value);
      trace.step_pretext_loss.push_back(lp.value);
      loss_sum += lc.value * static_cast<double>(batch.size());
      for (std::size_t r = 0; r < batch.size(); ++r) {
        if (argmax_row(class_logits, static_cast<int>(r)) == class_labels[r]) ++correct;
      }
    }
    trace.epoch_loss.push_back(loss_sum / static_cast<double>(train.waves.size()));
    trace.epoch_accuracy.push_back(static_cast<double>(correct) /
                                   static_cast<double>(train.waves.size()));
  }
  model.set_bn_mode(BnMode::Running);
  return trace;
}

}  // namespace tta
