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

#ifndef TTA_MODELS_MODELS_HPP
#define TTA_MODELS_MODELS_HPP

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "tta/features/features.hpp"
#include "tta/nn/layers.hpp"
#include "tta/nn/optim.hpp"

namespace tta {

// BNResNet: BatchNorm conv-residual net (entropy-adaptation target).
// DualHeadResNet: shared conv trunk with class + time-shift heads.
// GNTransformer: GroupNorm conv embedding + attention blocks.
enum class ModelFamily { BNResNet, DualHeadResNet, GNTransformer };

enum class Head { Class, Pretext };

struct ModelConfig {
  ModelFamily family = ModelFamily::BNResNet;
  int num_classes = 10;
  int num_shift_classes = 3;
  int mel_bins = 32;
  int frames = 26;
  int width = 8;       // base channel count for the conv families
  int depth = 4;       // residual blocks / attention blocks
  int embed_dim = 32;  // transformer token width
  int heads = 4;
  std::uint64_t init_seed = 1;

  std::string canonical() const;
  std::uint64_t hash() const;
};

class AdaptableModel {
 public:
  virtual ~AdaptableModel() = default;

  // x: (B, 1, mel_bins, frames). Returns logits (B, num_classes) for the
  // class head or (B, num_shift_classes) for the pretext head.
  virtual Tensor forward(const Tensor& x, Head head = Head::Class) = 0;
  // Backward through the head used by the last forward; accumulates gradients
  // and returns d loss / d input.
  virtual Tensor backward(const Tensor& dlogits) = 0;
  // Penultimate features (B, feature_dim) cached by the last forward.
  virtual const Tensor& features() const = 0;
  virtual std::vector<Parameter*> parameters() = 0;
  virtual void set_bn_mode(BnMode m) = 0;
  virtual int num_bn_layers() const = 0;
  virtual const ModelConfig& config() const = 0;
};

std::unique_ptr<AdaptableModel> make_model(const ModelConfig& cfg);

// Single-file checkpoint: magic, config (with hash), then named arrays keyed
// by (layer path, tag). Loading into an existing model rejects a config-hash
// mismatch.
void save_checkpoint(const std::string& path, AdaptableModel& model);
std::unique_ptr<AdaptableModel> load_checkpoint(const std::string& path);
void load_checkpoint_into(const std::string& path, AdaptableModel& model);

// Full value snapshot / exhaustive diff, for the update-subset contracts.
std::vector<std::vector<float>> snapshot_parameters(AdaptableModel& model);
// Names of parameters whose current value differs anywhere from the snapshot
// (bitwise comparison, zero tolerance).
std::vector<std::string> diff_parameters(AdaptableModel& model,
                                         const std::vector<std::vector<float>>& snapshot);
// Copy a snapshot's values back into the model (episodic resets).
void restore_parameters(AdaptableModel& model,
                        const std::vector<std::vector<float>>& snapshot);

// Top-1 class per row; ties broken toward the lowest class id.
std::vector<int> argmax_rows(const Tensor& logits);

// Label the whole set with fixed-size Running-mode forward passes. Leaves the
// model in Running mode.
std::vector<int> predict_labels(AdaptableModel& model, const std::vector<SpectrogramImage>& inputs,
                                int chunk = 64);

// Shuffled index batches of at least 2: a trailing singleton is merged into
// the previous batch so batch statistics stay defined.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, int batch_size, Rng& rng);

// ---------------------------------------------------------------------------
// Pre-training
// ---------------------------------------------------------------------------

struct LabeledSpectrogramSet {
  std::vector<SpectrogramImage> inputs;
  std::vector<int> labels;
};

struct LabeledWaveSet {
  std::vector<Waveform> waves;
  std::vector<int> labels;
};

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double lr = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  std::set<ParamTag> update_tags = Sgd::all_trainable();
};

struct TrainTrace {
  std::vector<double> epoch_loss;        // mean class loss per epoch
  std::vector<double> epoch_accuracy;    // train accuracy per epoch
  std::vector<double> step_class_loss;   // per optimization step
  std::vector<double> step_pretext_loss; // dual-head training only
};

// Plain supervised training of the class head (cross-entropy).
TrainTrace pretrain_classifier(AdaptableModel& model, const LabeledSpectrogramSet& train,
                               const TrainConfig& cfg);

// Joint training: class cross-entropy on unshifted copies plus time-shift
// cross-entropy on all three shifted copies; both logged separately.
TrainTrace pretrain_ttt(AdaptableModel& model, const LabeledWaveSet& train,
                        const FeatureConfig& fcfg, double shift_fraction,
                        const TrainConfig& cfg);

}  // namespace tta

#endif  // TTA_MODELS_MODELS_HPP
