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

#ifndef TTA_ADAPT_ONLINE_HPP
#define TTA_ADAPT_ONLINE_HPP

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "tta/models/models.hpp"

namespace tta {

// Online test-time adaptation methods:
//   Tent — entropy backprop into BN affine parameters, batch statistics.
//   Norm — forward-only batch statistics, no parameter updates at all.
//   TTT  — time-shift pretext gradient into shared trunk + pretext head.
enum class AdaptMode { Tent, Norm, TTT };

std::string to_string(AdaptMode mode);

struct OnlineAdaptConfig {
  AdaptMode mode = AdaptMode::Tent;
  double lr = 1e-3;  // SGD step size for Tent/TTT; no weight decay
  double momentum = 0.9;
  int batch_size = 64;
  // TTT only: restore the checkpoint before every batch (batch-episodic
  // regime). Kept as a test hook; the online regime is the default.
  bool episodic_reset = false;
  double shift_fraction = 0.2;  // TTT pretext circular-shift magnitude
  FeatureConfig features;       // for the waveform-consuming paths
};

// Which parameter tags each method may touch. Everything else must stay
// bit-identical to the checkpoint, enforced by parameter diffs in tests.
std::set<ParamTag> update_tags_for(AdaptMode mode);

// Mutable adaptation state: the model being adapted, its optimizer (momentum
// carries across steps), the per-step loss trace, and a full parameter
// snapshot taken at construction — the reference for episodic resets and for
// the update-subset contracts.
struct OnlineAdaptState {
  OnlineAdaptState(AdaptableModel& m, OnlineAdaptConfig c);

  AdaptableModel* model;
  OnlineAdaptConfig cfg;
  int step = 0;
  std::vector<double> loss_trace;
  Sgd opt;
  std::vector<std::vector<float>> checkpoint;
};

// One Tent step: forward with current-batch BN statistics, backprop the
// summed prediction entropy, update gamma/beta only. Predictions come from
// the same forward pass that produced the entropy loss.
std::vector<int> tent_step(OnlineAdaptState& st, const std::vector<SpectrogramImage>& batch);

// One Norm step: forward with current-batch BN statistics. No backward pass,
// no parameter changes of any kind.
std::vector<int> norm_step(OnlineAdaptState& st, const std::vector<SpectrogramImage>& batch);

// One TTT step: expand the batch with the three shift classes, backprop the
// pretext cross-entropy into shared trunk + pretext head (class head frozen,
// BN running statistics frozen), then predict the unshifted batch with the
// just-updated weights.
std::vector<int> ttt_step(OnlineAdaptState& st, const std::vector<Waveform>& batch);

// Accumulative online TTT over a stream of batches (no reset between batches
// unless cfg.episodic_reset). Returns per-batch predictions.
std::vector<std::vector<int>> ttt_online(OnlineAdaptState& st,
                                         const std::vector<std::vector<Waveform>>& stream);

struct AdaptDataset {
  std::vector<Waveform> waves;
  std::vector<int> labels;  // ground truth, used only to measure error
};

// Repeated online passes over the test set in stream order, inheriting
// weights across epochs. Returns the online top-1 error rate (percent) after
// each epoch; epoch 1 therefore equals a plain single online pass.
std::vector<double> multi_epoch_adapt(OnlineAdaptState& st, const AdaptDataset& test_set,
                                      int epochs);

// Contiguous batches in stream order; a trailing singleton is merged into the
// previous batch so batch statistics stay defined.
std::vector<std::vector<std::size_t>> stream_batches(std::size_t n, int batch_size);

}  // namespace tta

#endif  // TTA_ADAPT_ONLINE_HPP
