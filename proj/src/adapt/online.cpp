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

#include "tta/adapt/online.hpp"

#include <algorithm>
#include <numeric>

#include "tta/errors.hpp"
#include "tta/nn/losses.hpp"

namespace tta {

std::string to_string(AdaptMode mode) {
  switch (mode) {
    case AdaptMode::Tent:
      return "tent";
    case AdaptMode::Norm:
      return "norm";
    case AdaptMode::TTT:
      return "ttt";
  }
  return "?";
}

std::set<ParamTag> update_tags_for(AdaptMode mode) {
  switch (mode) {
    case AdaptMode::Tent:
      return {ParamTag::BNAffine};
    case AdaptMode::Norm:
      return {};
    case AdaptMode::TTT:
      return {ParamTag::SharedBackbone, ParamTag::PretextHead};
  }
  return {};
}

OnlineAdaptState::OnlineAdaptState(AdaptableModel& m, OnlineAdaptConfig c)
    : model(&m),
      cfg(c),
      opt({c.lr, c.momentum}, update_tags_for(c.mode)),
      checkpoint(snapshot_parameters(m)) {}

namespace {

void require_bn_batch(const OnlineAdaptState& st, std::size_t batch_size) {
  if (st.model->num_bn_layers() == 0) {
    throw NoBNLayers("batch-statistic adaptation needs at least one BN layer");
  }
  if (batch_size < 2) {
    throw BatchTooSmall("batch statistics need at least 2 samples, got " +
                        std::to_string(batch_size));
  }
}

}  // namespace

std::vector<int> tent_step(OnlineAdaptState& st, const std::vector<SpectrogramImage>& batch) {
  require_bn_batch(st, batch.size());
  st.model->set_bn_mode(BnMode::Batch);
  const auto params = st.model->parameters();
  Sgd::zero_grad(params);

  Tensor logits = st.model->forward(stack_batch(batch), Head::Class);
  const LossResult le = entropy_sum_loss(logits_to_dmat(logits));
  st.model->backward(dmat_to_tensor(le.dlogits));
  st.opt.step(params);

  st.loss_trace.push_back(le.value);
  ++st.step;
  // Predictions come from the forward pass that produced the entropy loss,
  // i.e. from before this step's update.
  return argmax_rows(logits);
}

std::vector<int> norm_step(OnlineAdaptState& st, const std::vector<SpectrogramImage>& batch) {
  require_bn_batch(st, batch.size());
  st.model->set_bn_mode(BnMode::Batch);
  Tensor logits = st.model->forward(stack_batch(batch), Head::Class);
  // Forward-only: the entropy value is recorded as a diagnostic, but nothing
  // is backpropagated and no parameter (affine or statistic) changes.
  st.loss_trace.push_back(entropy_sum_loss(logits_to_dmat(logits)).value);
  ++st.step;
  return argmax_rows(logits);
}

std::vector<int> ttt_step(OnlineAdaptState& st, const std::vector<Waveform>& batch) {
  if (st.model->config().family != ModelFamily::DualHeadResNet) {
    throw HeadUnavailable("time-shift adaptation needs the dual-head family");
  }
  if (st.cfg.episodic_reset) {
    restore_parameters(*st.model, st.checkpoint);
    st.opt.reset();
  }
  // Running statistics stay frozen: adaptation may touch only the shared
  // trunk and the pretext head.
  st.model->set_bn_mode(BnMode::Running);
  const auto params = st.model->parameters();
  Sgd::zero_grad(params);

  std::vector<SpectrogramImage> pretext_in;
  std::vector<int> pretext_labels;
  std::vector<SpectrogramImage> class_in;
  pretext_in.reserve(batch.size() * 3);
  for (const Waveform& w : batch) {
    for (Shift k : {Shift::None, Shift::Left, Shift::Right}) {
      pretext_in.push_back(mel_spectrogram(time_shift(w, {k, st.cfg.shift_fraction}),
                                           st.cfg.features));
      pretext_labels.push_back(static_cast<int>(k));
    }
    class_in.push_back(pretext_in[pretext_in.size() - 3]);  // the unshifted copy
  }

  Tensor pre_logits = st.model->forward(stack_batch(pretext_in), Head::Pretext);
  const LossResult lp = cross_entropy_loss(logits_to_dmat(pre_logits), pretext_labels);
  st.model->backward(dmat_to_tensor(lp.dlogits));
  st.opt.step(params);

  st.loss_trace.push_back(lp.value);
  ++st.step;

  // Predict with the just-updated weights.
  Tensor logits = st.model->forward(stack_batch(class_in), Head::Class);
  return argmax_rows(logits);
}

std::vector<std::vector<int>> ttt_online(OnlineAdaptState& st,
                                         const std::vector<std::vector<Waveform>>& stream) {
  std::vector<std::vector<int>> predictions;
  predictions.reserve(stream.size());
  for (const auto& batch : stream) predictions.push_back(ttt_step(st, batch));
  return predictions;
}

std::vector<std::vector<std::size_t>> stream_batches(std::size_t n, int batch_size) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(n, i + static_cast<std::size_t>(batch_size));
    std::vector<std::size_t> b(end - i);
    std::iota(b.begin(), b.end(), i);
    batches.push_back(std::move(b));
  }
  if (batches.size() >= 2 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

std::vector<double> multi_epoch_adapt(OnlineAdaptState& st, const AdaptDataset& test_set,
                                      int epochs) {
  // Spectrograms are computed once; Tent/Norm consume them directly, TTT
  // rebuilds its shifted copies from the waveforms each step.
  std::vector<SpectrogramImage> specs;
  specs.reserve(test_set.waves.size());
  for (const Waveform& w : test_set.waves) {
    specs.push_back(mel_spectrogram(w, st.cfg.features));
  }
  const auto batches = stream_batches(test_set.waves.size(), st.cfg.batch_size);

  std::vector<double> error_rates;
  error_rates.reserve(static_cast<std::size_t>(epochs));
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::size_t correct = 0;
    for (const auto& batch : batches) {
      std::vector<int> preds;
      if (st.cfg.mode == AdaptMode::TTT) {
        std::vector<Waveform> waves;
        waves.reserve(batch.size());
        for (std::size_t j : batch) waves.push_back(test_set.waves[j]);
        preds = ttt_step(st, waves);
      } else {
        std::vector<SpectrogramImage> in;
        in.reserve(batch.size());
        for (std::size_t j : batch) in.push_back(specs[j]);
        preds = st.cfg.mode == AdaptMode::Tent ? tent_step(st, in) : norm_step(st, in);
      }
      for (std::size_t r = 0; r < batch.size(); ++r) {
        if (preds[r] == test_set.labels[batch[r]]) ++correct;
      }
    }
    error_rates.push_back(100.0 *
                          (1.0 - static_cast<double>(correct) /
                                     static_cast<double>(test_set.waves.size())));
  }
  return error_rates;
}

}  // namespace tta
