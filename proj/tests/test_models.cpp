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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"
#include "tta/errors.hpp"
#include "tta/models/models.hpp"
#include "tta/nn/losses.hpp"

using namespace tta;

namespace {

ModelConfig tiny_config(ModelFamily family) {
  ModelConfig cfg;
  cfg.family = family;
  cfg.num_classes = 3;
  cfg.mel_bins = 32;
  cfg.frames = 26;
  cfg.width = 4;
  cfg.depth = 2;
  cfg.embed_dim = 16;
  cfg.heads = 2;
  cfg.init_seed = 7;
  return cfg;
}

Tensor random_input(int batch, const ModelConfig& cfg, Rng& rng) {
  Tensor x({batch, 1, cfg.mel_bins, cfg.frames});
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (auto& v : x.vec()) v = dist(rng);
  return x;
}

// Two-class stripe spectrograms: class k has energy in a class-specific band.
LabeledSpectrogramSet stripe_set(int per_class, int mel, int frames, Rng& rng) {
  LabeledSpectrogramSet set;
  std::normal_distribution<double> noise(0.0, 0.3);
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < per_class; ++i) {
      SpectrogramImage s;
      s.values = DMat(mel, frames);
      for (int m = 0; m < mel; ++m) {
        for (int f = 0; f < frames; ++f) {
          double v = noise(rng);
          const int band_lo = k == 0 ? mel / 8 : 5 * mel / 8;
          if (m >= band_lo && m < band_lo + mel / 4) v += 2.0;
          s.values.at(m, f) = v;
        }
      }
      set.inputs.push_back(std::move(s));
      set.labels.push_back(k);
    }
  }
  return set;
}

}  // namespace

TEST_CASE("forward shape and eval determinism for all three families") {
  Rng rng(1);
  for (ModelFamily fam :
       {ModelFamily::BNResNet, ModelFamily::DualHeadResNet, ModelFamily::GNTransformer}) {
    auto model = make_model(tiny_config(fam));
    model->set_bn_mode(BnMode::Running);
    Tensor x = random_input(4, model->config(), rng);
    Tensor logits = model->forward(x, Head::Class);
    REQUIRE(logits.shape() == std::vector<int>{4, 3});
    for (std::int64_t i = 0; i < logits.numel(); ++i) REQUIRE(std::isfinite(logits[i]));
    // Deterministic in eval mode.
    Tensor again = model->forward(x, Head::Class);
    CHECK(logits.vec() == again.vec());
    // Softmax rows normalize.
    const DMat p = softmax_rows(logits_to_dmat(logits));
    for (int i = 0; i < 4; ++i) {
      double sum = 0.0;
      for (int j = 0; j < 3; ++j) sum += p.at(i, j);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
    // Features come out of the same pass.
    CHECK(model->features().dim(0) == 4);
  }
}

TEST_CASE("pretext head exists only on the dual-head family") {
  Rng rng(2);
  auto dual = make_model(tiny_config(ModelFamily::DualHeadResNet));
  dual->set_bn_mode(BnMode::Running);
  Tensor x = random_input(2, dual->config(), rng);
  Tensor pre = dual->forward(x, Head::Pretext);
  REQUIRE(pre.shape() == std::vector<int>{2, 3});  // num_shift_classes

  auto bn = make_model(tiny_config(ModelFamily::BNResNet));
  CHECK_THROWS_AS(bn->forward(x, Head::Pretext), HeadUnavailable);
  auto tf = make_model(tiny_config(ModelFamily::GNTransformer));
  CHECK_THROWS_AS(tf->forward(x, Head::Pretext), HeadUnavailable);
}

TEST_CASE("tag layout matches each family's adaptation contract") {
  const auto tags_of = [](AdaptableModel& m) {
    std::map<ParamTag, int> count;
    for (Parameter* p : m.parameters()) ++count[p->tag];
    return count;
  };

  auto bn = make_model(tiny_config(ModelFamily::BNResNet));
  auto bn_tags = tags_of(*bn);
  CHECK(bn_tags[ParamTag::BNAffine] > 0);
  CHECK(bn_tags[ParamTag::BNStats] > 0);
  CHECK(bn_tags[ParamTag::SharedBackbone] > 0);
  CHECK(bn_tags[ParamTag::ClassHead] == 2);  // weight + bias
  CHECK(bn_tags[ParamTag::PretextHead] == 0);

  // Dual-head: BN affine belongs to the shared trunk, and both heads exist.
  auto dual = make_model(tiny_config(ModelFamily::DualHeadResNet));
  auto dual_tags = tags_of(*dual);
  CHECK(dual_tags[ParamTag::BNAffine] == 0);
  CHECK(dual_tags[ParamTag::BNStats] > 0);
  CHECK(dual_tags[ParamTag::ClassHead] == 2);
  CHECK(dual_tags[ParamTag::PretextHead] == 2);

  // Transformer: no BN anywhere; everything shared except the class head.
  auto tf = make_model(tiny_config(ModelFamily::GNTransformer));
  auto tf_tags = tags_of(*tf);
  CHECK(tf_tags[ParamTag::BNAffine] == 0);
  CHECK(tf_tags[ParamTag::BNStats] == 0);
  CHECK(tf_tags[ParamTag::ClassHead] == 2);
  CHECK(tf->num_bn_layers() == 0);
  CHECK(dual->num_bn_layers() > 0);

  // Parameter names are unique (the checkpoint key space).
  std::set<std::string> names;
  for (Parameter* p : dual->parameters()) {
    CHECK(names.insert(p->name).second);
  }
}

TEST_CASE("checkpoint round-trip preserves weights and logits") {
  Rng rng(3);
  auto model = make_model(tiny_config(ModelFamily::GNTransformer));
  model->set_bn_mode(BnMode::Running);
  Tensor x = random_input(3, model->config(), rng);
  Tensor before = model->forward(x);

  const auto path =
      (std::filesystem::temp_directory_path() / "ttaudio_ckpt_test.bin").string();
  save_checkpoint(path, *model);

  auto loaded = load_checkpoint(path);
  loaded->set_bn_mode(BnMode::Running);
  Tensor after = loaded->forward(x);
  CHECK(before.vec() == after.vec());

  // Loading into a model with a different config is rejected.
  ModelConfig other = tiny_config(ModelFamily::GNTransformer);
  other.num_classes = 5;
  auto wrong = make_model(other);
  CHECK_THROWS_AS(load_checkpoint_into(path, *wrong), CheckpointConfigMismatch);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointMissing);
}

TEST_CASE("snapshot diff sees exactly the mutated parameter") {
  auto model = make_model(tiny_config(ModelFamily::BNResNet));
  auto snap = snapshot_parameters(*model);
  CHECK(diff_parameters(*model, snap).empty());
  auto params = model->parameters();
  params[3]->value[0] += 1.0f;
  const auto changed = diff_parameters(*model, snap);
  REQUIRE(changed.size() == 1);
  CHECK(changed[0] == params[3]->name);
}

TEST_CASE("classifier pre-training separates a striped toy set") {
  Rng rng(4);
  ModelConfig cfg = tiny_config(ModelFamily::BNResNet);
  cfg.num_classes = 2;
  auto model = make_model(cfg);
  LabeledSpectrogramSet train = stripe_set(30, cfg.mel_bins, cfg.frames, rng);

  TrainConfig tc;
  tc.epochs = 20;
  tc.batch_size = 15;
  tc.lr = 0.02;
  tc.seed = 5;
  const TrainTrace trace = pretrain_classifier(*model, train, tc);
  REQUIRE(trace.epoch_accuracy.size() == 20);
  CHECK(trace.epoch_accuracy.back() >= 0.95);
  // Loss went down overall.
  CHECK(trace.epoch_loss.back() < trace.epoch_loss.front());
}

TEST_CASE("zero-epoch training is a no-op; fixed seed reproduces weights bitwise") {
  Rng rng(5);
  ModelConfig cfg = tiny_config(ModelFamily::BNResNet);
  cfg.num_classes = 2;
  LabeledSpectrogramSet train = stripe_set(10, cfg.mel_bins, cfg.frames, rng);

  auto model = make_model(cfg);
  auto snap = snapshot_parameters(*model);
  TrainConfig tc;
  tc.epochs = 0;
  pretrain_classifier(*model, train, tc);
  CHECK(diff_parameters(*model, snap).empty());

  tc.epochs = 3;
  tc.batch_size = 10;
  tc.seed = 42;
  auto a = make_model(cfg);
  auto b = make_model(cfg);
  pretrain_classifier(*a, train, tc);
  pretrain_classifier(*b, train, tc);
  const auto pa = a->parameters();
  const auto pb = b->parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->value.vec() == pb[i]->value.vec());
  }
}

TEST_CASE("joint shift training: losses add, pretext is learnable, freeze holds") {
  Rng rng(6);
  // Tone bursts at two fundamentals. The burst sits at a canonical position
  // near the clip center: a stationary tone would make the shift classes
  // invisible to a magnitude spectrogram, a localized burst makes them easy.
  LabeledWaveSet train;
  std::uniform_real_distribution<double> center_jitter(-0.02, 0.02);
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 12; ++i) {
      Waveform w;
      w.sample_rate = 4000;
      w.samples.resize(4000);
      const double hz = k == 0 ? 300.0 : 900.0;
      const double center = (0.5 + center_jitter(rng)) * 4000.0;
      std::normal_distribution<double> jitter(0.0, 0.02);
      for (std::size_t t = 0; t < w.samples.size(); ++t) {
        const double dt = (static_cast<double>(t) - center) / 300.0;
        const double env = std::exp(-0.5 * dt * dt);
        w.samples[t] =
            env * std::sin(2.0 * M_PI * hz * static_cast<double>(t) / 4000.0) + jitter(rng);
      }
      train.waves.push_back(std::move(w));
      train.labels.push_back(k);
    }
  }
  FeatureConfig fcfg;
  fcfg.n_fft = 256;
  fcfg.hop = 160;
  fcfg.mel_bins = 32;

  ModelConfig cfg = tiny_config(ModelFamily::DualHeadResNet);
  cfg.num_classes = 2;

  SUBCASE("additivity of the two head losses at step 0") {
    auto model = make_model(cfg);
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = static_cast<int>(train.waves.size());
    tc.lr = 0.01;
    tc.seed = 9;
    const TrainTrace trace = pretrain_ttt(*model, train, fcfg, 0.2, tc);
    REQUIRE(trace.step_class_loss.size() == 1);
    REQUIRE(trace.step_pretext_loss.size() == 1);

    // Recompute both losses independently at the checkpoint state. The whole
    // set is one batch, and batch statistics are order-invariant, so a fresh
    // model with the same init gives the same two numbers.
    auto fresh = make_model(cfg);
    fresh->set_bn_mode(BnMode::Train);
    std::vector<SpectrogramImage> class_in;
    std::vector<SpectrogramImage> pre_in;
    std::vector<int> pre_labels;
    for (const auto& w : train.waves) {
      class_in.push_back(mel_spectrogram(w, fcfg));
      for (Shift k : {Shift::None, Shift::Left, Shift::Right}) {
        pre_in.push_back(mel_spectrogram(time_shift(w, {k, 0.2}), fcfg));
        pre_labels.push_back(static_cast<int>(k));
      }
    }
    Tensor cl = fresh->forward(stack_batch(class_in), Head::Class);
    const double lc = cross_entropy_loss(logits_to_dmat(cl), train.labels).value;
    Tensor pl = fresh->forward(stack_batch(pre_in), Head::Pretext);
    const double lp = cross_entropy_loss(logits_to_dmat(pl), pre_labels).value;
    const double total = trace.step_class_loss[0] + trace.step_pretext_loss[0];
    CHECK(total == doctest::Approx(lc + lp).epsilon(1e-6));
  }

  SUBCASE("pretext head learns the shift classes") {
    auto model = make_model(cfg);
    TrainConfig tc;
    tc.epochs = 60;
    tc.batch_size = 12;
    tc.lr = 0.02;
    tc.seed = 10;
    pretrain_ttt(*model, train, fcfg, 0.2, tc);
    // Evaluate shift-class accuracy on the training waves.
    PretextSet ps = make_pretext_set(train.waves, fcfg, 0.2);
    model->set_bn_mode(BnMode::Running);
    Tensor logits = model->forward(stack_batch(ps.inputs), Head::Pretext);
    int correct = 0;
    for (int i = 0; i < logits.dim(0); ++i) {
      int best = 0;
      for (int j = 1; j < logits.dim(1); ++j) {
        if (logits.at(i, j) > logits.at(i, best)) best = j;
      }
      if (best == ps.labels[static_cast<std::size_t>(i)]) ++correct;
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(ps.labels.size()) >= 0.9);
  }

  SUBCASE("freezing the shared trunk and pretext head pins the pretext loss") {
    auto model = make_model(cfg);
    TrainConfig tc;
    tc.epochs = 4;
    tc.batch_size = static_cast<int>(train.waves.size());
    tc.lr = 0.05;
    tc.seed = 11;
    tc.update_tags = {ParamTag::ClassHead};
    const TrainTrace trace = pretrain_ttt(*model, train, fcfg, 0.2, tc);
    REQUIRE(trace.step_pretext_loss.size() == 4);
    for (double v : trace.step_pretext_loss) {
      CHECK(v == doctest::Approx(trace.step_pretext_loss[0]).epsilon(1e-9));
    }
    // The class loss, by contrast, should move.
    CHECK(std::abs(trace.step_class_loss.back() - trace.step_class_loss.front()) > 1e-6);
  }
}

TEST_CASE("a non-finite loss raises instead of training on silently") {
  // Inputs near float max overflow the first convolution, the batch variance
  // goes non-finite, and the loss turns NaN. Training must refuse to continue.
  // (An absurd learning rate alone cannot force this here: once a batch
  // variance overflows, normalization collapses activations onto beta and the
  // loss stays finite-huge forever.)
  Rng rng(7);
  ModelConfig cfg = tiny_config(ModelFamily::BNResNet);
  cfg.num_classes = 2;
  auto model = make_model(cfg);
  LabeledSpectrogramSet train;
  std::uniform_real_distribution<double> huge(-3e38, 3e38);
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 10; ++i) {
      SpectrogramImage s;
      s.values = DMat(cfg.mel_bins, cfg.frames);
      for (auto& v : s.values.v) v = huge(rng);
      train.inputs.push_back(std::move(s));
      train.labels.push_back(k);
    }
  }
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 10;
  CHECK_THROWS_AS(pretrain_classifier(*model, train, tc), DivergedLoss);
}
