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

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "tta/adapt/conmix.hpp"
#include "tta/errors.hpp"
#include "tta/nn/losses.hpp"

using namespace tta;

namespace {

// Deterministic stand-in whose penultimate "features" are the raw input row
// (spectrograms of shape 1 x d) and whose logits come from a fixed affine
// map. Lets the centroid-refinement geometry be driven by hand.
class StubModel final : public AdaptableModel {
 public:
  StubModel(int dims, int classes, DMat w, std::vector<double> bias = {})
      : w_(std::move(w)), bias_(std::move(bias)) {
    if (bias_.empty()) bias_.assign(static_cast<std::size_t>(classes), 0.0);
    cfg_.num_classes = classes;
    cfg_.mel_bins = 1;
    cfg_.frames = dims;
  }

  Tensor forward(const Tensor& x, Head) override {
    const int B = x.dim(0), d = x.dim(3);
    features_ = Tensor({B, d});
    for (int b = 0; b < B; ++b) {
      for (int j = 0; j < d; ++j) features_.at(b, j) = x.at(b, 0, 0, j);
    }
    Tensor logits({B, cfg_.num_classes});
    for (int b = 0; b < B; ++b) {
      for (int k = 0; k < cfg_.num_classes; ++k) {
        double s = bias_[static_cast<std::size_t>(k)];
        for (int j = 0; j < d; ++j) {
          s += w_.at(k, j) * static_cast<double>(features_.at(b, j));
        }
        logits.at(b, k) = static_cast<float>(s);
      }
    }
    return logits;
  }
  Tensor backward(const Tensor&) override { return {}; }
  const Tensor& features() const override { return features_; }
  std::vector<Parameter*> parameters() override { return {}; }
  void set_bn_mode(BnMode) override {}
  int num_bn_layers() const override { return 0; }
  const ModelConfig& config() const override { return cfg_; }

 private:
  ModelConfig cfg_;
  DMat w_;
  std::vector<double> bias_;
  Tensor features_;
};

SpectrogramImage feature_row(const std::vector<double>& v) {
  SpectrogramImage s;
  s.values = DMat(1, static_cast<int>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) s.values.v[j] = v[j];
  return s;
}

// Two Gaussian feature clusters along +x and -x, 2-D, ground truth by sign.
struct ClusterData {
  std::vector<SpectrogramImage> inputs;
  std::vector<int> truth;
};

ClusterData two_clusters(int per_class, double mu, double sigma, Rng& rng) {
  ClusterData d;
  std::normal_distribution<double> noise(0.0, sigma);
  for (int c = 0; c < 2; ++c) {
    const double cx = c == 0 ? mu : -mu;
    for (int i = 0; i < per_class; ++i) {
      d.inputs.push_back(feature_row({cx + noise(rng), noise(rng)}));
      d.truth.push_back(c);
    }
  }
  return d;
}

// Weak linear separator: boundary rotated away from the true one so a known
// fraction of samples start mislabeled. Row 0 = g*w, row 1 = -g*w.
DMat rotated_separator(double cos_alpha, double gain) {
  const double sin_alpha = std::sqrt(1.0 - cos_alpha * cos_alpha);
  DMat w(2, 2);
  w.at(0, 0) = gain * cos_alpha;
  w.at(0, 1) = gain * sin_alpha;
  w.at(1, 0) = -gain * cos_alpha;
  w.at(1, 1) = -gain * sin_alpha;
  return w;
}

// Striped spectrogram classes for the tiny end-to-end runs: class k lights up
// every third mel row starting at k, plus noise.
SpectrogramImage stripe_image(int mel, int frames, int cls, double noise_sigma, Rng& rng) {
  SpectrogramImage s;
  s.values = DMat(mel, frames);
  std::normal_distribution<double> noise(0.0, noise_sigma);
  for (int i = 0; i < mel; ++i) {
    for (int j = 0; j < frames; ++j) {
      s.values.at(i, j) = (i % 3 == cls ? 2.0 : 0.0) + noise(rng);
    }
  }
  return s;
}

LabeledSpectrogramSet stripe_set(int per_class, int mel, int frames, double noise_sigma,
                                 Rng& rng) {
  LabeledSpectrogramSet set;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per_class; ++i) {
      set.inputs.push_back(stripe_image(mel, frames, c, noise_sigma, rng));
      set.labels.push_back(c);
    }
  }
  return set;
}

ModelConfig small_config(std::uint64_t seed) {
  ModelConfig cfg;
  cfg.family = ModelFamily::BNResNet;
  cfg.num_classes = 3;
  cfg.mel_bins = 8;
  cfg.frames = 10;
  cfg.width = 4;
  cfg.depth = 2;
  cfg.init_seed = seed;
  return cfg;
}

double error_percent(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] != truth[i]) ++wrong;
  }
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(pred.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Mixup loss
// ---------------------------------------------------------------------------

TEST_CASE("mixup cross-entropy at lambda=1 is plain cross-entropy on the first labels") {
  Rng rng(3);
  std::normal_distribution<double> dist(0.0, 2.0);
  DMat z(6, 4);
  for (auto& v : z.v) v = dist(rng);
  std::vector<int> la = {0, 1, 2, 3, 1, 0};
  std::vector<int> lb = {3, 2, 1, 0, 0, 2};

  const auto mix1 = mixup_cross_entropy_loss(z, la, lb, std::vector<double>(6, 1.0));
  const auto ce_a = cross_entropy_loss(z, la);
  CHECK(mix1.value == doctest::Approx(ce_a.value).epsilon(1e-12));
  for (std::size_t i = 0; i < z.v.size(); ++i) {
    CHECK(std::abs(mix1.dlogits.v[i] - ce_a.dlogits.v[i]) <= 1e-12);
  }

  const auto mix0 = mixup_cross_entropy_loss(z, la, lb, std::vector<double>(6, 0.0));
  const auto ce_b = cross_entropy_loss(z, lb);
  CHECK(mix0.value == doctest::Approx(ce_b.value).epsilon(1e-12));
}

TEST_CASE("mixup cross-entropy decomposes per sample") {
  Rng rng(5);
  std::normal_distribution<double> dist(0.0, 1.5);
  DMat z(5, 3);
  for (auto& v : z.v) v = dist(rng);
  std::vector<int> la = {0, 1, 2, 0, 1};
  std::vector<int> lb = {2, 0, 1, 1, 2};
  std::vector<double> lam = {0.9, 0.3, 0.5, 0.0, 1.0};

  const auto mix = mixup_cross_entropy_loss(z, la, lb, lam);
  const DMat lp = log_softmax_rows(z);
  double expect = 0.0;
  for (int i = 0; i < 5; ++i) {
    expect += -(lam[static_cast<std::size_t>(i)] * lp.at(i, la[static_cast<std::size_t>(i)]) +
                (1.0 - lam[static_cast<std::size_t>(i)]) * lp.at(i, lb[static_cast<std::size_t>(i)]));
  }
  expect /= 5.0;
  CHECK(mix.value == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("mixup cross-entropy rejects bad shapes and labels") {
  DMat z(2, 3);
  CHECK_THROWS_AS(mixup_cross_entropy_loss(z, {0}, {1, 2}, {0.5, 0.5}), LengthMismatch);
  CHECK_THROWS_AS(mixup_cross_entropy_loss(z, {0, 1}, {1, 2}, {0.5}), LengthMismatch);
  CHECK_THROWS_AS(mixup_cross_entropy_loss(z, {0, 3}, {1, 2}, {0.5, 0.5}), LabelOutOfRange);
  CHECK_THROWS_AS(mixup_cross_entropy_loss(z, {0, 1}, {1, -1}, {0.5, 0.5}), LabelOutOfRange);
}

TEST_CASE("spectrogram mixing is elementwise and shape-checked") {
  Rng rng(7);
  std::normal_distribution<double> dist(0.0, 1.0);
  SpectrogramImage a, b;
  a.values = DMat(4, 5);
  b.values = DMat(4, 5);
  for (auto& v : a.values.v) v = dist(rng);
  for (auto& v : b.values.v) v = dist(rng);

  const auto m = mix_spectrograms(a, b, 0.25);
  CHECK(m.values.rows == 4);
  CHECK(m.values.cols == 5);
  for (std::size_t i = 0; i < m.values.v.size(); ++i) {
    CHECK(m.values.v[i] ==
          doctest::Approx(0.25 * a.values.v[i] + 0.75 * b.values.v[i]).epsilon(1e-12));
  }

  const auto ident = mix_spectrograms(a, b, 1.0);
  for (std::size_t i = 0; i < ident.values.v.size(); ++i) {
    CHECK(ident.values.v[i] == a.values.v[i]);
  }

  SpectrogramImage c;
  c.values = DMat(4, 6);
  CHECK_THROWS_AS(mix_spectrograms(a, c, 0.5), LengthMismatch);
}

// ---------------------------------------------------------------------------
// Pseudo-label generation
// ---------------------------------------------------------------------------

TEST_CASE("round zero returns argmax predictions") {
  DMat w(2, 2);
  w.at(0, 0) = 1.0;
  w.at(1, 0) = -1.0;
  StubModel model(2, 2, w);
  std::vector<SpectrogramImage> inputs = {feature_row({2.0, 0.0}), feature_row({-3.0, 0.5})};

  const auto pls = generate_pseudo_labels(model, inputs, 0);
  CHECK(pls.round == 0);
  CHECK(pls.source == PlSource::Prediction);
  REQUIRE(pls.labels.size() == 2);
  CHECK(pls.labels[0] == 0);
  CHECK(pls.labels[1] == 1);

  CHECK_THROWS_AS(generate_pseudo_labels(model, {}, 2), LengthMismatch);
}

TEST_CASE("centroid refinement repairs a weakly labeled two-cluster problem") {
  // Boundary rotated so that roughly 10% of points start on the wrong side
  // (mu/sigma = 4, cos(alpha) = 1.2816/4 puts the wrong-side mass at ~10%).
  for (std::uint64_t seed : {11u, 22u, 33u, 44u, 55u}) {
    Rng rng(seed);
    const auto data = two_clusters(200, 4.0, 1.0, rng);
    StubModel model(2, 2, rotated_separator(1.2816 / 4.0, 3.0));

    const auto raw = generate_pseudo_labels(model, data.inputs, 0);
    const double raw_err = error_percent(raw.labels, data.truth);
    CHECK(raw_err >= 4.0);   // the premise: the classifier is genuinely weak
    CHECK(raw_err <= 16.0);

    const auto refined = generate_pseudo_labels(model, data.inputs, 2);
    CHECK(refined.round == 2);
    CHECK(refined.source == PlSource::Refined);
    CHECK(error_percent(refined.labels, data.truth) <= 1.0);
  }
}

TEST_CASE("refinement reaches a fixed point once assignments stop changing") {
  Rng rng(99);
  const auto data = two_clusters(150, 4.0, 1.0, rng);
  StubModel model(2, 2, rotated_separator(1.2816 / 4.0, 3.0));

  const auto r2 = generate_pseudo_labels(model, data.inputs, 2);
  const auto r3 = generate_pseudo_labels(model, data.inputs, 3);
  const auto r5 = generate_pseudo_labels(model, data.inputs, 5);
  CHECK(r2.labels == r3.labels);
  CHECK(r3.labels == r5.labels);
  CHECK(r5.source == PlSource::Refined);
}

TEST_CASE("exact cosine ties fall to the lowest class id") {
  // Anchors at (1,0) and (0,1) plus one sample on the diagonal whose logits
  // are exactly zero: the two soft centroids come out mirror-symmetric, the
  // cosine similarities are bitwise equal, and the tie must resolve to 0.
  DMat w(2, 2);
  w.at(0, 0) = 3.0;
  w.at(0, 1) = -3.0;
  w.at(1, 0) = -3.0;
  w.at(1, 1) = 3.0;
  StubModel model(2, 2, w);
  std::vector<SpectrogramImage> inputs = {feature_row({1.0, 0.0}), feature_row({0.0, 1.0}),
                                          feature_row({1.0, 1.0})};

  const auto pls = generate_pseudo_labels(model, inputs, 1);
  CHECK(pls.source == PlSource::Centroid);
  CHECK(pls.labels[0] == 0);
  CHECK(pls.labels[1] == 1);
  CHECK(pls.labels[2] == 0);  // exact tie

  const auto again = generate_pseudo_labels(model, inputs, 1);
  CHECK(pls.labels == again.labels);
}

TEST_CASE("a class that never receives weight keeps its empty centroid") {
  // Class 2's logit is biased 800 below the others, so its softmax weight
  // underflows to exactly zero: its centroid has to stay at the origin (a
  // zero vector scores cosine 0, below every genuine match) and the refined
  // labels must coincide with a plain two-class run, element for element.
  Rng rng(17);
  const auto data = two_clusters(100, 4.0, 1.0, rng);

  const DMat w2 = rotated_separator(1.2816 / 4.0, 3.0);
  DMat w3(3, 2);
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 2; ++j) w3.at(k, j) = w2.at(k, j);
  }
  StubModel model3(2, 3, w3, {0.0, 0.0, -800.0});
  StubModel model2(2, 2, w2);

  for (int rounds : {0, 1, 2, 3}) {
    const auto three = generate_pseudo_labels(model3, data.inputs, rounds);
    const auto two = generate_pseudo_labels(model2, data.inputs, rounds);
    for (int l : three.labels) CHECK(l != 2);
    CHECK(three.labels == two.labels);
  }
}

// ---------------------------------------------------------------------------
// STDA configuration and traces
// ---------------------------------------------------------------------------

TEST_CASE("ablation switches map onto the config flags") {
  StdaConfig base;

  auto org = apply_ablation(base, "org");
  CHECK(org.pl_variant == PlVariant::Org);
  CHECK(org.use_nm);
  CHECK(org.use_cons);

  auto upd = apply_ablation(base, "upd");
  CHECK(upd.pl_variant == PlVariant::Upd);

  auto no_pl = apply_ablation(base, "no_pl");
  CHECK(no_pl.pl_variant == PlVariant::None);
  CHECK(no_pl.use_nm);
  CHECK(no_pl.use_cons);

  auto no_cst = apply_ablation(base, "no_cst");
  CHECK(no_cst.pl_variant == PlVariant::Upd);
  CHECK_FALSE(no_cst.use_cons);

  auto no_nm = apply_ablation(base, "no_nm");
  CHECK(no_nm.pl_variant == PlVariant::Upd);
  CHECK_FALSE(no_nm.use_nm);

  CHECK_THROWS_AS(apply_ablation(base, "bogus"), UnknownVariant);
  CHECK(to_string(PlVariant::Org) == "org");
  CHECK(to_string(PlVariant::Upd) == "upd");
  CHECK(to_string(PlVariant::None) == "none");
}

TEST_CASE("adaptation rejects configurations with no active loss") {
  Rng rng(1);
  auto model = make_model(small_config(7));
  LabeledSpectrogramSet target;
  for (int i = 0; i < 8; ++i) {
    target.inputs.push_back(stripe_image(8, 10, i % 3, 0.3, rng));
  }

  StdaConfig off;
  off.use_nm = false;
  off.use_cons = false;
  off.pl_variant = PlVariant::None;
  CHECK_THROWS_AS(stda_adapt(*model, target, off), AllLossesDisabled);

  StdaConfig zeros;
  zeros.lambda1 = 0.0;
  zeros.lambda2 = 0.0;
  zeros.lambda3 = 0.0;
  CHECK_THROWS_AS(stda_adapt(*model, target, zeros), AllLossesDisabled);

  StdaConfig neg;
  neg.lambda1 = -0.5;
  CHECK_THROWS_AS(stda_adapt(*model, target, neg), LambdaOutOfRange);

  StdaConfig badw;
  badw.class_weights = {1.0, 1.0};  // 2 weights for 3 classes
  CHECK_THROWS_AS(stda_adapt(*model, target, badw), WeightLengthMismatch);

  StdaConfig ok;
  CHECK_THROWS_AS(stda_adapt(*model, LabeledSpectrogramSet{}, ok), LengthMismatch);

  LabeledSpectrogramSet bad_labels = target;
  bad_labels.labels = {0, 1};
  CHECK_THROWS_AS(stda_adapt(*model, bad_labels, ok), LengthMismatch);
}

TEST_CASE("loss-component traces sum to the recorded total") {
  Rng rng(2);
  auto model = make_model(small_config(9));
  LabeledSpectrogramSet target = stripe_set(8, 8, 10, 0.5, rng);

  StdaConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.lr = 1e-3;
  cfg.lambda1 = 1.0;
  cfg.lambda2 = 0.3;
  cfg.lambda3 = 1.0;
  cfg.seed = 5;

  const auto trace = stda_adapt(*model, target, cfg);
  const std::size_t steps = trace.step_total.size();
  REQUIRE(steps > 0);
  REQUIRE(trace.step_nm.size() == steps);
  REQUIRE(trace.step_pl.size() == steps);
  REQUIRE(trace.step_cons.size() == steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double sum = cfg.lambda1 * trace.step_nm[i] + cfg.lambda2 * trace.step_pl[i] +
                       cfg.lambda3 * trace.step_cons[i];
    CHECK(std::abs(trace.step_total[i] - sum) <= 1e-6);
    CHECK(trace.step_nm[i] <= 0.0);   // negative Frobenius norm
    CHECK(trace.step_pl[i] >= 0.0);
    CHECK(trace.step_cons[i] >= 0.0);
  }
  REQUIRE(trace.epoch_pl_loss.size() == 2);
  REQUIRE(trace.epoch_error.size() == 2);
  for (double e : trace.epoch_error) {
    CHECK(e >= 0.0);
    CHECK(e <= 100.0);
  }
}

TEST_CASE("pure nuclear-norm config reduces to offline norm training") {
  LabeledSpectrogramSet target;
  {
    Rng rng(4);
    target = stripe_set(8, 8, 10, 0.5, rng);
    target.labels.clear();  // no eval pass; training only
  }

  StdaConfig cfg;
  cfg.pl_variant = PlVariant::None;
  cfg.use_cons = false;
  cfg.lambda1 = 1.0;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.lr = 5e-3;
  cfg.seed = 21;
  cfg.augment.weak_shift_frac = 0.0;  // weak view degenerates to the input

  auto adapted = make_model(small_config(13));
  const auto trace = stda_adapt(*adapted, target, cfg);

  // Offline replica: same seeds, same batching, same augmentation stream,
  // plain -||softmax||_F descent.
  auto replica = make_model(small_config(13));
  Sgd opt({cfg.lr, cfg.momentum}, Sgd::all_trainable());
  const auto params = replica->parameters();
  std::vector<double> offline;
  replica->set_bn_mode(BnMode::Train);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, "stda_epoch", static_cast<std::uint64_t>(epoch)));
    Rng aug_rng(derive_seed(cfg.seed, "stda_aug", static_cast<std::uint64_t>(epoch)));
    const auto batches = make_batches(target.inputs.size(), cfg.batch_size, shuffle_rng);
    for (const auto& batch : batches) {
      std::vector<SpectrogramImage> weak;
      for (std::size_t j : batch) {
        weak.push_back(weak_augment(target.inputs[j], cfg.augment, aug_rng));
      }
      Sgd::zero_grad(params);
      const Tensor logits = replica->forward(stack_batch(weak), Head::Class);
      const LossResult nm = nuclear_norm_loss(logits_to_dmat(logits));
      replica->backward(dmat_to_tensor(nm.dlogits));
      opt.step(params);
      offline.push_back(nm.value);
    }
  }

  REQUIRE(trace.step_total.size() == offline.size());
  for (std::size_t i = 0; i < offline.size(); ++i) {
    CHECK(std::abs(trace.step_total[i] - offline[i]) <= 1e-9);
    CHECK(trace.step_pl[i] == 0.0);
    CHECK(trace.step_cons[i] == 0.0);
  }
  CHECK(trace.epoch_pl_loss.empty());
  CHECK(trace.epoch_error.empty());

  // The adapted model and the replica walked the same path.
  const auto snap = snapshot_parameters(*replica);
  CHECK(diff_parameters(*adapted, snap).empty());
}

TEST_CASE("adaptation reduces error on a shifted stripe domain") {
  Rng rng(6);
  LabeledSpectrogramSet train = stripe_set(30, 8, 10, 0.3, rng);

  auto model = make_model(small_config(23));
  TrainConfig tc;
  tc.epochs = 15;
  tc.batch_size = 16;
  tc.lr = 0.02;
  tc.seed = 3;
  pretrain_classifier(*model, train, tc);

  // Target domain: same stripes under a constant additive ramp plus heavier
  // noise. The ramp biases every BN input, so batch statistics misalign.
  LabeledSpectrogramSet target = stripe_set(20, 8, 10, 0.8, rng);
  for (auto& s : target.inputs) {
    for (int i = 0; i < s.values.rows; ++i) {
      for (int j = 0; j < s.values.cols; ++j) {
        s.values.at(i, j) += 1.5 * static_cast<double>(j) / s.values.cols;
      }
    }
  }

  const double unadapted = error_percent(predict_labels(*model, target.inputs), target.labels);

  StdaConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.lr = 5e-3;
  cfg.seed = 8;
  const auto trace = stda_adapt(*model, target, cfg);
  REQUIRE(trace.epoch_error.size() == 3);
  const double adapted = trace.epoch_error.back();

  CHECK(adapted <= unadapted);
  CHECK(adapted < 50.0);  // sanity: better than chance on 3 classes
}

// ---------------------------------------------------------------------------
// MTDA
// ---------------------------------------------------------------------------

TEST_CASE("multi-target training demands at least two domains and their teachers") {
  Rng rng(12);
  TeacherBank bank;
  bank.teachers[0] = std::shared_ptr<AdaptableModel>(make_model(small_config(31)));

  std::map<int, std::vector<SpectrogramImage>> one;
  one[0] = stripe_set(4, 8, 10, 0.3, rng).inputs;
  MtdaConfig cfg;
  CHECK_THROWS_AS(mtda_train(bank, one, cfg), FewerThanTwoDomains);

  std::map<int, std::vector<SpectrogramImage>> two = one;
  two[1] = stripe_set(4, 8, 10, 0.3, rng).inputs;
  CHECK_THROWS_AS(mtda_train(bank, two, cfg), TeacherMissing);

  // Second teacher with a different architecture: rejected.
  ModelConfig other = small_config(32);
  other.width = 8;
  bank.teachers[1] = std::shared_ptr<AdaptableModel>(make_model(other));
  CHECK_THROWS_AS(mtda_train(bank, two, cfg), CheckpointConfigMismatch);
}

TEST_CASE("identical teachers and domains distill the student to teacher accuracy") {
  Rng rng(14);
  LabeledSpectrogramSet train = stripe_set(30, 8, 10, 0.3, rng);

  auto teacher = std::shared_ptr<AdaptableModel>(make_model(small_config(41)));
  TrainConfig tc;
  tc.epochs = 15;
  tc.batch_size = 16;
  tc.lr = 0.02;
  tc.seed = 9;
  pretrain_classifier(*teacher, train, tc);

  LabeledSpectrogramSet eval_a = stripe_set(20, 8, 10, 0.3, rng);
  LabeledSpectrogramSet eval_b = stripe_set(20, 8, 10, 0.3, rng);

  TeacherBank bank;
  bank.teachers[0] = teacher;
  bank.teachers[1] = teacher;
  std::map<int, std::vector<SpectrogramImage>> targets;
  targets[0] = eval_a.inputs;
  targets[1] = eval_b.inputs;

  MtdaConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 16;
  cfg.lr = 0.02;
  cfg.seed = 33;
  cfg.student_init_seed = 77;
  auto res = mtda_train(bank, targets, cfg);
  REQUIRE(res.student != nullptr);
  REQUIRE(res.epoch_loss.size() == 10);

  const double t_err =
      error_percent(predict_labels(*teacher, eval_a.inputs), eval_a.labels);
  const double s_err =
      error_percent(predict_labels(*res.student, eval_a.inputs), eval_a.labels);
  // "Within 2 points of the teacher" treats a better student as a pass.
  CHECK(s_err <= t_err + 2.0);
}

TEST_CASE("multi-target training is reproducible for a fixed seed") {
  Rng rng(20);
  auto teacher = std::shared_ptr<AdaptableModel>(make_model(small_config(51)));
  std::map<int, std::vector<SpectrogramImage>> targets;
  targets[0] = stripe_set(6, 8, 10, 0.4, rng).inputs;
  targets[1] = stripe_set(6, 8, 10, 0.4, rng).inputs;
  TeacherBank bank;
  bank.teachers[0] = teacher;
  bank.teachers[1] = teacher;

  MtdaConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 6;
  cfg.seed = 44;

  auto r1 = mtda_train(bank, targets, cfg);
  auto r2 = mtda_train(bank, targets, cfg);
  REQUIRE(r1.step_loss.size() == r2.step_loss.size());
  for (std::size_t i = 0; i < r1.step_loss.size(); ++i) {
    CHECK(r1.step_loss[i] == r2.step_loss[i]);
  }
  const auto snap = snapshot_parameters(*r1.student);
  CHECK(diff_parameters(*r2.student, snap).empty());
}
