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

#include "tta/adapt/conmix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tta/errors.hpp"
#include "tta/nn/losses.hpp"
#include "tta/nn/optim.hpp"

namespace tta {

std::string to_string(PlVariant v) {
  switch (v) {
    case PlVariant::Org:
      return "org";
    case PlVariant::Upd:
      return "upd";
    case PlVariant::None:
      return "none";
  }
  return "?";
}

StdaConfig apply_ablation(StdaConfig base, const std::string& variant) {
  base.use_nm = true;
  base.use_cons = true;
  if (variant == "org") {
    base.pl_variant = PlVariant::Org;
  } else if (variant == "upd") {
    base.pl_variant = PlVariant::Upd;
  } else if (variant == "no_pl") {
    base.pl_variant = PlVariant::None;
  } else if (variant == "no_cst") {
    base.pl_variant = PlVariant::Upd;
    base.use_cons = false;
  } else if (variant == "no_nm") {
    base.pl_variant = PlVariant::Upd;
    base.use_nm = false;
  } else {
    throw UnknownVariant(variant);
  }
  return base;
}

namespace {

constexpr int kEvalChunk = 64;

// Running-mode pass over the whole set, collecting softmax probabilities and
// penultimate features row by row.
void eval_pass(AdaptableModel& model, const std::vector<SpectrogramImage>& inputs, DMat* probs,
               DMat* feats) {
  model.set_bn_mode(BnMode::Running);
  const int n = static_cast<int>(inputs.size());
  *probs = DMat(n, model.config().num_classes);
  for (std::size_t i = 0; i < inputs.size(); i += kEvalChunk) {
    const std::size_t end = std::min(inputs.size(), i + kEvalChunk);
    std::vector<const SpectrogramImage*> items;
    items.reserve(end - i);
    for (std::size_t j = i; j < end; ++j) items.push_back(&inputs[j]);
    const Tensor logits = model.forward(stack_batch(items), Head::Class);
    const DMat p = softmax_rows(logits_to_dmat(logits));
    const Tensor& f = model.features();
    if (feats->rows == 0) *feats = DMat(n, f.dim(1));
    for (std::size_t j = i; j < end; ++j) {
      const int r = static_cast<int>(j - i);
      for (int k = 0; k < p.cols; ++k) probs->at(static_cast<int>(j), k) = p.at(r, k);
      for (int k = 0; k < feats->cols; ++k) {
        feats->at(static_cast<int>(j), k) = static_cast<double>(f.at(r, k));
      }
    }
  }
}

int argmax_row_dmat(const DMat& m, int row) {
  int best = 0;
  for (int j = 1; j < m.cols; ++j) {
    if (m.at(row, j) > m.at(row, best)) best = j;
  }
  return best;
}

// argmax_k cosine(features row, centroid k); ties and all-zero vectors fall
// toward the lowest class id (zero norm scores 0).
int cosine_argmax(const DMat& feats, int row, const DMat& cents) {
  int best = 0;
  double best_sim = -2.0;
  for (int k = 0; k < cents.rows; ++k) {
    double dot = 0.0, nf = 0.0, nc = 0.0;
    for (int j = 0; j < feats.cols; ++j) {
      const double a = feats.at(row, j), b = cents.at(k, j);
      dot += a * b;
      nf += a * a;
      nc += b * b;
    }
    const double sim = nf > 0.0 && nc > 0.0 ? dot / (std::sqrt(nf) * std::sqrt(nc)) : 0.0;
    if (sim > best_sim) {
      best_sim = sim;
      best = k;
    }
  }
  return best;
}

}  // namespace

PseudoLabelSet generate_pseudo_labels(AdaptableModel& model,
                                      const std::vector<SpectrogramImage>& inputs,
                                      int refinement_rounds) {
  if (inputs.empty()) throw LengthMismatch("pseudo-label generation on an empty set");
  const int n = static_cast<int>(inputs.size());
  const int c = model.config().num_classes;

  DMat probs, feats;
  eval_pass(model, inputs, &probs, &feats);

  PseudoLabelSet out;
  out.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.labels[static_cast<std::size_t>(i)] = argmax_row_dmat(probs, i);

  const int d = feats.cols;
  DMat cents(c, d);  // a class that never gains weight keeps this zero row
  for (int r = 1; r <= refinement_rounds; ++r) {
    DMat acc(c, d);
    std::vector<double> wsum(static_cast<std::size_t>(c), 0.0);
    if (r == 1) {
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < c; ++k) {
          const double w = probs.at(i, k);
          wsum[static_cast<std::size_t>(k)] += w;
          for (int j = 0; j < d; ++j) acc.at(k, j) += w * feats.at(i, j);
        }
      }
    } else {
      for (int i = 0; i < n; ++i) {
        const int k = out.labels[static_cast<std::size_t>(i)];
        wsum[static_cast<std::size_t>(k)] += 1.0;
        for (int j = 0; j < d; ++j) acc.at(k, j) += feats.at(i, j);
      }
    }
    for (int k = 0; k < c; ++k) {
      if (wsum[static_cast<std::size_t>(k)] > 0.0) {
        for (int j = 0; j < d; ++j) cents.at(k, j) = acc.at(k, j) / wsum[static_cast<std::size_t>(k)];
      }
    }
    for (int i = 0; i < n; ++i) out.labels[static_cast<std::size_t>(i)] = cosine_argmax(feats, i, cents);
    out.round = r;
    out.source = r == 1 ? PlSource::Centroid : PlSource::Refined;
  }
  return out;
}

StdaTrace stda_adapt(AdaptableModel& model, const LabeledSpectrogramSet& target,
                     const StdaConfig& cfg) {
  const bool use_pl = cfg.pl_variant != PlVariant::None;
  const bool nm_on = cfg.use_nm && cfg.lambda1 > 0.0;
  const bool pl_on = use_pl && cfg.lambda2 > 0.0;
  const bool cons_on = cfg.use_cons && cfg.lambda3 > 0.0;
  if (!nm_on && !pl_on && !cons_on) {
    throw AllLossesDisabled("every loss term is switched off or weighted zero");
  }
  if (cfg.lambda1 < 0.0 || cfg.lambda2 < 0.0 || cfg.lambda3 < 0.0) {
    throw LambdaOutOfRange("loss weights must be non-negative");
  }
  if (cfg.batch_size < 1) throw BatchTooSmall("batch_size " + std::to_string(cfg.batch_size));
  if (target.inputs.empty()) throw LengthMismatch("empty target set");
  if (!target.labels.empty() && target.labels.size() != target.inputs.size()) {
    throw LengthMismatch("label count does not match sample count");
  }

  const std::size_t n = target.inputs.size();
  const int c = model.config().num_classes;
  std::vector<double> weights = cfg.class_weights;
  if (cfg.pl_variant == PlVariant::Upd) {
    if (weights.empty()) weights.assign(static_cast<std::size_t>(c), 1.0);
    if (static_cast<int>(weights.size()) != c) {
      throw WeightLengthMismatch(std::to_string(weights.size()) + " weights for " +
                                 std::to_string(c) + " classes");
    }
  }

  StdaTrace trace;
  Sgd opt({cfg.lr, cfg.momentum}, Sgd::all_trainable());
  const auto params = model.parameters();
  const bool eval_labels = !target.labels.empty();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    PseudoLabelSet pls;
    if (use_pl) pls = generate_pseudo_labels(model, target.inputs, cfg.refinement_rounds);

    model.set_bn_mode(BnMode::Train);
    Rng shuffle_rng(derive_seed(cfg.seed, "stda_epoch", static_cast<std::uint64_t>(epoch)));
    Rng aug_rng(derive_seed(cfg.seed, "stda_aug", static_cast<std::uint64_t>(epoch)));
    const auto batches = make_batches(n, cfg.batch_size, shuffle_rng);

    for (const auto& batch : batches) {
      std::vector<SpectrogramImage> weak, strong;
      std::vector<int> batch_pl;
      weak.reserve(batch.size());
      for (std::size_t j : batch) {
        weak.push_back(weak_augment(target.inputs[j], cfg.augment, aug_rng));
        if (cfg.use_cons) strong.push_back(strong_augment(target.inputs[j], cfg.augment, aug_rng));
        if (use_pl) batch_pl.push_back(pls.labels[j]);
      }

      Sgd::zero_grad(params);
      const Tensor logits_w = model.forward(stack_batch(weak), Head::Class);
      const DMat zw = logits_to_dmat(logits_w);

      double nm_v = 0.0, pl_v = 0.0, cons_v = 0.0;
      DMat dw(zw.rows, zw.cols);
      if (cfg.use_nm) {
        const LossResult nm = nuclear_norm_loss(zw);
        nm_v = nm.value;
        for (std::size_t i = 0; i < dw.v.size(); ++i) dw.v[i] += cfg.lambda1 * nm.dlogits.v[i];
      }
      if (use_pl) {
        const LossResult pl = cfg.pl_variant == PlVariant::Org
                                  ? pseudo_label_loss_ce(zw, batch_pl)
                                  : pseudo_label_loss_nll(zw, batch_pl, weights);
        pl_v = pl.value;
        for (std::size_t i = 0; i < dw.v.size(); ++i) dw.v[i] += cfg.lambda2 * pl.dlogits.v[i];
      }
      model.backward(dmat_to_tensor(dw));

      if (cfg.use_cons) {
        const DMat probs_w = softmax_rows(zw);  // detached teacher signal
        const Tensor logits_s = model.forward(stack_batch(strong), Head::Class);
        const LossResult cons = consistency_loss(logits_to_dmat(logits_s), probs_w);
        cons_v = cons.value;
        DMat ds(cons.dlogits.rows, cons.dlogits.cols);
        for (std::size_t i = 0; i < ds.v.size(); ++i) ds.v[i] = cfg.lambda3 * cons.dlogits.v[i];
        model.backward(dmat_to_tensor(ds));
      }

      const double total = cfg.lambda1 * nm_v + (use_pl ? cfg.lambda2 * pl_v : 0.0) +
                           cfg.lambda3 * cons_v;
      if (!std::isfinite(total)) throw DivergedLoss("epoch " + std::to_string(epoch));
      opt.step(params);

      trace.step_nm.push_back(nm_v);
      trace.step_pl.push_back(pl_v);
      trace.step_cons.push_back(cons_v);
      trace.step_total.push_back(total);
    }

    // Post-epoch metrics on the clean (unaugmented) set, running statistics.
    model.set_bn_mode(BnMode::Running);
    if (use_pl || eval_labels) {
      double pl_sum = 0.0;
      std::size_t correct = 0;
      for (std::size_t i = 0; i < n; i += kEvalChunk) {
        const std::size_t end = std::min(n, i + kEvalChunk);
        std::vector<const SpectrogramImage*> items;
        items.reserve(end - i);
        for (std::size_t j = i; j < end; ++j) items.push_back(&target.inputs[j]);
        const Tensor logits = model.forward(stack_batch(items), Head::Class);
        if (use_pl) {
          const std::vector<int> chunk_pl(pls.labels.begin() + static_cast<std::ptrdiff_t>(i),
                                          pls.labels.begin() + static_cast<std::ptrdiff_t>(end));
          const DMat z = logits_to_dmat(logits);
          const LossResult pl = cfg.pl_variant == PlVariant::Org
                                    ? pseudo_label_loss_ce(z, chunk_pl)
                                    : pseudo_label_loss_nll(z, chunk_pl, weights);
          pl_sum += pl.value * static_cast<double>(end - i);
        }
        if (eval_labels) {
          const auto pred = argmax_rows(logits);
          for (std::size_t j = i; j < end; ++j) {
            if (pred[j - i] == target.labels[j]) ++correct;
          }
        }
      }
      if (use_pl) trace.epoch_pl_loss.push_back(pl_sum / static_cast<double>(n));
      if (eval_labels) {
        trace.epoch_error.push_back(
            100.0 * (1.0 - static_cast<double>(correct) / static_cast<double>(n)));
      }
    }
  }

  model.set_bn_mode(BnMode::Running);
  return trace;
}

// ---------------------------------------------------------------------------
// Multi-target distillation
// ---------------------------------------------------------------------------

SpectrogramImage mix_spectrograms(const SpectrogramImage& a, const SpectrogramImage& b,
                                  double lam) {
  if (a.values.rows != b.values.rows || a.values.cols != b.values.cols) {
    throw LengthMismatch("spectrogram shapes differ");
  }
  SpectrogramImage out;
  out.values = DMat(a.values.rows, a.values.cols);
  for (std::size_t i = 0; i < out.values.v.size(); ++i) {
    out.values.v[i] = lam * a.values.v[i] + (1.0 - lam) * b.values.v[i];
  }
  return out;
}

MtdaResult mtda_train(TeacherBank& bank,
                      const std::map<int, std::vector<SpectrogramImage>>& targets,
                      const MtdaConfig& cfg) {
  if (targets.size() < 2) {
    throw FewerThanTwoDomains("got " + std::to_string(targets.size()));
  }
  if (cfg.batch_size < 1) throw BatchTooSmall("batch_size " + std::to_string(cfg.batch_size));

  // Architecture agreement across teachers, ignoring their init seeds.
  const auto arch_key = [](const ModelConfig& mc) {
    ModelConfig k = mc;
    k.init_seed = 0;
    return k.canonical();
  };
  std::string ref_key;
  std::size_t total = 0;
  for (const auto& [id, set] : targets) {
    const auto it = bank.teachers.find(id);
    if (it == bank.teachers.end() || it->second == nullptr) {
      throw TeacherMissing("domain " + std::to_string(id));
    }
    if (set.empty()) throw LengthMismatch("domain " + std::to_string(id) + " has no samples");
    const std::string key = arch_key(it->second->config());
    if (ref_key.empty()) {
      ref_key = key;
    } else if (key != ref_key) {
      throw CheckpointConfigMismatch("teacher for domain " + std::to_string(id));
    }
    total += set.size();
  }

  // One labeling pass per domain; labels stay fixed for the whole run.
  std::map<int, std::vector<int>> teacher_labels;
  for (const auto& [id, set] : targets) {
    teacher_labels[id] = predict_labels(*bank.teachers.at(id), set, kEvalChunk);
  }

  ModelConfig scfg = bank.teachers.begin()->second->config();
  scfg.init_seed = cfg.student_init_seed;
  MtdaResult res;
  res.student = make_model(scfg);
  res.student->set_bn_mode(BnMode::Train);
  Sgd opt({cfg.lr, cfg.momentum}, Sgd::all_trainable());
  const auto params = res.student->parameters();

  std::vector<int> ids;
  ids.reserve(targets.size());
  for (const auto& kv : targets) ids.push_back(kv.first);

  const int steps = cfg.steps_per_epoch > 0
                        ? cfg.steps_per_epoch
                        : std::max<int>(1, static_cast<int>(total) / cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, "mtda_epoch", static_cast<std::uint64_t>(epoch)));
    std::uniform_int_distribution<int> pick_first(0, static_cast<int>(ids.size()) - 1);
    std::uniform_int_distribution<int> pick_other(0, static_cast<int>(ids.size()) - 2);
    std::gamma_distribution<double> gamma(cfg.beta_alpha, 1.0);
    double loss_sum = 0.0;

    for (int s = 0; s < steps; ++s) {
      const int a = pick_first(rng);
      int b = pick_other(rng);
      if (b >= a) ++b;
      const int di = ids[static_cast<std::size_t>(a)];
      const int dj = ids[static_cast<std::size_t>(b)];
      const auto& set_i = targets.at(di);
      const auto& set_j = targets.at(dj);
      std::uniform_int_distribution<std::size_t> pick_i(0, set_i.size() - 1);
      std::uniform_int_distribution<std::size_t> pick_j(0, set_j.size() - 1);

      std::vector<SpectrogramImage> mixed;
      std::vector<int> la, lb;
      std::vector<double> lams;
      mixed.reserve(static_cast<std::size_t>(cfg.batch_size));
      for (int r = 0; r < cfg.batch_size; ++r) {
        const std::size_t ii = pick_i(rng);
        const std::size_t jj = pick_j(rng);
        const double x = gamma(rng);
        const double y = gamma(rng);
        const double lam = x + y > 0.0 ? x / (x + y) : 0.5;
        mixed.push_back(mix_spectrograms(set_i[ii], set_j[jj], lam));
        la.push_back(teacher_labels.at(di)[ii]);
        lb.push_back(teacher_labels.at(dj)[jj]);
        lams.push_back(lam);
      }

      Sgd::zero_grad(params);
      const Tensor logits = res.student->forward(stack_batch(mixed), Head::Class);
      const LossResult mr = mixup_cross_entropy_loss(logits_to_dmat(logits), la, lb, lams);
      if (!std::isfinite(mr.value)) throw DivergedLoss("epoch " + std::to_string(epoch));
      res.student->backward(dmat_to_tensor(mr.dlogits));
      opt.step(params);
      res.step_loss.push_back(mr.value);
      loss_sum += mr.value;
    }
    res.epoch_loss.push_back(loss_sum / static_cast<double>(steps));
  }

  res.student->set_bn_mode(BnMode::Running);
  return res;
}

}  // namespace tta
