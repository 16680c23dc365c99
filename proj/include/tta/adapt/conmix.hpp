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

#ifndef TTA_ADAPT_CONMIX_HPP
#define TTA_ADAPT_CONMIX_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tta/features/features.hpp"
#include "tta/models/models.hpp"

namespace tta {

// Pseudo-label loss variants: Org is plain cross-entropy against the current
// pseudo labels, Upd is the class-weighted log-softmax NLL (normalized by the
// weight sum), None drops the term entirely (lambda2 is then ignored).
enum class PlVariant { Org, Upd, None };
std::string to_string(PlVariant v);

// Provenance of a pseudo-label set: raw argmax predictions (round 0), soft
// prediction-weighted centroids (round 1), hard-label centroids (round 2+).
enum class PlSource { Prediction, Centroid, Refined };

struct PseudoLabelSet {
  std::vector<int> labels;  // one class id per sample, each in [0, c)
  int round = 0;
  PlSource source = PlSource::Prediction;
};

// Centroid-refined pseudo labels. Round 0 takes argmax predictions. Each
// following round builds per-class centroids from penultimate features
// (prediction-weighted on the first round, hard-label means afterwards) and
// reassigns every sample to the centroid of highest cosine similarity. Ties
// break toward the lowest class id; a class that lost all its samples keeps
// its previous centroid. Leaves the model in Running mode.
PseudoLabelSet generate_pseudo_labels(AdaptableModel& model,
                                      const std::vector<SpectrogramImage>& inputs,
                                      int refinement_rounds);

struct StdaConfig {
  double lambda1 = 1.0;  // negative-nuclear-norm weight
  double lambda2 = 0.3;  // pseudo-label weight (ignored when pl_variant = None)
  double lambda3 = 1.0;  // consistency weight
  PlVariant pl_variant = PlVariant::Upd;
  bool use_nm = true;
  bool use_cons = true;
  int epochs = 5;
  int refinement_rounds = 2;
  int batch_size = 32;
  double lr = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  std::vector<double> class_weights;  // Upd only; empty means all ones
  AugmentConfig augment;
};

// Named ablation switches: "org", "upd", "no_pl", "no_cst", "no_nm".
StdaConfig apply_ablation(StdaConfig base, const std::string& variant);

struct StdaTrace {
  // Unweighted per-step loss components; disabled terms are recorded as 0.
  std::vector<double> step_nm;
  std::vector<double> step_pl;
  std::vector<double> step_cons;
  // lambda1*nm + lambda2*pl + lambda3*cons at every step.
  std::vector<double> step_total;
  // Post-epoch pseudo-label loss over the whole set against that epoch's
  // pseudo labels (empty when pl_variant = None).
  std::vector<double> epoch_pl_loss;
  // Post-epoch top-1 error percent (empty when the set carries no labels).
  std::vector<double> epoch_error;
};

// Single-target adaptation. Per epoch: refresh pseudo labels, then per batch
// minimize lambda1*L_nm + lambda2*L_pl + lambda3*L_cons on augmented views —
// the nuclear-norm and pseudo-label terms on the weak view, consistency
// pulling the strong view toward the weak view's detached probabilities. All
// trainable parameters update. Labels in `target` are never trained on; they
// only feed the epoch_error trace.
StdaTrace stda_adapt(AdaptableModel& model, const LabeledSpectrogramSet& target,
                     const StdaConfig& cfg);

// ---------------------------------------------------------------------------
// Multi-target distillation
// ---------------------------------------------------------------------------

// One adapted teacher per target domain; every teacher must share the
// student's architecture.
struct TeacherBank {
  std::map<int, std::shared_ptr<AdaptableModel>> teachers;
};

struct MtdaConfig {
  int epochs = 5;
  int batch_size = 32;
  int steps_per_epoch = 0;  // 0 derives total samples / batch_size
  double lr = 0.01;
  double momentum = 0.9;
  double beta_alpha = 0.3;  // per-pair mixing weight ~ Beta(alpha, alpha)
  std::uint64_t seed = 0;
  std::uint64_t student_init_seed = 100;
};

struct MtdaResult {
  std::unique_ptr<AdaptableModel> student;
  std::vector<double> step_loss;
  std::vector<double> epoch_loss;
};

// Elementwise lam*a + (1-lam)*b; shapes must match.
SpectrogramImage mix_spectrograms(const SpectrogramImage& a, const SpectrogramImage& b,
                                  double lam);

// Distill per-domain teachers into one student trained from scratch. Each
// step draws two distinct domains, mixes sample pairs, and minimizes
// lam*CE(student(x_mix), teacher_i label) + (1-lam)*CE(student(x_mix),
// teacher_j label) with lam ~ Beta(beta_alpha, beta_alpha) per pair.
MtdaResult mtda_train(TeacherBank& bank,
                      const std::map<int, std::vector<SpectrogramImage>>& targets,
                      const MtdaConfig& cfg);

}  // namespace tta

#endif  // TTA_ADAPT_CONMIX_HPP
