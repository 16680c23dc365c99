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

#ifndef TTA_NN_LOSSES_HPP
#define TTA_NN_LOSSES_HPP

#include <vector>

#include "tta/dmat.hpp"
#include "tta/nn/tensor.hpp"

namespace tta {

// Loss math runs in double so identity and finite-difference tolerances hold;
// model logits are converted at the boundary.

DMat softmax_rows(const DMat& logits);
DMat log_softmax_rows(const DMat& logits);

DMat logits_to_dmat(const Tensor& logits);    // (B, c) float -> double
Tensor dmat_to_tensor(const DMat& m);         // double -> (B, c) float

struct LossResult {
  double value = 0.0;
  DMat dlogits;  // d value / d logits, same shape as the input
};

// Mean cross-entropy against integer labels: -(1/B) Σ log softmax(z)_y.
LossResult cross_entropy_loss(const DMat& logits, const std::vector<int>& labels);

// Shannon entropy of the predictions, summed over the batch:
// Σ_b H(softmax(z_b)). Uniform predictions give B·ln c; per-sample value is
// in [0, ln c].
LossResult entropy_sum_loss(const DMat& logits);

// Batch nuclear-norm surrogate: -‖softmax(Z)‖_F over the whole B×c prediction
// matrix (Frobenius norm with squared entries). `on_probs=false` applies the
// norm to the raw logits instead.
LossResult nuclear_norm_loss(const DMat& logits, bool on_probs = true);

// -‖P‖_F for an explicit probability (or arbitrary) matrix; exact -√B on
// one-hot rows since the squares are exactly 1.
double nuclear_norm_from_probs(const DMat& probs);

// Mean cross-entropy of the strong-view student against fixed weak-view
// teacher probabilities: -(1/B) Σ_b Σ_k t_bk log softmax(z_b)_k.
LossResult consistency_loss(const DMat& logits_strong, const DMat& probs_weak);

// Pseudo-label cross-entropy (identical math to cross_entropy_loss; kept as
// its own entry point because adapters treat it as a separate component).
LossResult pseudo_label_loss_ce(const DMat& logits, const std::vector<int>& pseudo_labels);

// Weighted negative log-likelihood on log-softmax outputs with per-class
// weights w: per sample l_b = -w_y · log_softmax(z_b)_y, normalized by Σ_k w_k,
// mean over the batch. With all-ones weights this equals cross-entropy / c.
LossResult pseudo_label_loss_nll(const DMat& logits, const std::vector<int>& pseudo_labels,
                                 const std::vector<double>& weights);

// Mixup cross-entropy: per sample λ_b·CE(z_b, a_b) + (1−λ_b)·CE(z_b, b_b),
// mean over the batch. λ_b = 1 reduces to plain CE against labels_a.
LossResult mixup_cross_entropy_loss(const DMat& logits, const std::vector<int>& labels_a,
                                    const std::vector<int>& labels_b,
                                    const std::vector<double>& lambdas);

}  // namespace tta

#endif  // TTA_NN_LOSSES_HPP
