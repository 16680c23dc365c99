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

#include "tta/nn/losses.hpp"

#include <cmath>

#include "tta/errors.hpp"

namespace tta {

DMat softmax_rows(const DMat& logits) {
  DMat p(logits.rows, logits.cols);
  for (int i = 0; i < logits.rows; ++i) {
    double mx = logits.at(i, 0);
    for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, logits.at(i, j));
    double z = 0.0;
    for (int j = 0; j < logits.cols; ++j) {
      p.at(i, j) = std::exp(logits.at(i, j) - mx);
      z += p.at(i, j);
    }
    for (int j = 0; j < logits.cols; ++j) p.at(i, j) /= z;
  }
  return p;
}

DMat log_softmax_rows(const DMat& logits) {
  DMat lp(logits.rows, logits.cols);
  for (int i = 0; i < logits.rows; ++i) {
    double mx = logits.at(i, 0);
    for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, logits.at(i, j));
    double z = 0.0;
    for (int j = 0; j < logits.cols; ++j) z += std::exp(logits.at(i, j) - mx);
    const double lse = mx + std::log(z);
    for (int j = 0; j < logits.cols; ++j) lp.at(i, j) = logits.at(i, j) - lse;
  }
  return lp;
}

DMat logits_to_dmat(const Tensor& logits) {
  DMat m(logits.dim(0), logits.dim(1));
  for (std::size_t i = 0; i < m.v.size(); ++i) {
    m.v[i] = static_cast<double>(logits.data()[i]);
  }
  return m;
}

Tensor dmat_to_tensor(const DMat& m) {
  Tensor t({m.rows, m.cols});
  for (std::size_t i = 0; i < m.v.size(); ++i) {
    t.data()[i] = static_cast<float>(m.v[i]);
  }
  return t;
}

LossResult cross_entropy_loss(const DMat& logits, const std::vector<int>& labels) {
  const int B = logits.rows, c = logits.cols;
  if (static_cast<int>(labels.size()) != B) {
    throw LabelOutOfRange("label count " + std::to_string(labels.size()) + " vs batch " +
                          std::to_string(B));
  }
  for (int y : labels) {
    if (y < 0 || y >= c) throw LabelOutOfRange(std::to_string(y));
  }
  const DMat lp = log_softmax_rows(logits);
  LossResult r;
  r.dlogits = DMat(B, c);
  for (int i = 0; i < B; ++i) {
    r.value -= lp.at(i, labels[static_cast<std::size_t>(i)]);
    for (int j = 0; j < c; ++j) {
      const double p = std::exp(lp.at(i, j));
      const double t = j == labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
      r.dlogits.at(i, j) = (p - t) / B;
    }
  }
  r.value /= B;
  return r;
}

LossResult entropy_sum_loss(const DMat& logits) {
  const int B = logits.rows, c = logits.cols;
  const DMat lp = log_softmax_rows(logits);
  LossResult r;
  r.dlogits = DMat(B, c);
  for (int i = 0; i < B; ++i) {
    double h = 0.0;
    for (int j = 0; j < c; ++j) h -= std::exp(lp.at(i, j)) * lp.at(i, j);
    r.value += h;
    // dH_b/dz_k = -p_k (log p_k + H_b)
    for (int j = 0; j < c; ++j) {
      const double p = std::exp(lp.at(i, j));
      r.dlogits.at(i, j) = -p * (lp.at(i, j) + h);
    }
  }
  return r;
}

double nuclear_norm_from_probs(const DMat& probs) {
  double ss = 0.0;
  for (double v : probs.v) ss += v * v;
  return -std::sqrt(ss);
}

LossResult nuclear_norm_loss(const DMat& logits, bool on_probs) {
  const int B = logits.rows, c = logits.cols;
  LossResult r;
  r.dlogits = DMat(B, c);
  if (!on_probs) {
    double ss = 0.0;
    for (double v : logits.v) ss += v * v;
    const double f = std::sqrt(ss);
    r.value = -f;
    if (f > 0.0) {
      for (std::size_t i = 0; i < logits.v.size(); ++i) r.dlogits.v[i] = -logits.v[i] / f;
    }
    return r;
  }
  const DMat p = softmax_rows(logits);
  r.value = nuclear_norm_from_probs(p);
  const double f = -r.value;
  // dL/dP = -P/f, then through the row softmax Jacobian.
  for (int i = 0; i < B; ++i) {
    double dot = 0.0;  // Σ_j dL/dP_ij · P_ij
    for (int j = 0; j < c; ++j) dot += -p.at(i, j) / f * p.at(i, j);
    for (int j = 0; j < c; ++j) {
      r.dlogits.at(i, j) = p.at(i, j) * (-p.at(i, j) / f - dot);
    }
  }
  return r;
}

LossResult consistency_loss(const DMat& logits_strong, const DMat& probs_weak) {
  const int B = logits_strong.rows, c = logits_strong.cols;
  if (probs_weak.rows != B || probs_weak.cols != c) {
    throw LengthMismatch("consistency teacher/student shape mismatch");
  }
  const DMat lp = log_softmax_rows(logits_strong);
  LossResult r;
  r.dlogits = DMat(B, c);
  for (int i = 0; i < B; ++i) {
    double row_mass = 0.0;
    for (int j = 0; j < c; ++j) {
      r.value -= probs_weak.at(i, j) * lp.at(i, j);
      row_mass += probs_weak.at(i, j);
    }
    // d/dz of -Σ t log softmax(z) = (Σt)·p - t; teachers are normalized rows.
    for (int j = 0; j < c; ++j) {
      r.dlogits.at(i, j) =
          (row_mass * std::exp(lp.at(i, j)) - probs_weak.at(i, j)) / B;
    }
  }
  r.value /= B;
  return r;
}

LossResult pseudo_label_loss_ce(const DMat& logits, const std::vector<int>& pseudo_labels) {
  return cross_entropy_loss(logits, pseudo_labels);
}

LossResult pseudo_label_loss_nll(const DMat& logits, const std::vector<int>& pseudo_labels,
                                 const std::vector<double>& weights) {
  const int B = logits.rows, c = logits.cols;
  if (static_cast<int>(weights.size()) != c) {
    throw WeightLengthMismatch(std::to_string(weights.size()) + " weights for " +
                               std::to_string(c) + " classes");
  }
  if (static_cast<int>(pseudo_labels.size()) != B) {
    throw LabelOutOfRange("label count " + std::to_string(pseudo_labels.size()) + " vs batch " +
                          std::to_string(B));
  }
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  const DMat lp = log_softmax_rows(logits);
  LossResult r;
  r.dlogits = DMat(B, c);
  for (int i = 0; i < B; ++i) {
    const int y = pseudo_labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) throw LabelOutOfRange(std::to_string(y));
    const double wy = weights[static_cast<std::size_t>(y)];
    r.value += -wy * lp.at(i, y) / wsum;
    const double coef = wy / (wsum * B);
    for (int j = 0; j < c; ++j) {
      const double p = std::exp(lp.at(i, j));
      r.dlogits.at(i, j) = coef * (p - (j == y ? 1.0 : 0.0));
    }
  }
  r.value /= B;
  return r;
}

LossResult mixup_cross_entropy_loss(const DMat& logits, const std::vector<int>& labels_a,
                                    const std::vector<int>& labels_b,
                                    const std::vector<double>& lambdas) {
  const int B = logits.rows, c = logits.cols;
  if (static_cast<int>(labels_a.size()) != B || static_cast<int>(labels_b.size()) != B ||
      static_cast<int>(lambdas.size()) != B) {
    throw LengthMismatch("mixup labels/lambdas vs batch " + std::to_string(B));
  }
  const DMat lp = log_softmax_rows(logits);
  LossResult r;
  r.dlogits = DMat(B, c);
  for (int i = 0; i < B; ++i) {
    const int ya = labels_a[static_cast<std::size_t>(i)];
    const int yb = labels_b[static_cast<std::size_t>(i)];
    if (ya < 0 || ya >= c || yb < 0 || yb >= c) {
      throw LabelOutOfRange(std::to_string(ya) + "/" + std::to_string(yb));
    }
    const double lam = lambdas[static_cast<std::size_t>(i)];
    r.value += -(lam * lp.at(i, ya) + (1.0 - lam) * lp.at(i, yb));
    for (int j = 0; j < c; ++j) {
      const double p = std::exp(lp.at(i, j));
      const double ta = j == ya ? 1.0 : 0.0;
      const double tb = j == yb ? 1.0 : 0.0;
      r.dlogits.at(i, j) = (lam * (p - ta) + (1.0 - lam) * (p - tb)) / B;
    }
  }
  r.value /= B;
  return r;
}

}  // namespace tta
