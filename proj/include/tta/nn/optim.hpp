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

#ifndef TTA_NN_OPTIM_HPP
#define TTA_NN_OPTIM_HPP

#include <set>
#include <unordered_map>
#include <vector>

#include "tta/nn/layers.hpp"

namespace tta {

struct SgdConfig {
  double lr = 1e-3;
  double momentum = 0.9;
};

// SGD with momentum over a tag-filtered parameter subset. BN statistics are
// never gradient-updated regardless of the filter (forward passes own them).
class Sgd {
 public:
  Sgd(SgdConfig cfg, std::set<ParamTag> update_tags)
      : cfg_(cfg), tags_(std::move(update_tags)) {
    tags_.erase(ParamTag::BNStats);
  }

  static std::set<ParamTag> all_trainable() {
    return {ParamTag::SharedBackbone, ParamTag::ClassHead, ParamTag::PretextHead,
            ParamTag::BNAffine, ParamTag::Other};
  }

  bool updates(ParamTag t) const { return tags_.count(t) > 0; }

  static void zero_grad(const std::vector<Parameter*>& params) {
    for (Parameter* p : params) p->grad.zero();
  }

  // Drop all momentum state (episodic restarts).
  void reset() { velocity_.clear(); }

  void step(const std::vector<Parameter*>& params) {
    const auto lr = static_cast<float>(cfg_.lr);
    const auto mu = static_cast<float>(cfg_.momentum);
    for (Parameter* p : params) {
      if (!updates(p->tag)) continue;
      auto& v = velocity_[p];
      if (v.size() != p->value.vec().size()) v.assign(p->value.vec().size(), 0.0f);
      for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = mu * v[i] + p->grad.vec()[i];
        p->value.vec()[i] -= lr * v[i];
      }
    }
  }

 private:
  SgdConfig cfg_;
  std::set<ParamTag> tags_;
  std::unordered_map<const Parameter*, FVec> velocity_;
};

}  // namespace tta

#endif  // TTA_NN_OPTIM_HPP
