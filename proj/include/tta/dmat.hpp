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

#ifndef TTA_DMAT_HPP
#define TTA_DMAT_HPP

#include <cassert>
#include <vector>

namespace tta {

// Row-major double matrix for spectrograms and loss math, where float would
// eat into the tolerance budget.
struct DMat {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  DMat() = default;
  DMat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
  std::size_t size() const { return v.size(); }
};

}  // namespace tta

#endif  // TTA_DMAT_HPP
