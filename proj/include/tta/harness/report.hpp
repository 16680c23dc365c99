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

#ifndef TTA_HARNESS_REPORT_HPP
#define TTA_HARNESS_REPORT_HPP

#include <string>
#include <vector>

#include "tta/harness/runner.hpp"

namespace tta {

// Output layouts:
//   Table2        — headline grid: mean adapted error per method x
//                   (dataset, noise, severity) column.
//   Table4        — before/after per cell: unadapted, adapted, delta, and a
//                   direction mark (down-arrow when adaptation helped).
//   FigBars       — per (dataset, noise, severity): grouped bar chart of
//                   unadapted vs adapted error per method.
//   AppendixCurves— per (dataset, noise, severity): per-epoch error and loss
//                   curves, one curve per method / ablation variant.
enum class ReportLayout { Table2, Table4, FigBars, AppendixCurves };

std::string to_string(ReportLayout layout);
ReportLayout report_layout_from_string(const std::string& s);

struct ReportFiles {
  std::vector<std::string> paths;  // files written, in emission order
};

// Renders `layout` into `out_dir` (CSV + aligned text for tables, SVG for
// figures), aggregating repeated seeds of the same cell by mean. Cells are
// keyed by (method, dataset, noise, severity); the expected grid is the cross
// product of the observed methods, datasets, and per-noise severity sets.
// When that grid has holes, every available cell is still written and an
// IncompleteGrid error listing the missing cells is thrown afterwards.
ReportFiles report(const std::vector<RunRecord>& records, ReportLayout layout,
                   const std::string& out_dir);

}  // namespace tta

#endif  // TTA_HARNESS_REPORT_HPP
