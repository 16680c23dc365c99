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

#include "tta/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "tta/errors.hpp"

namespace fs = std::filesystem;

namespace tta {
namespace {

struct CellKey {
  std::string method;
  std::string dataset;
  std::string noise;
  double severity = 0.0;

  bool operator<(const CellKey& o) const {
    return std::tie(method, dataset, noise, severity) <
           std::tie(o.method, o.dataset, o.noise, o.severity);
  }
};

struct CellAgg {
  int count = 0;
  double unadapted_sum = 0.0;
  double adapted_sum = 0.0;
  std::vector<std::vector<double>> error_curves;
  std::vector<std::vector<double>> loss_curves;

  double unadapted() const { return unadapted_sum / count; }
  double adapted() const { return adapted_sum / count; }
};

using AggMap = std::map<CellKey, CellAgg>;

AggMap aggregate(const std::vector<RunRecord>& records) {
  AggMap agg;
  for (const auto& rec : records) {
    CellAgg& a = agg[{rec.method, rec.dataset, rec.noise, rec.severity}];
    ++a.count;
    a.unadapted_sum += rec.unadapted_error;
    a.adapted_sum += rec.adapted_error;
    if (!rec.epoch_errors.empty()) a.error_curves.push_back(rec.epoch_errors);
    if (!rec.epoch_losses.empty()) a.loss_curves.push_back(rec.epoch_losses);
  }
  return agg;
}

// Seed-mean curve, truncated to the shortest record.
std::vector<double> mean_curve(const std::vector<std::vector<double>>& curves) {
  if (curves.empty()) return {};
  std::size_t len = curves.front().size();
  for (const auto& c : curves) len = std::min(len, c.size());
  std::vector<double> mean(len, 0.0);
  for (const auto& c : curves)
    for (std::size_t i = 0; i < len; ++i) mean[i] += c[i];
  for (double& v : mean) v /= static_cast<double>(curves.size());
  return mean;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_full(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string sev_tag(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ':' || c == '/' || c == ' ') c = '-';
  return s;
}

std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

// The columns of the headline table and the per-condition figures.
struct Condition {
  std::string dataset;
  std::string noise;
  double severity = 0.0;

  bool operator<(const Condition& o) const {
    return std::tie(dataset, noise, severity) < std::tie(o.dataset, o.noise, o.severity);
  }
  std::string label() const { return dataset + "/" + noise + "@" + sev_tag(severity); }
  std::string file_tag() const {
    return sanitize(dataset) + "_" + sanitize(noise) + "_" + sanitize(sev_tag(severity));
  }
};

struct GridShape {
  std::vector<std::string> methods;  // sorted
  std::vector<Condition> conditions;  // sorted
  std::vector<CellKey> missing;       // expected cells absent from the records
};

GridShape infer_grid(const AggMap& agg) {
  std::set<std::string> methods;
  std::set<Condition> conditions;
  for (const auto& [key, _] : agg) {
    methods.insert(key.method);
    conditions.insert({key.dataset, key.noise, key.severity});
  }
  GridShape shape;
  shape.methods.assign(methods.begin(), methods.end());
  shape.conditions.assign(conditions.begin(), conditions.end());
  for (const auto& m : shape.methods) {
    for (const auto& c : shape.conditions) {
      const CellKey key{m, c.dataset, c.noise, c.severity};
      if (!agg.count(key)) shape.missing.push_back(key);
    }
  }
  return shape;
}

void throw_if_incomplete(const GridShape& shape) {
  if (shape.missing.empty()) return;
  std::ostringstream os;
  os << shape.missing.size() << " grid cell(s) missing:";
  const std::size_t limit = std::min<std::size_t>(shape.missing.size(), 40);
  for (std::size_t i = 0; i < limit; ++i) {
    const auto& k = shape.missing[i];
    os << " [" << k.method << " " << k.dataset << "/" << k.noise << "@" << sev_tag(k.severity)
       << "]";
  }
  if (limit < shape.missing.size()) os << " ...";
  throw IncompleteGrid(os.str());
}

std::string open_file_path(const std::string& out_dir, const std::string& name,
                           std::ofstream& out) {
  const fs::path p = fs::path(out_dir) / name;
  out.open(p);
  if (!out) throw MissingDataset("cannot write report file: " + p.string());
  return p.string();
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

void write_table2(const AggMap& agg, const GridShape& shape, const std::string& out_dir,
                  ReportFiles& files) {
  {
    std::ofstream csv;
    files.paths.push_back(open_file_path(out_dir, "table2.csv", csv));
    csv << "method";
    for (const auto& c : shape.conditions) csv << "," << c.label();
    csv << '\n';
    for (const auto& m : shape.methods) {
      csv << m;
      for (const auto& c : shape.conditions) {
        const auto it = agg.find({m, c.dataset, c.noise, c.severity});
        csv << "," << (it == agg.end() ? std::string() : fmt2(it->second.adapted()));
      }
      csv << '\n';
    }
  }
  {
    std::ofstream txt;
    files.paths.push_back(open_file_path(out_dir, "table2.txt", txt));
    std::size_t mw = std::string("method").size();
    for (const auto& m : shape.methods) mw = std::max(mw, m.size());
    std::vector<std::size_t> cw;
    for (const auto& c : shape.conditions) cw.push_back(std::max<std::size_t>(c.label().size(), 6));

    txt << "Adapted top-1 error (%), mean over seeds\n\n" << pad("method", mw + 2);
    for (std::size_t i = 0; i < shape.conditions.size(); ++i)
      txt << pad(shape.conditions[i].label(), cw[i] + 2);
    txt << '\n';
    for (const auto& m : shape.methods) {
      txt << pad(m, mw + 2);
      for (std::size_t i = 0; i < shape.conditions.size(); ++i) {
        const auto& c = shape.conditions[i];
        const auto it = agg.find({m, c.dataset, c.noise, c.severity});
        txt << pad(it == agg.end() ? "--" : fmt2(it->second.adapted()), cw[i] + 2);
      }
      txt << '\n';
    }
  }
}

void write_table4(const AggMap& agg, const std::string& out_dir, ReportFiles& files) {
  {
    std::ofstream csv;
    files.paths.push_back(open_file_path(out_dir, "table4.csv", csv));
    csv << "method,dataset,noise,severity,seeds,unadapted,adapted,delta,direction\n";
    for (const auto& [key, a] : agg) {
      const double delta = a.adapted() - a.unadapted();
      const char* dir = a.adapted() < a.unadapted() ? "↓" : (a.adapted() > a.unadapted() ? "↑" : "=");
      csv << key.method << "," << key.dataset << "," << key.noise << "," << sev_tag(key.severity)
          << "," << a.count << "," << fmt_full(a.unadapted()) << "," << fmt_full(a.adapted())
          << "," << fmt_full(delta) << "," << dir << '\n';
    }
  }
  {
    std::ofstream txt;
    files.paths.push_back(open_file_path(out_dir, "table4.txt", txt));
    txt << "Top-1 error (%) before/after adaptation, mean over seeds\n\n";
    std::size_t mw = 6, cw = 9;
    for (const auto& [key, _] : agg) {
      mw = std::max(mw, key.method.size());
      cw = std::max(cw, (key.dataset + "/" + key.noise + "@" + sev_tag(key.severity)).size());
    }
    txt << pad("method", mw + 2) << pad("condition", cw + 2) << pad("unadapted", 11)
        << pad("adapted", 11) << pad("delta", 9) << '\n';
    for (const auto& [key, a] : agg) {
      const double delta = a.adapted() - a.unadapted();
      const char* dir = a.adapted() < a.unadapted() ? " ↓" : (a.adapted() > a.unadapted() ? " ↑" : " =");
      txt << pad(key.method, mw + 2)
          << pad(key.dataset + "/" + key.noise + "@" + sev_tag(key.severity), cw + 2)
          << pad(fmt2(a.unadapted()), 11) << pad(fmt2(a.adapted()), 11)
          << pad(fmt2(delta), 8) << dir << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Figures (self-contained SVG)
// ---------------------------------------------------------------------------

const char* kPalette[] = {"#4363d8", "#e6194b", "#3cb44b", "#f58220",
                          "#911eb4", "#0aa6a6", "#808000", "#000075"};
constexpr int kPaletteSize = 8;

void svg_text(std::ostream& os, double x, double y, const std::string& s, int size = 11,
              const char* anchor = "start", const char* fill = "#222") {
  os << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
     << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\" fill=\"" << fill << "\">"
     << s << "</text>\n";
}

void svg_line(std::ostream& os, double x1, double y1, double x2, double y2,
              const char* stroke = "#444") {
  os << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
     << "\" stroke=\"" << stroke << "\" stroke-width=\"1\"/>\n";
}

double nice_ceiling(double max_value) {
  if (max_value <= 0.0) return 1.0;
  const double step = std::pow(10.0, std::floor(std::log10(max_value)));
  return std::ceil(max_value / step) * step;
}

void write_bars(const AggMap& agg, const GridShape& shape, const std::string& out_dir,
                ReportFiles& files) {
  for (const auto& cond : shape.conditions) {
    // Methods present for this condition, in sorted order.
    std::vector<std::pair<std::string, const CellAgg*>> rows;
    for (const auto& m : shape.methods) {
      const auto it = agg.find({m, cond.dataset, cond.noise, cond.severity});
      if (it != agg.end()) rows.emplace_back(m, &it->second);
    }
    if (rows.empty()) continue;

    double max_err = 0.0;
    for (const auto& [_, a] : rows) max_err = std::max({max_err, a->unadapted(), a->adapted()});
    const double y_max = std::min(100.0, std::max(10.0, nice_ceiling(max_err)));

    const double left = 56, top = 40, plot_h = 180;
    const double group_w = 92;
    const double width = left + rows.size() * group_w + 30;
    const double height = top + plot_h + 56;
    const double base = top + plot_h;

    std::ofstream svg;
    files.paths.push_back(open_file_path(out_dir, "bars_" + cond.file_tag() + ".svg", svg));
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg_text(svg, left, 20, "Top-1 error (%) — " + cond.label(), 13);
    svg_text(svg, left + 150, height - 8, "unadapted", 10, "start", "#999999");
    svg << "<rect x=\"" << left + 130 << "\" y=\"" << height - 17 << "\" width=\"12\" height=\""
        << 10 << "\" fill=\"#b9bdc4\"/>\n";
    svg_text(svg, left + 260, height - 8, "adapted", 10, "start", "#4363d8");
    svg << "<rect x=\"" << left + 240 << "\" y=\"" << height - 17 << "\" width=\"12\" height=\""
        << 10 << "\" fill=\"#4363d8\"/>\n";

    svg_line(svg, left, top, left, base);
    svg_line(svg, left, base, width - 20, base);
    for (int i = 0; i <= 4; ++i) {
      const double v = y_max * i / 4.0;
      const double y = base - plot_h * i / 4.0;
      svg_line(svg, left - 4, y, left, y);
      svg_text(svg, left - 8, y + 4, fmt2(v), 9, "end");
    }

    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double x0 = left + i * group_w + 14;
      const double bw = 26;
      const auto& [name, a] = rows[i];
      const double hu = plot_h * std::min(a->unadapted(), y_max) / y_max;
      const double ha = plot_h * std::min(a->adapted(), y_max) / y_max;
      svg << "<rect x=\"" << x0 << "\" y=\"" << base - hu << "\" width=\"" << bw
          << "\" height=\"" << hu << "\" fill=\"#b9bdc4\"/>\n";
      svg << "<rect x=\"" << x0 + bw + 6 << "\" y=\"" << base - ha << "\" width=\"" << bw
          << "\" height=\"" << ha << "\" fill=\"#4363d8\"/>\n";
      svg_text(svg, x0 + bw / 2, base - hu - 4, fmt2(a->unadapted()), 9, "middle");
      svg_text(svg, x0 + bw + 6 + bw / 2, base - ha - 4, fmt2(a->adapted()), 9, "middle");
      svg_text(svg, x0 + bw + 3, base + 14, name, 10, "middle");
    }
    svg << "</svg>\n";
  }
}

void write_curve_svg(const std::string& path, const std::string& title,
                     const std::string& y_label,
                     const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  std::ofstream svg(path);
  if (!svg) throw MissingDataset("cannot write report file: " + path);

  double y_min = 0.0, y_max = 1e-9;
  std::size_t x_max = 1;
  for (const auto& [_, curve] : series) {
    x_max = std::max(x_max, curve.size());
    for (double v : curve) {
      y_max = std::max(y_max, v);
      y_min = std::min(y_min, v);
    }
  }
  y_max = nice_ceiling(y_max);

  const double left = 56, top = 34, plot_w = 330, plot_h = 190;
  const double width = left + plot_w + 150;
  const double height = top + plot_h + 40;
  const double base = top + plot_h;
  const auto x_of = [&](std::size_t i) {
    return x_max <= 1 ? left + plot_w / 2
                      : left + plot_w * static_cast<double>(i) / static_cast<double>(x_max - 1);
  };
  const auto y_of = [&](double v) {
    const double span = y_max - y_min;
    return base - plot_h * (v - y_min) / (span > 0 ? span : 1.0);
  };

  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg_text(svg, left, 18, title, 13);
  svg_line(svg, left, top, left, base);
  svg_line(svg, left, base, left + plot_w, base);
  for (int i = 0; i <= 4; ++i) {
    const double v = y_min + (y_max - y_min) * i / 4.0;
    svg_line(svg, left - 4, y_of(v), left, y_of(v));
    svg_text(svg, left - 8, y_of(v) + 4, fmt2(v), 9, "end");
  }
  svg_text(svg, left + plot_w / 2, height - 6, "epoch", 10, "middle");
  svg_text(svg, 14, top - 10, y_label, 10);

  int color = 0;
  double legend_y = top + 8;
  for (const auto& [name, curve] : series) {
    const char* stroke = kPalette[color % kPaletteSize];
    ++color;
    if (!curve.empty()) {
      svg << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < curve.size(); ++i)
        svg << x_of(i) << "," << y_of(curve[i]) << " ";
      svg << "\"/>\n";
      for (std::size_t i = 0; i < curve.size(); ++i)
        svg << "<circle cx=\"" << x_of(i) << "\" cy=\"" << y_of(curve[i])
            << "\" r=\"2\" fill=\"" << stroke << "\"/>\n";
    }
    svg << "<rect x=\"" << left + plot_w + 16 << "\" y=\"" << legend_y - 8
        << "\" width=\"12\" height=\"4\" fill=\"" << stroke << "\"/>\n";
    svg_text(svg, left + plot_w + 34, legend_y - 2, name, 10);
    legend_y += 16;
  }
  svg << "</svg>\n";
}

void write_curves(const AggMap& agg, const GridShape& shape, const std::string& out_dir,
                  ReportFiles& files) {
  for (const auto& cond : shape.conditions) {
    std::vector<std::pair<std::string, std::vector<double>>> err_series, loss_series;
    for (const auto& m : shape.methods) {
      const auto it = agg.find({m, cond.dataset, cond.noise, cond.severity});
      if (it == agg.end()) continue;
      const auto err = mean_curve(it->second.error_curves);
      const auto loss = mean_curve(it->second.loss_curves);
      if (!err.empty()) err_series.emplace_back(m, err);
      if (!loss.empty()) loss_series.emplace_back(m, loss);
    }
    if (!err_series.empty()) {
      const fs::path p = fs::path(out_dir) / ("curves_error_" + cond.file_tag() + ".svg");
      write_curve_svg(p.string(), "Per-epoch error — " + cond.label(), "error (%)", err_series);
      files.paths.push_back(p.string());
    }
    if (!loss_series.empty()) {
      const fs::path p = fs::path(out_dir) / ("curves_loss_" + cond.file_tag() + ".svg");
      write_curve_svg(p.string(), "Per-epoch loss — " + cond.label(), "loss", loss_series);
      files.paths.push_back(p.string());
    }
  }
}

}  // namespace

std::string to_string(ReportLayout layout) {
  switch (layout) {
    case ReportLayout::Table2: return "table2";
    case ReportLayout::Table4: return "table4";
    case ReportLayout::FigBars: return "fig_bars";
    case ReportLayout::AppendixCurves: return "appendix_curves";
  }
  return "?";
}

ReportLayout report_layout_from_string(const std::string& s) {
  if (s == "table2") return ReportLayout::Table2;
  if (s == "table4") return ReportLayout::Table4;
  if (s == "fig_bars") return ReportLayout::FigBars;
  if (s == "appendix_curves") return ReportLayout::AppendixCurves;
  throw UnknownVariant("unknown report layout: " + s);
}

ReportFiles report(const std::vector<RunRecord>& records, ReportLayout layout,
                   const std::string& out_dir) {
  if (records.empty()) throw LengthMismatch("no run records to report");
  fs::create_directories(out_dir);

  const AggMap agg = aggregate(records);
  const GridShape shape = infer_grid(agg);

  ReportFiles files;
  switch (layout) {
    case ReportLayout::Table2: write_table2(agg, shape, out_dir, files); break;
    case ReportLayout::Table4: write_table4(agg, out_dir, files); break;
    case ReportLayout::FigBars: write_bars(agg, shape, out_dir, files); break;
    case ReportLayout::AppendixCurves: write_curves(agg, shape, out_dir, files); break;
  }

  // Partial output stays on disk; the hole list is reported afterwards.
  throw_if_incomplete(shape);
  return files;
}

}  // namespace tta
