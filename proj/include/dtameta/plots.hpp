// Copyright (c) 2026 dtameta contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "dtameta/data.hpp"
#include "dtameta/summaries.hpp"

namespace dtameta {

namespace svg_detail {

inline constexpr double width = 960.0;
inline constexpr double height = 720.0;

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string header() {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" height=\"720\" "
         "viewBox=\"0 0 960 720\">\n"
         "<rect width=\"960\" height=\"720\" fill=\"white\"/>\n";
}

inline std::string line(double x1, double y1, double x2, double y2, const std::string& stroke,
                        double w) {
  return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
         num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(w) + "\"/>\n";
}

inline std::string circle(double cx, double cy, double r, const std::string& fill) {
  return "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" +
         fill + "\"/>\n";
}

inline std::string rect(double x, double y, double w, double h, const std::string& fill) {
  return "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
         num(h) + "\" fill=\"" + fill + "\"/>\n";
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string text(double x, double y, const std::string& t, double size = 11.0,
                        const std::string& anchor = "start") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
         "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\">" + escape(t) +
         "</text>\n";
}

}  // namespace svg_detail

/// Forest plot: one panel per margin. Each study row shows the observed
/// proportion with its 95% exact (Clopper-Pearson) interval and the posterior
/// study-specific mean with its credible interval; pooled rows follow.
inline std::string forest_svg(const FitSummary& summary, const Dataset& data) {
  using namespace svg_detail;
  const std::size_t n = data.size();
  const bool brma = summary.model == "brma";
  const std::size_t n_cells = brma ? 1 : summary.cells.size();
  const std::size_t rows = n + n_cells;

  const auto find = [&](const std::string& name) -> const ParamSummary& {
    for (const auto& p : summary.params) {
      if (p.name == name) return p;
    }
    throw layout_error("forest plot: parameter " + name + " missing from summary");
  };

  std::string svg = header();
  svg += text(480.0, 18.0, summary.model + " model: study and pooled estimates", 14.0, "middle");

  const double top = 50.0, bottom = 680.0;
  const double row_h = (bottom - top) / static_cast<double>(rows + 1);
  const double panel_w = 330.0;
  const double panel_x[2] = {210.0, 610.0};
  const char* panel_title[2] = {"Sensitivity", "Specificity"};

  for (int panel = 0; panel < 2; ++panel) {
    const double x0 = panel_x[panel];
    const auto sx = [&](double v) { return x0 + v * panel_w; };
    svg += text(x0 + panel_w / 2.0, 36.0, panel_title[panel], 12.0, "middle");
    svg += line(x0, bottom, x0 + panel_w, bottom, "black", 1.0);
    for (double tick : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      svg += line(sx(tick), bottom, sx(tick), bottom + 4.0, "black", 1.0);
      svg += text(sx(tick), bottom + 16.0, num(tick), 9.0, "middle");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double y = top + row_h * static_cast<double>(i + 1);
      const auto& r = data.records[i];
      const int k = panel == 0 ? r.tp : r.tn;
      const int m = panel == 0 ? r.n_diseased : r.n_healthy;
      const auto ci = exact_ci(k, m, 0.95);
      const double obs = static_cast<double>(k) / m;
      // observed: thick grey interval + magenta point
      svg += line(sx(ci.first), y - 3.0, sx(ci.second), y - 3.0, "#9a9a9a", 3.0);
      svg += circle(sx(obs), y - 3.0, 3.0, "magenta");
      // posterior study-specific mean and credible interval
      const auto& post =
          find((panel == 0 ? "p1[" : "p2[") + std::to_string(i + 1) + "]");
      svg += line(sx(post.lower), y + 3.0, sx(post.upper), y + 3.0, "black", 1.5);
      svg += rect(sx(post.mean) - 3.0, y, 6.0, 6.0, "#1f4fd0");
      if (panel == 0) {
        std::string label = r.id;
        if (!data.covariate_names.empty())
          label += " (" + r.covariates.at(data.covariate_names[0]) + ")";
        svg += text(16.0, y + 3.0, label, 10.0);
      }
    }
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
      const double y = top + row_h * static_cast<double>(n + cell + 1);
      const std::string name =
          brma ? (panel == 0 ? "MU[1]" : "MU[2]")
               : (panel == 0 ? "MUse[" : "MUsp[") + std::to_string(cell + 1) + "]";
      const auto& pooled = find(name);
      svg += line(sx(pooled.lower), y, sx(pooled.upper), y, "black", 2.0);
      svg += rect(sx(pooled.mean) - 4.0, y - 4.0, 8.0, 8.0, "#0a7d32");
      if (panel == 0) {
        std::string label = "Pooled";
        if (!brma && summary.cells.size() > 1) label += " " + summary.cells[cell];
        svg += text(16.0, y + 3.0, label, 10.0);
      }
    }
  }
  svg += "</svg>\n";
  return svg;
}

/// One named series per parameter, one polyline per chain.
struct TraceSeries {
  std::string name;
  std::vector<std::vector<double>> chains;
};

inline std::string trace_svg(const std::vector<TraceSeries>& series) {
  using namespace svg_detail;
  if (series.empty()) throw layout_error("trace plot: no series");
  static const char* palette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                                  "#8c564b", "#e377c2"};
  const std::size_t cols = series.size() > 1 ? 2 : 1;
  const std::size_t rows = (series.size() + cols - 1) / cols;
  const double cell_w = (width - 40.0) / static_cast<double>(cols);
  const double cell_h = (height - 40.0) / static_cast<double>(rows);

  std::string svg = header();
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double ox = 20.0 + cell_w * static_cast<double>(s % cols);
    const double oy = 20.0 + cell_h * static_cast<double>(s / cols);
    const double plot_w = cell_w - 30.0, plot_h = cell_h - 40.0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& chain : series[s].chains) {
      for (double v : chain) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (!(hi > lo)) {
      hi = lo + 1.0;
      lo -= 1.0;
    }
    svg += text(ox + plot_w / 2.0, oy + 12.0, series[s].name, 11.0, "middle");
    svg += rect(ox, oy + 20.0, plot_w, plot_h, "#f5f5f5");
    for (std::size_t c = 0; c < series[s].chains.size(); ++c) {
      const auto& chain = series[s].chains[c];
      if (chain.empty()) continue;
      std::string pts;
      const double denom = chain.size() > 1 ? static_cast<double>(chain.size() - 1) : 1.0;
      for (std::size_t i = 0; i < chain.size(); ++i) {
        const double px = ox + plot_w * static_cast<double>(i) / denom;
        const double py = oy + 20.0 + plot_h * (1.0 - (chain[i] - lo) / (hi - lo));
        pts += num(px) + "," + num(py) + " ";
      }
      pts.pop_back();
      svg += "<polyline fill=\"none\" stroke=\"";
      svg += palette[c % 6];
      svg += "\" stroke-width=\"0.8\" points=\"" + pts + "\"/>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace dtameta
