#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "cqt/experiment/table.hpp"

namespace cqt::experiment {

enum class PlotKind { convergence, scan, residuals };

inline PlotKind parse_plot_kind(const std::string& s) {
  if (s == "convergence") return PlotKind::convergence;
  if (s == "scan") return PlotKind::scan;
  if (s == "residuals") return PlotKind::residuals;
  throw ConfigError("unknown plot kind `" + s + "` (expected convergence, scan or residuals)");
}

inline const char* to_string(PlotKind k) {
  switch (k) {
    case PlotKind::convergence: return "convergence";
    case PlotKind::scan: return "scan";
    default: return "residuals";
  }
}

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  bool y_is_log = false;  ///< y already holds natural logarithms and is drawn on a log axis
};

namespace detail {

inline double number_at(const Table& t, std::size_t row, std::size_t col, const std::string& file) {
  const Cell& c = t.rows[row][col];
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  throw Error(file + ": row " + std::to_string(row + 1) + ", column " + t.columns[col] + " is not a number");
}

inline std::size_t require_column(const Table& t, const std::string& name, const std::string& file) {
  const auto c = column_index(t, name);
  if (!c) throw Error(file + ": missing column `" + name + "`");
  return *c;
}

inline std::string xml_escape(const std::string& in) {
  std::string out;
  for (char c : in) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Picks the plotted columns out of a result table.
///   convergence: K against error, both log scaled (rows without an error are skipped)
///   scan: N against ln f on a logarithmic f axis
///   residuals: level n against Re residual
inline Series extract_series(const Table& t, PlotKind kind, const std::string& file = "<table>") {
  Series s;
  std::size_t cx = 0;
  std::size_t cy = 0;
  switch (kind) {
    case PlotKind::convergence:
      cx = detail::require_column(t, "K", file);
      cy = detail::require_column(t, "error", file);
      s = {{}, {}, "slices K", "relative error", true, true, false};
      break;
    case PlotKind::scan:
      cx = detail::require_column(t, "N", file);
      cy = detail::require_column(t, "log_f", file);
      s = {{}, {}, "particles N", "f(a)", false, true, true};
      break;
    case PlotKind::residuals:
      cx = detail::require_column(t, "n", file);
      cy = detail::require_column(t, "residual_re", file);
      s = {{}, {}, "level n", "diagonal residual", false, false, false};
      break;
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (std::holds_alternative<std::monostate>(t.rows[r][cy])) continue;
    const double x = detail::number_at(t, r, cx, file);
    const double y = detail::number_at(t, r, cy, file);
    if (s.log_x && !(x > 0.0)) throw Error(file + ": non-positive value on a log axis");
    if (s.log_y && !s.y_is_log && !(y > 0.0)) continue;  // exact zeros cannot be drawn on a log axis
    s.x.push_back(x);
    s.y.push_back(y);
  }
  if (s.x.empty()) throw Error(file + ": nothing to plot");
  return s;
}

/// Self-contained SVG line plot with axes, ticks and markers.
inline std::string render_svg(const Series& s, const std::string& title) {
  const double W = 640, H = 420, ml = 80, mr = 20, mt = 40, mb = 60;
  const auto tx = [&](double v) { return s.log_x ? std::log10(v) : v; };
  const auto ty = [&](double v) { return s.y_is_log ? v / std::log(10.0) : s.log_y ? std::log10(v) : v; };

  double x0 = tx(s.x.front()), x1 = x0, y0 = ty(s.y.front()), y1 = y0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    x0 = std::min(x0, tx(s.x[i]));
    x1 = std::max(x1, tx(s.x[i]));
    y0 = std::min(y0, ty(s.y[i]));
    y1 = std::max(y1, ty(s.y[i]));
  }
  if (x1 == x0) { x0 -= 0.5; x1 += 0.5; }
  if (y1 == y0) { y0 -= 0.5; y1 += 0.5; }
  const double padx = 0.04 * (x1 - x0), pady = 0.06 * (y1 - y0);
  x0 -= padx; x1 += padx; y0 -= pady; y1 += pady;
  const auto px = [&](double v) { return ml + (tx(v) - x0) / (x1 - x0) * (W - ml - mr); };
  const auto py = [&](double v) { return H - mb - (ty(v) - y0) / (y1 - y0) * (H - mt - mb); };
  const auto num = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.2f", v);
    return std::string(b);
  };
  const auto tick_label = [](double v, bool log) {
    char b[32];
    if (log) std::snprintf(b, sizeof b, "1e%d", static_cast<int>(std::lround(v)));
    else std::snprintf(b, sizeof b, "%.4g", v);
    return std::string(b);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n";
  svg += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" + detail::xml_escape(title) + "</text>\n";
  svg += "<g stroke=\"black\" fill=\"none\"><rect x=\"" + num(ml) + "\" y=\"" + num(mt) + "\" width=\"" + num(W - ml - mr) +
         "\" height=\"" + num(H - mt - mb) + "\"/></g>\n";

  const bool lx = s.log_x, ly = s.log_y;
  const auto ticks = [](double lo, double hi, bool log) {
    std::vector<double> out;
    if (log) {
      const double a = std::ceil(lo), b = std::floor(hi);
      const double step = std::max(1.0, std::ceil((b - a + 1) / 8.0));
      for (double v = a; v <= b; v += step) out.push_back(v);
      return out;
    }
    const double raw = (hi - lo) / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double step = raw / mag < 2 ? 2 * mag : raw / mag < 5 ? 5 * mag : 10 * mag;
    for (double v = std::ceil(lo / step) * step; v <= hi; v += step) out.push_back(std::abs(v) < 1e-9 * step ? 0.0 : v);
    return out;
  };
  svg += "<g font-family=\"sans-serif\" font-size=\"11\" stroke=\"none\" fill=\"black\">\n";
  for (double v : ticks(x0, x1, lx)) {
    const double x = ml + (v - x0) / (x1 - x0) * (W - ml - mr);
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(H - mb) + "\" x2=\"" + num(x) + "\" y2=\"" + num(H - mb + 5) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(x) + "\" y=\"" + num(H - mb + 18) + "\" text-anchor=\"middle\">" + tick_label(v, lx) + "</text>\n";
  }
  for (double v : ticks(y0, y1, ly)) {
    const double y = H - mb - (v - y0) / (y1 - y0) * (H - mt - mb);
    svg += "<line x1=\"" + num(ml - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(ml) + "\" y2=\"" + num(y) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(ml - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + tick_label(v, ly) + "</text>\n";
  }
  svg += "<text x=\"" + num(ml + 0.5 * (W - ml - mr)) + "\" y=\"" + num(H - 18) + "\" text-anchor=\"middle\">" +
         s.x_label + "</text>\n";
  svg += "<text transform=\"translate(20 " + num(mt + 0.5 * (H - mt - mb)) + ") rotate(-90)\" text-anchor=\"middle\">" +
         s.y_label + "</text>\n</g>\n";

  svg += "<polyline class=\"data\" fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.6\" points=\"";
  for (std::size_t i = 0; i < s.x.size(); ++i) svg += (i ? " " : "") + num(px(s.x[i])) + "," + num(py(s.y[i]));
  svg += "\"/>\n<g fill=\"#1f5fa8\">\n";
  for (std::size_t i = 0; i < s.x.size(); ++i)
    svg += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(s.y[i])) + "\" r=\"2.5\"/>\n";
  svg += "</g>\n</svg>\n";
  return svg;
}

/// Reads `result`, renders the plot next to it as `<stem>.<kind>.svg` and returns that path.
/// Nothing is written when the input cannot be read or plotted.
inline std::filesystem::path plot(const std::filesystem::path& result, PlotKind kind) {
  const Table t = read_table(result);
  const Series s = extract_series(t, kind, result.string());
  const std::filesystem::path out = result.parent_path() / (result.stem().string() + "." + to_string(kind) + ".svg");
  write_atomic(out, render_svg(s, result.filename().string() + " (" + to_string(kind) + ")"));
  return out;
}

}  // namespace cqt::experiment
