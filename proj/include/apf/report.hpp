// Copyright 2026 The apfusion Authors
// SPDX-License-Identifier: Apache-2.0

// Report emitters: tab-separated tables, plot-ready two-column series and
// small self-contained SVG charts. Numbers in machine-readable outputs use
// full round-trip precision; summary tables use fixed 4-digit precision.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "apf/bias_audit.hpp"
#include "apf/core_types.hpp"
#include "apf/error.hpp"
#include "apf/fusion.hpp"
#include "apf/io.hpp"
#include "apf/metrics.hpp"

namespace apf::report {

namespace fs = std::filesystem;

inline std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

/// Tab-separated table builder.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  Table& row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw SchemaError("report table: row width does not match header");
    rows_.push_back(std::move(cells));
    return *this;
  }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += '\t';
        out += cells[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  void write(const fs::path& path) const { write_text(path, str()); }

  static void write_text(const fs::path& path, std::string_view text) {
    auto out = apf::detail::open_out(path);
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::vector<std::string> trait_header(std::vector<std::string> prefix) {
  for (auto l : kTraitLetters) prefix.emplace_back(l);
  return prefix;
}

// ---------------------------------------------------------------------------
// Training, evaluation, ablation

inline Table train_log_table(const TrainReport& r) {
  Table t({"epoch", "stage", "train_loss", "val_mae", "learning_rate"});
  for (const auto& e : r.epochs)
    t.row({std::to_string(e.epoch), std::string(1, e.stage), format_real(e.train_loss), format_real(e.val_mae),
           format_real(e.learning_rate)});
  return t;
}

inline Table evaluation_table(const metrics::EvaluationResult& r) {
  Table t({"measure", "Avg.", "O", "C", "E", "A", "N"});
  std::vector<std::string> acc{"accuracy", format_real(r.mean_accuracy)};
  std::vector<std::string> mae{"mae", format_real(1.0 - r.mean_accuracy)};
  for (std::size_t j = 0; j < kNumTraits; ++j) {
    acc.push_back(format_real(r.accuracy[j]));
    mae.push_back(format_real(r.mae[j]));
  }
  t.row(acc).row(mae);
  return t;
}

/// One row per configuration: group, config, Avg., O, C, E, A, N, status.
inline Table ablation_table(std::span<const AblationRow> rows, bool full_precision = true) {
  Table t({"group", "config", "Avg.", "O", "C", "E", "A", "N", "status"});
  auto num = [&](double x) { return full_precision ? format_real(x) : fixed4(x); };
  for (const auto& r : rows) {
    std::vector<std::string> cells{r.config.group, r.config.name};
    if (r.ok) {
      cells.push_back(num(r.result.mean_accuracy));
      for (double a : r.result.accuracy) cells.push_back(num(a));
      cells.emplace_back("ok");
    } else {
      for (int i = 0; i < 6; ++i) cells.emplace_back("-");
      std::string err = r.error;
      std::replace(err.begin(), err.end(), '\t', ' ');
      std::replace(err.begin(), err.end(), '\n', ' ');
      cells.push_back("failed: " + err);
    }
    t.row(cells);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Plot-ready series and SVG

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

/// Two-column (x, y) text series with a header line.
inline void write_series(const Series& s, const fs::path& path, std::string_view x_name = "x") {
  std::string text = std::string(x_name) + "\t" + s.name + "\n";
  for (const auto& [x, y] : s.points) text += format_real(x) + "\t" + format_real(y) + "\n";
  Table::write_text(path, text);
}

/// Labelled (bin label, value) series for categorical figures.
inline void write_labelled_series(std::span<const std::string> labels, std::span<const double> values,
                                  const fs::path& path, std::string_view value_name) {
  if (labels.size() != values.size()) throw SchemaError("labelled series: size mismatch");
  std::string text = "bin\t" + std::string(value_name) + "\n";
  for (std::size_t i = 0; i < labels.size(); ++i) text += labels[i] + "\t" + format_real(values[i]) + "\n";
  Table::write_text(path, text);
}

/// Escapes the five XML special characters.
inline std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline constexpr std::array<std::string_view, 5> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

/// A minimal line chart with axes, ticks at the data range ends and a legend.
inline std::string svg_line_chart(std::span<const Series> series, std::string_view title, std::string_view x_label,
                                  std::string_view y_label) {
  constexpr double W = 640, H = 400, L = 60, R = 130, T = 40, B = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (first) {
        x0 = x1 = x;
        y0 = y1 = y;
        first = false;
      }
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  char buf[256];
  std::string svg;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" font-family=\"sans-serif\" "
                "font-size=\"12\">\n",
                W, H);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"20\" text-anchor=\"middle\">", W / 2);
  svg += buf + xml_escape(title) + "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n"
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                L, H - B, W - R, H - B, L, T, L, H - B);
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%.3g</text>\n"
                "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%.3g</text>\n"
                "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.3g</text>\n"
                "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.3g</text>\n",
                L, H - B + 16, x0, W - R, H - B + 16, x1, L - 6, H - B, y0, L - 6, T + 4, y1);
  svg += buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">", (L + W - R) / 2, H - 12);
  svg += buf + xml_escape(x_label) + "</text>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"14\" y=\"%g\" text-anchor=\"middle\" transform=\"rotate(-90 14 %g)\">",
                (T + H - B) / 2, (T + H - B) / 2);
  svg += buf + xml_escape(y_label) + "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto colour = kPalette[i % kPalette.size()];
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : series[i].points) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x), py(y));
      svg += buf;
    }
    svg += "\"/>\n";
    const double ly = T + 16.0 * static_cast<double>(i);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>"
                  "<text x=\"%g\" y=\"%g\">",
                  W - R + 10, ly, W - R + 30, ly, std::string(colour).c_str(), W - R + 36, ly + 4);
    svg += buf + xml_escape(series[i].name) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

// ---------------------------------------------------------------------------
// Residual improvement curves

inline std::vector<Series> residual_series(const metrics::ResidualCurve& c) {
  std::vector<Series> out;
  for (std::size_t j = 0; j < kNumTraits; ++j) {
    Series s{std::string(kTraitNames[j]), {}};
    for (std::size_t k = 0; k < c.thresholds.size(); ++k) s.points.emplace_back(c.thresholds[k], c.values[j][k]);
    out.push_back(std::move(s));
  }
  return out;
}

/// Writes residual_curve.tsv (threshold + one column per trait), one
/// two-column series per trait, and residual_curve.svg. Returns the files written.
inline std::vector<fs::path> write_residual_curve(const metrics::ResidualCurve& c, const fs::path& dir) {
  std::vector<fs::path> files;
  Table t(trait_header({"threshold"}));
  for (std::size_t k = 0; k < c.thresholds.size(); ++k) {
    std::vector<std::string> cells{format_real(c.thresholds[k])};
    for (std::size_t j = 0; j < kNumTraits; ++j) cells.push_back(format_real(c.values[j][k]));
    t.row(cells);
  }
  files.push_back(dir / "residual_curve.tsv");
  t.write(files.back());
  const auto series = residual_series(c);
  for (std::size_t j = 0; j < kNumTraits; ++j) {
    files.push_back(dir / ("residual_curve_" + std::string(kTraitLetters[j]) + ".tsv"));
    write_series(series[j], files.back(), "threshold");
  }
  files.push_back(dir / "residual_curve.svg");
  Table::write_text(files.back(), svg_line_chart(series, "Residual improvement over baseline", "threshold",
                                                 "fraction of videos"));
  return files;
}

// ---------------------------------------------------------------------------
// Bias audit tables

/// Rows per group with count, shares and one "mean±std" cell per trait.
inline Table group_stats_table(const audit::GroupStatsTable& g) {
  Table t(trait_header({"ethnicity", "gender", "count", "percent_population", "percent_within_ethnicity"}));
  for (const auto& r : g.rows) {
    std::vector<std::string> cells{r.ethnicity ? std::string(to_string(*r.ethnicity)) : "all",
                                   r.gender ? std::string(to_string(*r.gender)) : "all", std::to_string(r.count),
                                   fixed4(r.percent_of_population),
                                   r.ethnicity && r.gender ? fixed4(r.percent_of_parent) : "-"};
    for (std::size_t j = 0; j < kNumTraits; ++j) cells.push_back(audit::format_cell(r.stats.mean[j], r.stats.stddev[j]));
    t.row(cells);
  }
  return t;
}

/// Full-precision means and standard deviations, one row per group and trait.
inline Table group_stats_long_table(const audit::GroupStatsTable& g) {
  Table t({"ethnicity", "gender", "trait", "count", "mean", "stddev"});
  for (const auto& r : g.rows)
    for (std::size_t j = 0; j < kNumTraits; ++j)
      t.row({r.ethnicity ? std::string(to_string(*r.ethnicity)) : "all",
             r.gender ? std::string(to_string(*r.gender)) : "all", std::string(kTraitLetters[j]),
             std::to_string(r.count), format_real(r.stats.mean[j]), format_real(r.stats.stddev[j])});
  return t;
}

inline Table age_trend_table(const audit::AgeBinReport& a) {
  Table t(trait_header({"age_bin", "count"}));
  for (std::size_t b = 0; b < audit::kAgeBinLabels.size(); ++b) {
    std::vector<std::string> cells{std::string(audit::kAgeBinLabels[b]), std::to_string(a.count[b])};
    for (std::size_t j = 0; j < kNumTraits; ++j) cells.push_back(a.count[b] ? format_real(a.mean[b][j]) : "-");
    t.row(cells);
  }
  return t;
}

inline Table extremes_table(const audit::ExtremesReport& e) {
  Table t({"trait", "extreme", "bin_0", "bin_1", "bin_2", "bin_3", "bin_4", "expected_bin"});
  for (std::size_t j = 0; j < kNumTraits; ++j) {
    for (int side = 0; side < 2; ++side) {
      const auto& h = side == 0 ? e.top[j] : e.bottom[j];
      std::vector<std::string> cells{std::string(kTraitLetters[j]), side == 0 ? "top" : "bottom"};
      for (double x : h) cells.push_back(format_real(x));
      cells.push_back(format_real(audit::expected_bin(h)));
      t.row(cells);
    }
  }
  return t;
}

inline Table emotion_frequency_table(const audit::EmotionFrequencyReport& e) {
  std::vector<std::string> header{"trait", "extreme"};
  for (auto n : kEmotionNames) header.emplace_back(n);
  Table t(header);
  for (std::size_t j = 0; j < kNumTraits; ++j)
    for (int side = 0; side < 2; ++side) {
      const auto& c = side == 0 ? e.top[j] : e.bottom[j];
      std::vector<std::string> cells{std::string(kTraitLetters[j]), side == 0 ? "top" : "bottom"};
      for (auto x : c) cells.push_back(std::to_string(x));
      t.row(cells);
    }
  return t;
}

}  // namespace apf::report
