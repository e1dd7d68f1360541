/*
 * Copyright 2026 The Validity Lab Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Run provenance and deterministic artifact emission (files, SVG plots).

#ifndef VALIDITY_LAB_REPORT_HPP_
#define VALIDITY_LAB_REPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "validity_lab/common.hpp"

namespace validity_lab {

// Config hash: 64-bit FNV-1a over the canonical JSON text of the config
// (object keys sorted, no whitespace), as 16 lowercase hex digits.
inline std::string ConfigHash(const nlohmann::json& config) {
  const std::string canonical = config.dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;

  static Provenance Of(const nlohmann::json& config, std::uint64_t seed) {
    return {ConfigHash(config), seed};
  }

  // Leading comment line for CSV artifacts; loaders skip '#' lines.
  std::string CsvComment() const {
    return "# config_hash=" + config_hash + " seed=" + std::to_string(seed) + "\n";
  }

  void Stamp(nlohmann::json& out) const {
    out["config_hash"] = config_hash;
    out["seed"] = seed;
  }
};

inline void WriteTextFile(const std::filesystem::path& path,
                          const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw IoError("write to " + path.string() + " failed");
}

inline std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void WriteJsonFile(const std::filesystem::path& path,
                          const nlohmann::json& value) {
  WriteTextFile(path, value.dump(2) + "\n");
}

inline nlohmann::json ReadJsonFile(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// SVG plots on a fixed 800x600 canvas. Coordinates are printed with two
// decimals and elements are emitted in input order.

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct ScatterMark {
  std::string label;
  double x = 0.0;
  double y = 0.0;
  bool highlighted = false;
};

namespace internal {

inline constexpr double kSvgWidth = 800.0;
inline constexpr double kSvgHeight = 600.0;
inline constexpr double kMarginLeft = 80.0;
inline constexpr double kMarginRight = 40.0;
inline constexpr double kMarginTop = 50.0;
inline constexpr double kMarginBottom = 70.0;

inline const char* SeriesColor(std::size_t k) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#ff7f0e", "#9467bd", "#8c564b"};
  return kColors[k % 6];
}

inline std::string Fixed(double value, int decimals = 2) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  std::string out = buffer;
  if (out == "-0.00" || out == "-0.000" || out == "-0.0000") out.erase(0, 1);
  return out;
}

inline std::string EscapeXml(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x_lo, x_hi, y_lo, y_hi;

  double Px(double x) const {
    return kMarginLeft + (x - x_lo) / (x_hi - x_lo) *
                             (kSvgWidth - kMarginLeft - kMarginRight);
  }
  double Py(double y) const {
    return kSvgHeight - kMarginBottom -
           (y - y_lo) / (y_hi - y_lo) * (kSvgHeight - kMarginTop - kMarginBottom);
  }
};

inline Frame FitFrame(double x_lo, double x_hi, double y_lo, double y_hi) {
  if (!(x_hi > x_lo)) { x_lo -= 0.5; x_hi += 0.5; }
  if (!(y_hi > y_lo)) { y_lo -= 0.5; y_hi += 0.5; }
  const double px = (x_hi - x_lo) * 0.05;
  const double py = (y_hi - y_lo) * 0.05;
  return {x_lo - px, x_hi + px, y_lo - py, y_hi + py};
}

inline void SvgHeader(std::ostringstream& out, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const Frame& frame, const std::string& provenance) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n";
  if (!provenance.empty()) out << "<!-- " << EscapeXml(provenance) << " -->\n";
  out << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
  out << "<text x=\"400\" y=\"30\" text-anchor=\"middle\" font-size=\"18\">"
      << EscapeXml(title) << "</text>\n";
  const double left = kMarginLeft, right = kSvgWidth - kMarginRight;
  const double top = kMarginTop, bottom = kSvgHeight - kMarginBottom;
  out << "<line x1=\"" << Fixed(left) << "\" y1=\"" << Fixed(bottom) << "\" x2=\""
      << Fixed(right) << "\" y2=\"" << Fixed(bottom) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << Fixed(left) << "\" y1=\"" << Fixed(top) << "\" x2=\""
      << Fixed(left) << "\" y2=\"" << Fixed(bottom) << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = frame.x_lo + (frame.x_hi - frame.x_lo) * k / 4.0;
    const double yv = frame.y_lo + (frame.y_hi - frame.y_lo) * k / 4.0;
    out << "<text x=\"" << Fixed(frame.Px(xv)) << "\" y=\"" << Fixed(bottom + 20)
        << "\" text-anchor=\"middle\" font-size=\"12\">" << Fixed(xv, 3)
        << "</text>\n";
    out << "<text x=\"" << Fixed(left - 8) << "\" y=\"" << Fixed(frame.Py(yv) + 4)
        << "\" text-anchor=\"end\" font-size=\"12\">" << Fixed(yv, 3) << "</text>\n";
  }
  out << "<text x=\"400\" y=\"" << Fixed(kSvgHeight - 20)
      << "\" text-anchor=\"middle\" font-size=\"14\">" << EscapeXml(x_label)
      << "</text>\n";
  out << "<text x=\"20\" y=\"300\" text-anchor=\"middle\" font-size=\"14\" "
         "transform=\"rotate(-90 20 300)\">"
      << EscapeXml(y_label) << "</text>\n";
}

}  // namespace internal

inline std::string LinePlotSvg(const std::vector<PlotSeries>& series,
                               const std::string& title, const std::string& x_label,
                               const std::string& y_label,
                               const std::string& provenance = "") {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x_lo = std::min(x_lo, x); x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y); y_hi = std::max(y_hi, y);
    }
  }
  if (!std::isfinite(x_lo)) { x_lo = 0; x_hi = 1; y_lo = 0; y_hi = 1; }
  const auto frame = internal::FitFrame(x_lo, x_hi, y_lo, y_hi);
  std::ostringstream out;
  internal::SvgHeader(out, title, x_label, y_label, frame, provenance);
  for (std::size_t k = 0; k < series.size(); ++k) {
    out << "<polyline fill=\"none\" stroke=\"" << internal::SeriesColor(k)
        << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (const auto& [x, y] : series[k].points) {
      if (!first) out << ' ';
      out << internal::Fixed(frame.Px(x)) << ',' << internal::Fixed(frame.Py(y));
      first = false;
    }
    out << "\"/>\n";
    out << "<text x=\"" << internal::Fixed(internal::kSvgWidth - 200) << "\" y=\""
        << internal::Fixed(internal::kMarginTop + 20 + 18.0 * k)
        << "\" font-size=\"13\" fill=\"" << internal::SeriesColor(k) << "\">"
        << internal::EscapeXml(series[k].label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

inline std::string ScatterPlotSvg(const std::vector<ScatterMark>& marks,
                                  const std::string& title,
                                  const std::string& x_label,
                                  const std::string& y_label,
                                  const std::string& provenance = "") {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& m : marks) {
    x_lo = std::min(x_lo, m.x); x_hi = std::max(x_hi, m.x);
    y_lo = std::min(y_lo, m.y); y_hi = std::max(y_hi, m.y);
  }
  if (!std::isfinite(x_lo)) { x_lo = 0; x_hi = 1; y_lo = 0; y_hi = 1; }
  const auto frame = internal::FitFrame(x_lo, x_hi, y_lo, y_hi);
  std::ostringstream out;
  internal::SvgHeader(out, title, x_label, y_label, frame, provenance);
  for (const auto& m : marks) {
    out << "<circle cx=\"" << internal::Fixed(frame.Px(m.x)) << "\" cy=\""
        << internal::Fixed(frame.Py(m.y)) << "\" r=\"6\" fill=\""
        << (m.highlighted ? "#d62728" : "#7f7f7f") << "\"/>\n";
    out << "<text x=\"" << internal::Fixed(frame.Px(m.x) + 9) << "\" y=\""
        << internal::Fixed(frame.Py(m.y) - 9) << "\" font-size=\"13\">"
        << internal::EscapeXml(m.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace validity_lab

#endif  // VALIDITY_LAB_REPORT_HPP_
