#pragma once

// Run artifacts: CSV tables, standalone SVG plots and run manifests.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "srd/util/errors.hpp"

namespace srd::report {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << text;
  if (!os) throw ConfigError("write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const std::string& source = "csv") const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ConfigError("column '" + name + "' not found in " + source);
    return static_cast<std::size_t>(it - columns.begin());
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Plain comma-separated text with a header row; no quoting.
inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream ss(text);
  std::string line;
  bool header = true;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      t.columns = split_csv_line(line);
      header = false;
    } else {
      t.rows.push_back(split_csv_line(line));
    }
  }
  return t;
}

inline std::optional<double> to_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

enum class PlotKind { kLine, kScatter };

struct PlotSpec {
  std::string csv_path;
  std::string x;
  std::string y;
  std::string group;  // empty: one series
  std::string svg_path;
  std::string title;
  PlotKind kind = PlotKind::kLine;
};

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

namespace detail {

inline std::string num(double v, const char* f = "%.2f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::pair<double, double> padded_range(double lo, double hi) {
  if (!(lo <= hi)) return {0.0, 1.0};
  if (hi - lo < 1e-12) {
    const double pad = std::max(0.5, std::abs(lo) * 0.05);
    return {lo - pad, hi + pad};
  }
  return {lo, hi};
}

}  // namespace detail

// Deterministic SVG text for `table`; rows with a non-numeric x or y are
// skipped, which also covers the empty price cells in auction results.
inline std::string render_plot(const CsvTable& table, const PlotSpec& spec) {
  const std::string src = spec.csv_path.empty() ? "csv" : spec.csv_path;
  std::optional<std::size_t> xi, yi, gi;
  if (!table.columns.empty()) {
    xi = table.column(spec.x, src);
    yi = table.column(spec.y, src);
    if (!spec.group.empty()) gi = table.column(spec.group, src);
  }
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& row : table.rows) {
    auto cell = [&](std::size_t i) { return i < row.size() ? row[i] : std::string(); };
    const auto x = to_number(cell(*xi)), y = to_number(cell(*yi));
    if (!x || !y) continue;
    const std::string key = gi ? cell(*gi) : spec.y;
    if (!series.count(key)) order.push_back(key);
    series[key].emplace_back(*x, *y);
    x0 = std::min(x0, *x);
    x1 = std::max(x1, *x);
    y0 = std::min(y0, *y);
    y1 = std::max(y1, *y);
  }
  std::tie(x0, x1) = detail::padded_range(x0, x1);
  std::tie(y0, y1) = detail::padded_range(y0, y1);

  constexpr double W = 720, H = 420, L = 70, R = 160, T = 36, B = 52;
  const double pw = W - L - R, ph = H - T - B;
  auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return T + ph - (y - y0) / (y1 - y0) * ph; };
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    os << "<text x=\"" << L + pw / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
       << xml_escape(spec.title) << "</text>\n";
  }
  os << "<g stroke=\"black\" fill=\"none\"><rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw
     << "\" height=\"" << ph << "\"/></g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    os << "<line x1=\"" << detail::num(sx(fx)) << "\" y1=\"" << T + ph << "\" x2=\"" << detail::num(sx(fx))
       << "\" y2=\"" << T + ph + 5 << "\" stroke=\"black\"/>"
       << "<text x=\"" << detail::num(sx(fx)) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">"
       << detail::num(fx, "%.4g") << "</text>\n";
    os << "<line x1=\"" << L - 5 << "\" y1=\"" << detail::num(sy(fy)) << "\" x2=\"" << L << "\" y2=\""
       << detail::num(sy(fy)) << "\" stroke=\"black\"/>"
       << "<text x=\"" << L - 8 << "\" y=\"" << detail::num(sy(fy) + 4) << "\" text-anchor=\"end\">"
       << detail::num(fy, "%.4g") << "</text>\n";
  }
  os << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xml_escape(spec.x)
     << "</text>\n";
  os << "<text transform=\"translate(16 " << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << xml_escape(spec.y) << "</text>\n";

  for (std::size_t k = 0; k < order.size(); ++k) {
    const char* color = kColors[k % 8];
    const auto& pts = series[order[k]];
    if (spec.kind == PlotKind::kLine) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) {
        os << (i ? " " : "") << detail::num(sx(pts[i].first)) << ',' << detail::num(sy(pts[i].second));
      }
      os << "\"/>\n";
    } else {
      os << "<g fill=\"" << color << "\">";
      for (const auto& [x, y] : pts) {
        os << "<circle cx=\"" << detail::num(sx(x)) << "\" cy=\"" << detail::num(sy(y)) << "\" r=\"2.5\"/>";
      }
      os << "</g>\n";
    }
    const double ly = T + 14 + 18 * static_cast<double>(k);
    os << "<rect x=\"" << L + pw + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"12\" fill=\"" << color
       << "\"/><text x=\"" << L + pw + 30 << "\" y=\"" << ly + 1 << "\">" << xml_escape(order[k]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void emit_plot(const PlotSpec& spec) {
  if (!std::filesystem::exists(spec.csv_path)) throw ConfigError("no such CSV file: " + spec.csv_path);
  write_text(spec.svg_path, render_plot(parse_csv(read_text(spec.csv_path)), spec));
}

struct RunManifest {
  std::string scenario;
  std::string preset;
  std::uint64_t seed = 0;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::string version;
  std::vector<std::string> command;
  std::vector<std::string> outputs;
  double wall_clock_seconds = 0.0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "srd-run-manifest";
    j["scenario"] = scenario;
    j["preset"] = preset;
    j["seed"] = seed;
    j["version"] = version;
    j["command"] = command;
    j["config"] = config;
    j["outputs"] = outputs;
    j["wall_clock_seconds"] = wall_clock_seconds;
    return j;
  }

  void write(const std::filesystem::path& path) const { write_text(path, to_json().dump(2) + "\n"); }
};

}  // namespace srd::report
