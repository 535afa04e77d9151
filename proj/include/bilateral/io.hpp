#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bilateral/error.hpp"
#include "bilateral/levy_models.hpp"
#include "bilateral/monotone_table.hpp"
#include "bilateral/path_sim.hpp"

namespace bilateral::io {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view library_version = "0.1.0";

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Hash of the canonical (sorted-key) dump of a config.
inline std::string config_hash(const Json& config) {
  const nlohmann::json sorted = nlohmann::json::parse(config.dump());
  return hex64(fnv1a(sorted.dump()));
}

/// Shortest round-trip text for a double; NaN and infinities spelled out.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
  return out;
}

/// Column-major CSV with a header row.
inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
  require(header.size() == columns.size() && !columns.empty(), Errc::io, "csv: header and columns differ");
  const std::size_t rows = columns.front().size();
  for (const auto& c : columns) require(c.size() == rows, Errc::io, "csv: ragged columns");
  auto out = open_output(path);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << format_number(columns[j][i]);
    out << '\n';
  }
}

inline void write_json(const std::filesystem::path& path, const Json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

inline Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::io, "invalid JSON in " + path.string() + ": " + e.what());
  }
}

// Tables

inline Json to_json(const MonotoneTable& t) {
  return Json{{"x", std::vector<double>(t.xs().begin(), t.xs().end())},
              {"y", std::vector<double>(t.ys().begin(), t.ys().end())}};
}

inline MonotoneTable table_from_json(const Json& j) {
  try {
    return MonotoneTable(j.at("x").get<std::vector<double>>(), j.at("y").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::domain, std::string("table needs numeric arrays x and y: ") + e.what());
  }
}

inline void write_table_csv(const std::filesystem::path& path, const MonotoneTable& t, const std::string& x_name,
                            const std::string& y_name) {
  write_csv(path, {x_name, y_name},
            {std::vector<double>(t.xs().begin(), t.xs().end()), std::vector<double>(t.ys().begin(), t.ys().end())});
}

// Models

inline Json to_json(const LevyModel& m) {
  Json j;
  switch (m.family) {
    case Family::symmetric_stable:
      j["family"] = "stable";
      j["alpha"] = m.alpha;
      j["skew"] = m.skew;
      break;
    case Family::brownian: j["family"] = "brownian"; break;
    case Family::custom:
      j["family"] = "custom";
      j["psi_table"] = to_json(*m.custom_psi);
      break;
  }
  j["killing"] = m.killing == Killing::exponential ? "exponential" : "lebesgue";
  j["rate"] = m.rate;
  return j;
}

/// {"family": "stable"|"brownian"|"custom", "alpha", "skew",
///  "killing": "exponential"|"lebesgue", "rate", "psi_table": {"x", "y"}}
inline LevyModel model_from_json(const Json& j) {
  require(j.is_object(), Errc::domain, "model must be a JSON object");
  const auto family = j.value("family", std::string("stable"));
  const auto killing_name = j.value("killing", std::string("exponential"));
  Killing killing;
  if (killing_name == "exponential")
    killing = Killing::exponential;
  else if (killing_name == "lebesgue")
    killing = Killing::lebesgue_proxy;
  else
    throw Error(Errc::domain, "unknown killing '" + killing_name + "'");
  const double rate = j.value("rate", 1.0);
  if (family == "stable") {
    require(j.contains("alpha"), Errc::domain, "stable model needs alpha");
    return LevyModel::stable(j.at("alpha").get<double>(), j.value("skew", 0.0), killing, rate);
  }
  if (family == "brownian") return LevyModel::brownian(killing, rate);
  if (family == "custom") {
    require(j.contains("psi_table"), Errc::domain, "custom model needs psi_table");
    return LevyModel::custom(table_from_json(j.at("psi_table")), killing, rate);
  }
  throw Error(Errc::domain, "unknown model family '" + family + "'");
}

// Paths and chains

inline void write_path_csv(const std::filesystem::path& path, const PathSample& p) {
  std::vector<double> t(p.values.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) * p.dt;
  write_csv(path, {"t", "x"}, {t, p.values});
}

inline Json to_json(const LadderChain& c) {
  return Json{{"times", c.times}, {"heights", c.heights}};
}

/// One JSON object per line.
inline void write_json_lines(const std::filesystem::path& path, const std::vector<Json>& rows) {
  auto out = open_output(path);
  for (const auto& r : rows) out << r.dump() << '\n';
}

// Plots

struct Series {
  std::string name;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "y";
  bool log_x = false;
  bool log_y = false;
};

namespace detail {

inline std::string escape_xml(const std::string& s) {
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

}  // namespace detail

/// Static SVG line chart.
inline void write_svg(const std::filesystem::path& path, const PlotSpec& spec, const std::vector<Series>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 50;
  auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double a = tx(s.x[i]), b = ty(s.y[i]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      x0 = std::min(x0, a);
      x1 = std::max(x1, a);
      y0 = std::min(y0, b);
      y1 = std::max(y1, b);
    }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  auto px = [&](double a) { return L + (a - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double b) { return H - B - (b - y0) / (y1 - y0) * (H - T - B); };
  static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << detail::escape_xml(spec.title) << "</text>\n";
  svg << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double a = x0 + (x1 - x0) * k / 4, b = y0 + (y1 - y0) * k / 4;
    svg << "<text x=\"" << px(a) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
        << format_number(std::round((spec.log_x ? std::pow(10, a) : a) * 1e4) / 1e4) << "</text>\n";
    svg << "<text x=\"" << L - 6 << "\" y=\"" << py(b) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
        << format_number(std::round((spec.log_y ? std::pow(10, b) : b) * 1e4) / 1e4) << "</text>\n";
  }
  svg << "<text x=\"" << L + (W - L - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << detail::escape_xml(spec.x_label + (spec.log_x ? " (log)" : "")) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << T + (H - T - B) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 "
      << T + (H - T - B) / 2 << ")\" text-anchor=\"middle\">"
      << detail::escape_xml(spec.y_label + (spec.log_y ? " (log)" : "")) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % 6];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double a = tx(s.x[i]), b = ty(s.y[i]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      svg << px(a) << ',' << py(b) << ' ';
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (k + 1) << "\" font-size=\"12\" fill=\"" << color
        << "\">" << detail::escape_xml(s.name) << "</text>\n";
  }
  svg << "</svg>\n";
  auto out = open_output(path);
  out << svg.str();
}

}  // namespace bilateral::io
