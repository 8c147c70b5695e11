// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Report serialization: per-(epoch, user) CSV, summary JSON, and a grouped
// before/after bar chart as SVG. Output bytes depend only on the report.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marqoe/experiment.hpp"
#include "marqoe/trace.hpp"

namespace marqoe {

inline constexpr const char* kReportHeader =
    "epoch,user,method,bandwidth_hz,predicted_qoe,realized_before,realized_after,role";

inline Role parse_role(const std::string& s) {
  if (s == "donor") return Role::donor;
  if (s == "receiver") return Role::receiver;
  if (s == "untouched") return Role::untouched;
  throw SchemaError("unknown role '" + s + "'");
}

inline void write_report_csv(const std::vector<ExperimentRecord>& records, std::ostream& out) {
  out << kReportHeader << '\n';
  for (const auto& r : records)
    out << r.epoch << ',' << r.user << ',' << r.method << ',' << detail::format_double(r.bandwidth) << ','
        << detail::format_double(r.predicted) << ',' << detail::format_double(r.realized_before) << ','
        << detail::format_double(r.realized_after) << ',' << to_string(r.role) << '\n';
}

inline std::vector<ExperimentRecord> read_report_csv(std::istream& in, const std::string& source = "report") {
  std::string line;
  if (!std::getline(in, line)) throw EmptyTrace(source + ": empty report");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kReportHeader) throw SchemaError(source + ": unexpected header '" + line + "'");
  std::vector<ExperimentRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    const std::string where = source + ":" + std::to_string(lineno);
    if (f.size() != 8) throw SchemaError(where + ": expected 8 fields");
    ExperimentRecord r;
    double epoch = 0.0;
    if (!detail::parse_double(f[0], epoch) || epoch != std::floor(epoch)) throw SchemaError(where + ": bad epoch");
    r.epoch = static_cast<int>(epoch);
    r.user = std::string(f[1]);
    r.method = std::string(f[2]);
    if (!detail::parse_double(f[3], r.bandwidth) || !detail::parse_double(f[4], r.predicted) ||
        !detail::parse_double(f[5], r.realized_before) || !detail::parse_double(f[6], r.realized_after))
      throw SchemaError(where + ": bad number");
    r.role = parse_role(std::string(f[7]));
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<ExperimentRecord> read_report_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_report_csv(in, path.string());
}

inline nlohmann::json summary_to_json(const ExperimentSummary& s) {
  nlohmann::json users = nlohmann::json::array();
  for (const auto& u : s.per_user)
    users.push_back({{"user", u.user},
                     {"epochs", u.epochs},
                     {"mean_before", u.mean_before},
                     {"mean_after", u.mean_after},
                     {"receiver_epochs", u.receiver_epochs},
                     {"receiver_mean_before", u.receiver_mean_before},
                     {"receiver_mean_after", u.receiver_mean_after},
                     {"donor_epochs", u.donor_epochs},
                     {"donor_mean_after", u.donor_mean_after}});
  return {{"method", s.method},
          {"users", s.users},
          {"epochs", s.epochs},
          {"records", s.records},
          {"mean_qoe_before", s.mean_before},
          {"mean_qoe_after", s.mean_after},
          {"mse", s.mse},
          {"category_accuracy", s.category_accuracy},
          {"objective", s.objective},
          {"max_total_bandwidth_hz", s.max_total_bandwidth},
          {"final_total_bandwidth_hz", s.final_total_bandwidth},
          {"donor_events", s.donor_events},
          {"receiver_events", s.receiver_events},
          {"per_user", users}};
}

// Two bars per user: mean realized QoE before and after reallocation.
inline std::string report_svg(const ExperimentSummary& s) {
  constexpr double bar = 18.0, gap = 4.0, group_gap = 22.0, plot_h = 200.0;
  constexpr double left = 50.0, top = 30.0, bottom = 40.0;
  const double group_w = 2.0 * bar + gap;
  const double width = left + static_cast<double>(s.per_user.size()) * (group_w + group_gap) + group_gap;
  const double height = top + plot_h + bottom;
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<text x=\"" << num(left) << "\" y=\"16\">Mean realized QoE per user (" << s.method << ")</text>\n";
  o << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + plot_h) << "\" x2=\"" << num(width) << "\" y2=\""
    << num(top + plot_h) << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = 0.25 * k, y = top + plot_h * (1.0 - v);
    o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << num(v)
      << "</text>\n";
  }
  double x = left + group_gap;
  for (const auto& u : s.per_user) {
    const double vals[2] = {u.mean_before, u.mean_after};
    const char* fills[2] = {"#9e9e9e", "#1f77b4"};
    const char* names[2] = {"before", "after"};
    for (int k = 0; k < 2; ++k) {
      const double h = plot_h * std::clamp(vals[k], 0.0, 1.0);
      o << "<rect class=\"bar " << names[k] << "\" x=\"" << num(x + k * (bar + gap)) << "\" y=\""
        << num(top + plot_h - h) << "\" width=\"" << num(bar) << "\" height=\"" << num(h) << "\" fill=\""
        << fills[k] << "\"><title>" << u.user << ' ' << names[k] << ' ' << num(vals[k]) << "</title></rect>\n";
    }
    o << "<text x=\"" << num(x + group_w / 2) << "\" y=\"" << num(top + plot_h + 16)
      << "\" text-anchor=\"middle\">" << u.user << "</text>\n";
    x += group_w + group_gap;
  }
  o << "</svg>\n";
  return o.str();
}

namespace detail {
inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}
}  // namespace detail

struct ReportFiles {
  std::filesystem::path csv, svg, summary;
};

// Writes report.csv, report.svg and summary.json into `dir`.
inline ReportFiles emit_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  ReportFiles f{dir / "report.csv", dir / "report.svg", dir / "summary.json"};
  std::ostringstream csv;
  write_report_csv(report.records, csv);
  detail::write_text_file(f.csv, csv.str());
  detail::write_text_file(f.svg, report_svg(report.summary));
  detail::write_text_file(f.summary, summary_to_json(report.summary).dump(2) + "\n");
  return f;
}

}  // namespace marqoe
