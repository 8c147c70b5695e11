// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// 6-DoF pose traces: CSV ingestion, canonical serialization, history
// resampling, and the dataset manifest.
//
// Trace CSV: header `t,px,py,pz,<rotation columns>`, one frame per line.
// Default rotation columns per convention:
//   euler-zyx, euler-xyz   rx,ry,rz        (radians; roll, pitch, yaw)
//   quaternion-wxyz        qw,qx,qy,qz
//   quaternion-xyzw        qx,qy,qz,qw

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "marqoe/error.hpp"
#include "marqoe/geometry.hpp"

namespace marqoe {

namespace fs = std::filesystem;

// ============================================================================
// Types
// ============================================================================
struct FrameRecord {
  double timestamp{0.0};
  Pose pose;
};

struct UserTrace {
  std::string user_id;
  double fps{30.0};
  std::vector<FrameRecord> frames;

  double start() const { return frames.front().timestamp; }
  double end() const { return frames.back().timestamp; }
  std::size_t size() const { return frames.size(); }

  // Index of the frame nearest to time t, clamped to the trace.
  std::size_t nearest_frame(double t) const {
    const double k = std::round((t - start()) * fps);
    if (k <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(k), frames.size() - 1);
  }
};

struct PoseSample {
  double timestamp{0.0};
  Pose pose;
};

struct PoseHistory {
  std::vector<PoseSample> samples;  // oldest first
  double sampling_rate{0.0};
  double window{0.0};

  bool empty() const { return samples.empty(); }
};

enum class RotationConvention { euler_zyx, euler_xyz, quaternion_wxyz, quaternion_xyzw };

inline RotationConvention parse_rotation_convention(std::string_view s) {
  if (s == "euler-zyx") return RotationConvention::euler_zyx;
  if (s == "euler-xyz") return RotationConvention::euler_xyz;
  if (s == "quaternion-wxyz") return RotationConvention::quaternion_wxyz;
  if (s == "quaternion-xyzw") return RotationConvention::quaternion_xyzw;
  throw SchemaError("unknown rotation convention '" + std::string(s) + "'");
}

inline std::string to_string(RotationConvention c) {
  switch (c) {
    case RotationConvention::euler_zyx: return "euler-zyx";
    case RotationConvention::euler_xyz: return "euler-xyz";
    case RotationConvention::quaternion_wxyz: return "quaternion-wxyz";
    case RotationConvention::quaternion_xyzw: return "quaternion-xyzw";
  }
  return "?";
}

inline std::vector<std::string> default_rotation_columns(RotationConvention c) {
  switch (c) {
    case RotationConvention::euler_zyx:
    case RotationConvention::euler_xyz: return {"rx", "ry", "rz"};
    case RotationConvention::quaternion_wxyz: return {"qw", "qx", "qy", "qz"};
    case RotationConvention::quaternion_xyzw: return {"qx", "qy", "qz", "qw"};
  }
  return {};
}

// Header names for each logical field. An empty `rotation` list selects the
// convention's default names, in the convention's component order.
struct ColumnMap {
  std::string timestamp{"t"};
  std::array<std::string, 3> position{"px", "py", "pz"};
  std::vector<std::string> rotation;
};

struct TraceParseOptions {
  double fps{30.0};
  double spacing_tolerance{1e-6};
  // Replace timestamps by t0 + k/fps after the ordering check (for sources
  // whose clocks jitter around the nominal frame period).
  bool retime{false};
  std::string user_id;  // defaults to the file stem
};

// ============================================================================
// CSV parsing
// ============================================================================
namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    std::string_view field = line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
      field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline Pose pose_from_columns(const double* rot, const Vec3& position, RotationConvention conv) {
  RawPose raw;
  raw.position = position;
  switch (conv) {
    case RotationConvention::euler_zyx:
      raw.orientation = EulerAngles{rot[0], rot[1], rot[2]};
      raw.euler_order = EulerOrder::zyx;
      break;
    case RotationConvention::euler_xyz:
      raw.orientation = EulerAngles{rot[0], rot[1], rot[2]};
      raw.euler_order = EulerOrder::xyz;
      break;
    case RotationConvention::quaternion_wxyz:
      raw.orientation = Quaternion{rot[0], rot[1], rot[2], rot[3]};
      break;
    case RotationConvention::quaternion_xyzw:
      raw.orientation = Quaternion{rot[3], rot[0], rot[1], rot[2]};
      break;
  }
  return canonicalize_pose(raw);
}

inline UserTrace parse_trace(std::istream& in, const ColumnMap& columns, RotationConvention conv,
                             const TraceParseOptions& opts, const std::string& source = "<stream>") {
  if (!(opts.fps > 0.0)) throw InvalidParameter("fps must be > 0");
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw EmptyTrace(source + ": no header");

  const auto header = detail::split_csv_line(line);
  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError(source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::vector<std::string> rot_names =
      columns.rotation.empty() ? default_rotation_columns(conv) : columns.rotation;
  const std::size_t rot_needed = default_rotation_columns(conv).size();
  if (rot_names.size() != rot_needed)
    throw SchemaError(source + ": convention " + to_string(conv) + " needs " +
                      std::to_string(rot_needed) + " rotation columns");

  std::vector<std::size_t> idx;
  idx.push_back(column_of(columns.timestamp));
  for (const auto& p : columns.position) idx.push_back(column_of(p));
  for (const auto& r : rot_names) idx.push_back(column_of(r));

  UserTrace trace;
  trace.user_id = opts.user_id.empty() ? fs::path(source).stem().string() : opts.user_id;
  trace.fps = opts.fps;

  std::vector<double> v(idx.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw SchemaError(source + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) {
      if (!detail::parse_double(fields[idx[c]], v[c]) || !std::isfinite(v[c]))
        throw SchemaError(source + ":" + std::to_string(line_no) + ": non-finite or malformed value in column '" +
                          std::string(header[idx[c]]) + "'");
    }
    Pose pose;
    try {
      pose = pose_from_columns(v.data() + 4, Vec3{v[1], v[2], v[3]}, conv);
    } catch (const InvalidPose& e) {
      throw SchemaError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!trace.frames.empty() && !(v[0] > trace.frames.back().timestamp))
      throw OrderError(source + ":" + std::to_string(line_no) + ": timestamp " +
                       detail::format_double(v[0]) + " does not increase");
    trace.frames.push_back({v[0], pose});
  }
  if (trace.frames.empty()) throw EmptyTrace(source + ": no frames");

  const double period = 1.0 / opts.fps;
  const double t0 = trace.frames.front().timestamp;
  if (opts.retime) {
    for (std::size_t k = 0; k < trace.frames.size(); ++k)
      trace.frames[k].timestamp = t0 + static_cast<double>(k) * period;
  } else {
    for (std::size_t k = 1; k < trace.frames.size(); ++k) {
      const double gap = trace.frames[k].timestamp - trace.frames[k - 1].timestamp;
      if (std::abs(gap - period) > opts.spacing_tolerance)
        throw OrderError(source + ": frame " + std::to_string(k) + " spacing " +
                         detail::format_double(gap) + " s deviates from 1/fps");
    }
  }
  return trace;
}

inline UserTrace parse_trace_file(const fs::path& path, const ColumnMap& columns,
                                  RotationConvention conv, TraceParseOptions opts = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  if (opts.user_id.empty()) opts.user_id = path.stem().string();
  return parse_trace(in, columns, conv, opts, path.string());
}

// Canonical form: quaternion-wxyz columns, 17 significant digits.
inline void write_trace_csv(const UserTrace& trace, std::ostream& out) {
  out << "t,px,py,pz,qw,qx,qy,qz\n";
  for (const auto& f : trace.frames) {
    const auto& p = f.pose.position;
    const auto& q = f.pose.orientation;
    out << detail::format_double(f.timestamp) << ',' << detail::format_double(p.x) << ','
        << detail::format_double(p.y) << ',' << detail::format_double(p.z) << ','
        << detail::format_double(q.w) << ',' << detail::format_double(q.x) << ','
        << detail::format_double(q.y) << ',' << detail::format_double(q.z) << '\n';
  }
}

inline void write_trace_file(const UserTrace& trace, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_trace_csv(trace, out);
  if (!out) throw IoError("write failed for " + path.string());
}

// ============================================================================
// History resampling
// ============================================================================

// Target instants f, f - 1/rate, ... strictly after f - window, snapped to the
// nearest frame; instants before the trace start are dropped.
inline PoseHistory resample_history(const UserTrace& trace, double f, double rate, double window) {
  if (!(rate > 0.0)) throw InvalidParameter("resample rate must be > 0");
  if (!(window > 0.0)) throw InvalidParameter("history window must be > 0");
  if (trace.frames.empty()) throw EmptyTrace(trace.user_id);
  constexpr double eps = 1e-9;
  if (f < trace.start() - eps || f > trace.end() + eps)
    throw OutOfRange("time " + detail::format_double(f) + " outside trace " + trace.user_id);

  const auto count = static_cast<long>(std::ceil(window * rate - eps));
  PoseHistory h;
  h.sampling_rate = rate;
  h.window = window;
  std::size_t last_index = trace.frames.size();
  for (long k = count - 1; k >= 0; --k) {
    const double t = f - static_cast<double>(k) / rate;
    if (t < trace.start() - eps) continue;
    const std::size_t i = trace.nearest_frame(t);
    if (i == last_index) continue;
    last_index = i;
    h.samples.push_back({trace.frames[i].timestamp, trace.frames[i].pose});
  }
  return h;
}

// ============================================================================
// Dataset manifest
// ============================================================================
struct ManifestEntry {
  std::string user_id;
  fs::path path;  // resolved against the manifest's directory
  RotationConvention rotation_convention{RotationConvention::quaternion_wxyz};
  Aabb grid_bounds;
};

struct DatasetManifest {
  std::string dataset;
  double fps{30.0};
  Aabb grid_bounds;
  std::array<int, 3> grid_dims{4, 4, 2};
  ColumnMap columns;
  bool retime{false};
  std::vector<ManifestEntry> entries;

  CellGrid grid() const { return CellGrid(grid_bounds, grid_dims); }
  CellGrid grid_for(const ManifestEntry& e) const { return CellGrid(e.grid_bounds, grid_dims); }
};

namespace detail {
inline Aabb bounds_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 6)
    throw ManifestError(what + ": grid_bounds must be 6 numbers [minx,miny,minz,maxx,maxy,maxz]");
  std::array<double, 6> b{};
  for (std::size_t i = 0; i < 6; ++i) {
    if (!j[i].is_number()) throw ManifestError(what + ": grid_bounds must be numeric");
    b[i] = j[i].get<double>();
  }
  if (!(b[0] < b[3] && b[1] < b[4] && b[2] < b[5]))
    throw ManifestError(what + ": grid_bounds need min < max on every axis");
  return {{b[0], b[1], b[2]}, {b[3], b[4], b[5]}};
}
}  // namespace detail

// Manifest document (JSON):
//   { "dataset": str, "fps": num, "grid_bounds": [6 nums], "grid_dims": [3 ints]?,
//     "retime": bool?, "columns": {"t": str, "position": [3 str], "rotation": [str]}?,
//     "users": [ {"id": str, "path": str, "rotation_convention": str,
//                 "grid_bounds": [6 nums]?}, ... ] }
inline DatasetManifest parse_manifest(const nlohmann::json& doc, const fs::path& base_dir,
                                      bool check_files = true) {
  using nlohmann::json;
  DatasetManifest m;
  try {
    m.dataset = doc.at("dataset").get<std::string>();
    m.fps = doc.value("fps", 30.0);
    if (!(m.fps > 0.0)) throw ManifestError("fps must be > 0");
    m.grid_bounds = detail::bounds_from_json(doc.at("grid_bounds"), "manifest");
    if (doc.contains("grid_dims")) {
      const auto d = doc.at("grid_dims").get<std::vector<int>>();
      if (d.size() != 3 || d[0] <= 0 || d[1] <= 0 || d[2] <= 0)
        throw ManifestError("grid_dims must be 3 positive integers");
      m.grid_dims = {d[0], d[1], d[2]};
    }
    m.retime = doc.value("retime", false);
    if (doc.contains("columns")) {
      const auto& c = doc.at("columns");
      m.columns.timestamp = c.value("t", std::string("t"));
      if (c.contains("position")) {
        const auto p = c.at("position").get<std::vector<std::string>>();
        if (p.size() != 3) throw ManifestError("columns.position needs 3 names");
        m.columns.position = {p[0], p[1], p[2]};
      }
      if (c.contains("rotation")) m.columns.rotation = c.at("rotation").get<std::vector<std::string>>();
    }
    const auto& users = doc.at("users");
    if (!users.is_array() || users.empty()) throw ManifestError("manifest lists no users");
    std::set<std::string> seen;
    for (const auto& u : users) {
      ManifestEntry e;
      e.user_id = u.at("id").get<std::string>();
      if (e.user_id.empty()) throw ManifestError("empty user id");
      if (!seen.insert(e.user_id).second) throw ManifestError("duplicate user id '" + e.user_id + "'");
      fs::path p = u.at("path").get<std::string>();
      e.path = p.is_absolute() ? p : base_dir / p;
      try {
        e.rotation_convention =
            parse_rotation_convention(u.value("rotation_convention", std::string("quaternion-wxyz")));
      } catch (const SchemaError& err) {
        throw ManifestError(e.user_id + ": " + err.what());
      }
      e.grid_bounds = u.contains("grid_bounds") ? detail::bounds_from_json(u.at("grid_bounds"), e.user_id)
                                                : m.grid_bounds;
      if (check_files && !fs::exists(e.path))
        throw ManifestError("trace file not found: " + e.path.string());
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ManifestError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

inline DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
  return parse_manifest(doc, path.parent_path());
}

inline nlohmann::json manifest_to_json(const DatasetManifest& m, const fs::path& base_dir) {
  using nlohmann::json;
  auto bounds = [](const Aabb& b) {
    return json::array({b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z});
  };
  json users = json::array();
  for (const auto& e : m.entries) {
    json u{{"id", e.user_id},
           {"path", fs::relative(e.path, base_dir).generic_string()},
           {"rotation_convention", to_string(e.rotation_convention)}};
    if (e.grid_bounds.min != m.grid_bounds.min || e.grid_bounds.max != m.grid_bounds.max)
      u["grid_bounds"] = bounds(e.grid_bounds);
    users.push_back(std::move(u));
  }
  return json{{"dataset", m.dataset},
              {"fps", m.fps},
              {"grid_bounds", bounds(m.grid_bounds)},
              {"grid_dims", {m.grid_dims[0], m.grid_dims[1], m.grid_dims[2]}},
              {"users", std::move(users)}};
}

inline UserTrace load_trace(const DatasetManifest& m, const ManifestEntry& e) {
  TraceParseOptions opts;
  opts.fps = m.fps;
  opts.retime = m.retime;
  opts.user_id = e.user_id;
  return parse_trace_file(e.path, m.columns, e.rotation_convention, opts);
}

}  // namespace marqoe
