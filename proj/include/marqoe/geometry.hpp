// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Pose representation, view-frustum visibility over the content cell grid,
// and the virtual-content-hit-rate (VCHR) metric.
//
// Conventions
//   * Euler angles are (x, y, z) = (roll, pitch, yaw) in radians, composed
//     intrinsically Z-Y-X: R = Rz(yaw) * Ry(pitch) * Rx(roll).
//   * Camera body frame: +X looks forward, +Y points left, +Z points up.
//   * Quaternions are stored (w, x, y, z), canonical form is unit norm with
//     the first non-zero of (w, x, y, z) positive.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "marqoe/error.hpp"

namespace marqoe {

// ============================================================================
// Vec3 / Mat3
// ============================================================================
struct Vec3 {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr bool operator==(const Vec3&) const = default;

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

using Mat3 = std::array<std::array<double, 3>, 3>;

inline Vec3 operator*(const Mat3& m, const Vec3& v) {
  return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
          m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
          m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

inline Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

// ============================================================================
// Quaternion
// ============================================================================
struct Quaternion {
  double w{1.0};
  double x{0.0};
  double y{0.0};
  double z{0.0};

  static constexpr Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  bool finite() const {
    return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
  constexpr Quaternion conjugate() const { return {w, -x, -y, -z}; }
  constexpr bool operator==(const Quaternion&) const = default;

  constexpr Quaternion operator*(const Quaternion& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
  }

  // Unit norm, sign fixed so that the first non-zero component is positive.
  Quaternion canonical() const {
    // Unit to within rounding is left alone so canonical output is a fixed point.
    const double n2 = w * w + x * x + y * y + z * z;
    const double n = std::abs(n2 - 1.0) <= 8.0 * std::numeric_limits<double>::epsilon() ? 1.0 : std::sqrt(n2);
    Quaternion q = n == 1.0 ? *this : Quaternion{w / n, x / n, y / n, z / n};
    const double lead = q.w != 0.0 ? q.w : (q.x != 0.0 ? q.x : (q.y != 0.0 ? q.y : q.z));
    if (lead < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
    return q;
  }

  Mat3 to_matrix() const {
    const double ww = w * w, xx = x * x, yy = y * y, zz = z * z;
    return {{{ww + xx - yy - zz, 2 * (x * y - w * z), 2 * (x * z + w * y)},
             {2 * (x * y + w * z), ww - xx + yy - zz, 2 * (y * z - w * x)},
             {2 * (x * z - w * y), 2 * (y * z + w * x), ww - xx - yy + zz}}};
  }

  Vec3 rotate(const Vec3& v) const { return to_matrix() * v; }

  // Rotation vector (axis * angle) of this unit quaternion, shortest arc.
  Vec3 log() const {
    Quaternion q = w < 0.0 ? Quaternion{-w, -x, -y, -z} : *this;
    const double s = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
    if (s < 1e-12) return Vec3{q.x, q.y, q.z} * 2.0;
    const double angle = 2.0 * std::atan2(s, q.w);
    return Vec3{q.x, q.y, q.z} * (angle / s);
  }

  static Quaternion exp(const Vec3& rotvec) {
    const double angle = rotvec.norm();
    if (angle < 1e-12) {
      return Quaternion{1.0, rotvec.x * 0.5, rotvec.y * 0.5, rotvec.z * 0.5}.canonical();
    }
    const double s = std::sin(angle * 0.5) / angle;
    return {std::cos(angle * 0.5), rotvec.x * s, rotvec.y * s, rotvec.z * s};
  }
};

// ============================================================================
// Euler angles
// ============================================================================
struct EulerAngles {
  double x{0.0};  // roll
  double y{0.0};  // pitch
  double z{0.0};  // yaw
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

enum class EulerOrder {
  zyx,  // intrinsic Z-Y-X, R = Rz * Ry * Rx (canonical)
  xyz,  // intrinsic X-Y-Z, R = Rx * Ry * Rz
};

inline Quaternion axis_rotation(int axis, double angle) {
  const double s = std::sin(angle * 0.5), c = std::cos(angle * 0.5);
  switch (axis) {
    case 0: return {c, s, 0.0, 0.0};
    case 1: return {c, 0.0, s, 0.0};
    default: return {c, 0.0, 0.0, s};
  }
}

inline Quaternion quaternion_from_euler(const EulerAngles& e, EulerOrder order = EulerOrder::zyx) {
  const Quaternion qx = axis_rotation(0, e.x), qy = axis_rotation(1, e.y), qz = axis_rotation(2, e.z);
  const Quaternion q = order == EulerOrder::zyx ? qz * qy * qx : qx * qy * qz;
  return q.canonical();
}

// Inverse of the Z-Y-X composition. Pitch is returned in [-pi/2, pi/2].
inline EulerAngles euler_from_quaternion(const Quaternion& q) {
  const Mat3 m = q.to_matrix();
  const double sp = std::clamp(-m[2][0], -1.0, 1.0);
  EulerAngles e;
  e.y = std::asin(sp);
  if (std::abs(sp) < 1.0 - 1e-12) {
    e.x = std::atan2(m[2][1], m[2][2]);
    e.z = std::atan2(m[1][0], m[0][0]);
  } else {
    // gimbal lock: fold roll into yaw
    e.x = 0.0;
    e.z = std::atan2(-m[0][1], m[1][1]);
  }
  return e;
}

// Maps an angle onto [-pi, pi].
inline double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

// ============================================================================
// Pose
// ============================================================================
struct Pose {
  Vec3 position;
  Quaternion orientation;

  EulerAngles euler() const { return euler_from_quaternion(orientation); }
  bool operator==(const Pose&) const = default;
};

// Orientation as delivered by a data source, before canonicalization.
struct RawPose {
  Vec3 position;
  std::variant<EulerAngles, Quaternion> orientation{EulerAngles{}};
  EulerOrder euler_order{EulerOrder::zyx};
};

inline Pose canonicalize_pose(const RawPose& raw) {
  if (!raw.position.finite()) throw InvalidPose("non-finite position component");
  Quaternion q;
  if (const auto* e = std::get_if<EulerAngles>(&raw.orientation)) {
    if (!e->finite()) throw InvalidPose("non-finite Euler angle");
    q = quaternion_from_euler(*e, raw.euler_order);
  } else {
    const auto& in = std::get<Quaternion>(raw.orientation);
    if (!in.finite()) throw InvalidPose("non-finite quaternion component");
    if (in.norm() == 0.0) throw InvalidPose("zero quaternion");
    q = in.canonical();
  }
  return Pose{raw.position, q};
}

inline Pose make_pose(const Vec3& position, const EulerAngles& euler) {
  return canonicalize_pose(RawPose{position, euler});
}

// ============================================================================
// Frustum / CellGrid / CellSet
// ============================================================================
struct Frustum {
  double horizontal_fov{std::numbers::pi / 2.0};
  double vertical_fov{std::numbers::pi / 2.0};
  double near{0.05};
  double far{100.0};

  void validate() const {
    if (!(near > 0.0 && near < far)) throw InvalidParameter("frustum requires 0 < near < far");
    if (!(horizontal_fov > 0.0 && horizontal_fov < std::numbers::pi) ||
        !(vertical_fov > 0.0 && vertical_fov < std::numbers::pi))
      throw InvalidParameter("frustum fov must lie in (0, pi)");
  }
};

struct Aabb {
  Vec3 min;
  Vec3 max;
};

struct CellIndex {
  int i{0};
  int j{0};
  int k{0};
  constexpr auto operator<=>(const CellIndex&) const = default;
};

class CellGrid {
public:
  CellGrid() = default;
  CellGrid(Aabb bounds, std::array<int, 3> dims) : bounds_(bounds), dims_(dims) {
    if (dims_[0] <= 0 || dims_[1] <= 0 || dims_[2] <= 0)
      throw InvalidParameter("cell grid dims must be strictly positive");
    if (!(bounds_.min.x < bounds_.max.x && bounds_.min.y < bounds_.max.y &&
          bounds_.min.z < bounds_.max.z))
      throw InvalidParameter("cell grid bounds must have min < max on every axis");
  }

  const Aabb& bounds() const { return bounds_; }
  const std::array<int, 3>& dims() const { return dims_; }
  int cell_count() const { return dims_[0] * dims_[1] * dims_[2]; }

  Vec3 cell_size() const {
    return {(bounds_.max.x - bounds_.min.x) / dims_[0], (bounds_.max.y - bounds_.min.y) / dims_[1],
            (bounds_.max.z - bounds_.min.z) / dims_[2]};
  }

  int linear(const CellIndex& c) const { return (c.i * dims_[1] + c.j) * dims_[2] + c.k; }
  CellIndex index(int linear) const {
    return {linear / (dims_[1] * dims_[2]), (linear / dims_[2]) % dims_[1], linear % dims_[2]};
  }

  Aabb cell_box(const CellIndex& c) const {
    const Vec3 s = cell_size();
    const Vec3 lo{bounds_.min.x + s.x * c.i, bounds_.min.y + s.y * c.j, bounds_.min.z + s.z * c.k};
    return {lo, lo + s};
  }

  Vec3 cell_center(const CellIndex& c) const {
    const Vec3 s = cell_size();
    return {bounds_.min.x + s.x * (c.i + 0.5), bounds_.min.y + s.y * (c.j + 0.5),
            bounds_.min.z + s.z * (c.k + 0.5)};
  }

private:
  Aabb bounds_{{-0.5, -0.5, 0.0}, {0.5, 0.5, 2.0}};
  std::array<int, 3> dims_{4, 4, 2};
};

// Sorted, duplicate-free set of cell indices.
class CellSet {
public:
  CellSet() = default;
  explicit CellSet(std::vector<CellIndex> members) : members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  }

  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  bool contains(const CellIndex& c) const {
    return std::binary_search(members_.begin(), members_.end(), c);
  }
  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }
  const std::vector<CellIndex>& members() const { return members_; }
  bool operator==(const CellSet&) const = default;

  std::size_t intersection_size(const CellSet& o) const {
    std::size_t n = 0;
    auto a = members_.begin();
    auto b = o.members_.begin();
    while (a != members_.end() && b != o.members_.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        ++n;
        ++a;
        ++b;
      }
    }
    return n;
  }

  bool is_subset_of(const CellSet& o) const { return intersection_size(o) == size(); }

private:
  std::vector<CellIndex> members_;
};

// ============================================================================
// Visibility
// ============================================================================
enum class Occlusion : bool { off = false, on = true };

struct ViewConfig {
  Frustum frustum;
  CellGrid grid;
  Occlusion occlusion{Occlusion::on};
};

struct Plane {
  Vec3 normal;  // points into the frustum
  double offset{0.0};
  double signed_distance(const Vec3& p) const { return normal.dot(p) + offset; }
};

// The six inward-facing frustum planes in world coordinates.
inline std::array<Plane, 6> frustum_planes(const Pose& pose, const Frustum& fr) {
  const Mat3 r = pose.orientation.to_matrix();
  const double sh = std::sin(fr.horizontal_fov * 0.5), ch = std::cos(fr.horizontal_fov * 0.5);
  const double sv = std::sin(fr.vertical_fov * 0.5), cv = std::cos(fr.vertical_fov * 0.5);
  const std::array<Vec3, 6> body{{{1.0, 0.0, 0.0},    // near
                                  {-1.0, 0.0, 0.0},   // far
                                  {sh, -ch, 0.0},     // left
                                  {sh, ch, 0.0},      // right
                                  {sv, 0.0, -cv},     // top
                                  {sv, 0.0, cv}}};    // bottom
  std::array<Plane, 6> planes;
  for (std::size_t p = 0; p < 6; ++p) {
    const Vec3 n = r * body[p];
    planes[p] = Plane{n, -n.dot(pose.position)};
  }
  planes[0].offset -= fr.near;
  planes[1].offset += fr.far;
  return planes;
}

// Open segment (from, to) against a closed box.
inline bool segment_hits_box(const Vec3& from, const Vec3& to, const Aabb& box) {
  const Vec3 d = to - from;
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < 3; ++a) {
    const double o = from[a], da = d[a], lo = box.min[a], hi = box.max[a];
    if (da == 0.0) {
      if (o < lo || o > hi) return false;
      continue;
    }
    double t1 = (lo - o) / da, t2 = (hi - o) / da;
    if (t1 > t2) std::swap(t1, t2);
    t_enter = std::max(t_enter, t1);
    t_exit = std::min(t_exit, t2);
  }
  return t_enter <= t_exit && t_exit > 0.0 && t_enter < 1.0;
}

// Cells whose center lies inside the frustum; with occlusion on, cells hidden
// behind a strictly nearer cell's box are removed.
inline CellSet visible_cells(const Pose& pose, const Frustum& frustum, const CellGrid& grid,
                             Occlusion occlusion) {
  const auto planes = frustum_planes(pose, frustum);
  const int n = grid.cell_count();

  struct Entry {
    CellIndex index;
    Vec3 center;
    double distance;
    bool in_frustum;
  };
  std::vector<Entry> cells;
  cells.reserve(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) {
    const CellIndex c = grid.index(l);
    const Vec3 center = grid.cell_center(c);
    bool inside = true;
    for (const Plane& p : planes) {
      if (p.signed_distance(center) < 0.0) {
        inside = false;
        break;
      }
    }
    cells.push_back({c, center, (center - pose.position).norm(), inside});
  }

  std::vector<CellIndex> out;
  if (occlusion == Occlusion::off) {
    for (const Entry& e : cells)
      if (e.in_frustum) out.push_back(e.index);
    return CellSet(std::move(out));
  }

  std::vector<const Entry*> by_distance;
  by_distance.reserve(cells.size());
  for (const Entry& e : cells) by_distance.push_back(&e);
  std::stable_sort(by_distance.begin(), by_distance.end(),
                   [](const Entry* a, const Entry* b) { return a->distance < b->distance; });

  for (const Entry& e : cells) {
    if (!e.in_frustum) continue;
    bool occluded = false;
    for (const Entry* other : by_distance) {
      if (other->distance >= e.distance) break;
      if (segment_hits_box(pose.position, e.center, grid.cell_box(other->index))) {
        occluded = true;
        break;
      }
    }
    if (!occluded) out.push_back(e.index);
  }
  return CellSet(std::move(out));
}

inline CellSet visible_cells(const Pose& pose, const ViewConfig& view) {
  return visible_cells(pose, view.frustum, view.grid, view.occlusion);
}

// Intersection over union; two empty sets count as perfect alignment.
inline double iou(const CellSet& a, const CellSet& b) {
  const std::size_t inter = a.intersection_size(b);
  const std::size_t uni = a.size() + b.size() - inter;
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline double vchr(const Pose& actual, const Pose& predicted, const Frustum& frustum,
                   const CellGrid& grid, Occlusion occlusion) {
  return iou(visible_cells(actual, frustum, grid, occlusion),
             visible_cells(predicted, frustum, grid, occlusion));
}

}  // namespace marqoe
