// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference implementations shared by the unit and acceptance
// tests. They use plain arrays and explicit axis matrices on purpose, so they
// share no code with the library beyond the input values.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <set>
#include <tuple>
#include <vector>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

using V3 = std::array<double, 3>;
using M3 = std::array<V3, 3>;
using Cell = std::tuple<int, int, int>;

inline M3 mul(const M3& a, const M3& b) {
  M3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

// R = Rz(yaw) * Ry(pitch) * Rx(roll)
inline M3 rotation_zyx(double roll, double pitch, double yaw) {
  const double cx = std::cos(roll), sx = std::sin(roll);
  const double cy = std::cos(pitch), sy = std::sin(pitch);
  const double cz = std::cos(yaw), sz = std::sin(yaw);
  const M3 rx{{{1, 0, 0}, {0, cx, -sx}, {0, sx, cx}}};
  const M3 ry{{{cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy}}};
  const M3 rz{{{cz, -sz, 0}, {sz, cz, 0}, {0, 0, 1}}};
  return mul(rz, mul(ry, rx));
}

// Rotation matrix of a unit quaternion given as (x, y, z, w).
inline M3 rotation_from_xyzw(double x, double y, double z, double w) {
  const double n = std::sqrt(x * x + y * y + z * z + w * w);
  x /= n, y /= n, z /= n, w /= n;
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

struct Camera {
  V3 position{};
  M3 rotation{};  // columns: forward (+x), left (+y), up (+z)
  double hfov{pi / 2}, vfov{pi / 2}, near{0.05}, far{100.0};
};

struct Grid {
  V3 lo{-0.5, -0.5, 0.0};
  V3 hi{0.5, 0.5, 2.0};
  std::array<int, 3> dims{4, 4, 2};

  V3 size() const { return {(hi[0] - lo[0]) / dims[0], (hi[1] - lo[1]) / dims[1], (hi[2] - lo[2]) / dims[2]}; }
  std::pair<V3, V3> box(const Cell& c) const {
    const V3 s = size();
    const V3 a{lo[0] + s[0] * std::get<0>(c), lo[1] + s[1] * std::get<1>(c), lo[2] + s[2] * std::get<2>(c)};
    return {a, {a[0] + s[0], a[1] + s[1], a[2] + s[2]}};
  }
  V3 center(const Cell& c) const {
    const auto [a, b] = box(c);
    return {(a[0] + b[0]) / 2, (a[1] + b[1]) / 2, (a[2] + b[2]) / 2};
  }
  std::vector<Cell> cells() const {
    std::vector<Cell> out;
    for (int i = 0; i < dims[0]; ++i)
      for (int j = 0; j < dims[1]; ++j)
        for (int k = 0; k < dims[2]; ++k) out.emplace_back(i, j, k);
    return out;
  }
};

// Point-in-frustum in camera coordinates: d = R^T (c - p).
inline bool in_frustum(const Camera& cam, const V3& c) {
  V3 d{};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) d[i] += cam.rotation[k][i] * (c[k] - cam.position[k]);
  return d[0] >= cam.near && d[0] <= cam.far && std::abs(d[1]) <= d[0] * std::tan(cam.hfov / 2) &&
         std::abs(d[2]) <= d[0] * std::tan(cam.vfov / 2);
}

// Liang-Barsky: does the open segment (a, b) touch the closed box?
inline bool segment_touches(const V3& a, const V3& b, const V3& lo, const V3& hi) {
  double s0 = -INFINITY, s1 = INFINITY;
  for (int ax = 0; ax < 3; ++ax) {
    const double d = b[ax] - a[ax];
    if (d == 0.0) {
      if (a[ax] < lo[ax] || a[ax] > hi[ax]) return false;
      continue;
    }
    const double ta = (lo[ax] - a[ax]) / d, tb = (hi[ax] - a[ax]) / d;
    s0 = std::max(s0, std::min(ta, tb));
    s1 = std::min(s1, std::max(ta, tb));
  }
  return s0 <= s1 && s1 > 0.0 && s0 < 1.0;
}

inline double dist(const V3& a, const V3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

inline std::set<Cell> visible(const Camera& cam, const Grid& g, bool occlusion) {
  std::set<Cell> out;
  const auto all = g.cells();
  for (const auto& c : all) {
    const V3 ctr = g.center(c);
    if (!in_frustum(cam, ctr)) continue;
    bool hidden = false;
    if (occlusion) {
      const double dc = dist(cam.position, ctr);
      for (const auto& o : all) {
        if (!(dist(cam.position, g.center(o)) < dc)) continue;
        const auto [lo, hi] = g.box(o);
        if (segment_touches(cam.position, ctr, lo, hi)) {
          hidden = true;
          break;
        }
      }
    }
    if (!hidden) out.insert(c);
  }
  return out;
}

inline double iou(const std::set<Cell>& a, const std::set<Cell>& b) {
  std::size_t inter = 0;
  for (const auto& c : a) inter += b.count(c);
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// A seeded random pose: half of them look roughly at the content, the rest
// point anywhere. Angles are (roll, pitch, yaw).
struct RandomPose {
  V3 position;
  V3 angles;
};

inline RandomPose random_pose(std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomPose p;
  const double r = 0.8 + 3.0 * u(g), az = 2 * pi * u(g);
  p.position = {r * std::cos(az), r * std::sin(az), 0.2 + 2.5 * u(g)};
  if (u(g) < 0.5) {
    const double dx = -p.position[0], dy = -p.position[1], dz = 1.0 - p.position[2];
    p.angles = {0.3 * (u(g) - 0.5), -std::atan2(dz, std::hypot(dx, dy)) + 0.6 * (u(g) - 0.5),
                std::atan2(dy, dx) + 1.2 * (u(g) - 0.5)};
  } else {
    p.angles = {2 * pi * (u(g) - 0.5), pi * (u(g) - 0.5), 2 * pi * (u(g) - 0.5)};
  }
  return p;
}

inline Camera camera_of(const RandomPose& p) {
  Camera c;
  c.position = p.position;
  c.rotation = rotation_zyx(p.angles[0], p.angles[1], p.angles[2]);
  return c;
}

// Closed-form D/G/1 delay, written out directly.
inline double dg1_delay(double rate, double es, double es2) {
  return es + rate * es2 / (2.0 * (1.0 - rate * es));
}

// Least bandwidth meeting the deadline at `rate` for a constant channel:
// solve the delay equation for the service time s, then invert
// s = alpha / (b log2(1+snr)).
inline double closed_form_min_bandwidth(double rate, double alpha, double T, double snr) {
  // s + rate s^2 / (2 (1 - rate s)) = T
  // => 2 s (1 - rate s) + rate s^2 = 2 T (1 - rate s)
  // => -rate s^2 + (2 + 2 T rate) s - 2 T = 0
  const double a = -rate, b = 2.0 + 2.0 * T * rate, c = -2.0 * T;
  const double disc = std::sqrt(b * b - 4 * a * c);
  const double r1 = (-b + disc) / (2 * a), r2 = (-b - disc) / (2 * a);
  // the admissible root is the one with rate s < 1
  const double s = (r1 > 0 && rate * r1 < 1) ? r1 : r2;
  return alpha / (s * std::log2(1.0 + snr));
}

}  // namespace oracle
