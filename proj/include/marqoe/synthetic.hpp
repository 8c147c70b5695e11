// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Seeded synthetic 6-DoF viewer traces. A viewer stands near the content
// volume and looks at it; head motion is an offset on top of the look-at
// direction. Used by the tests and as a stand-in dataset.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marqoe/geometry.hpp"
#include "marqoe/random.hpp"
#include "marqoe/trace.hpp"

namespace marqoe {

enum class MotionKind {
  stationary,    // fixed pose
  linear,        // constant velocity, fixed orientation
  accelerating,  // constant acceleration, fixed orientation
  random_walk,   // smooth OU head rotation + body sway
  drifting,      // random walk whose intensity ramps up over the trace
  periodic,      // sinusoidal head sweep
  growing_sweep, // periodic sweep whose amplitude ramps up over the trace
};

inline std::string to_string(MotionKind k) {
  switch (k) {
    case MotionKind::stationary: return "stationary";
    case MotionKind::linear: return "linear";
    case MotionKind::accelerating: return "accelerating";
    case MotionKind::random_walk: return "random_walk";
    case MotionKind::drifting: return "drifting";
    case MotionKind::periodic: return "periodic";
    case MotionKind::growing_sweep: return "growing_sweep";
  }
  return "?";
}

struct MotionSpec {
  std::string user_id{"U"};
  MotionKind kind{MotionKind::random_walk};
  double duration{12.0};
  double fps{30.0};
  std::uint64_t seed{1};
  double start_time{0.0};

  Vec3 start{2.0, 0.0, 1.6};
  Vec3 target{0.0, 0.0, 1.0};

  double angular_sigma{0.6};  // rad/s, stationary std of angular velocity
  double angular_tau{0.4};    // s, angular velocity correlation time
  double angular_pull{2.0};   // s, time constant pulling the head back to the content
  double linear_sigma{0.05};  // m/s
  double linear_tau{1.0};     // s
  double drift{3.0};          // noise scale grows to (1 + drift) at the end

  Vec3 velocity;
  Vec3 acceleration;

  double period{1.0};
  double amplitude{0.35};  // rad
};

inline EulerAngles look_at(const Vec3& from, const Vec3& to) {
  const Vec3 d = to - from;
  const double horiz = std::hypot(d.x, d.y);
  return {0.0, -std::atan2(d.z, horiz), std::atan2(d.y, d.x)};
}

inline UserTrace generate_trace(const MotionSpec& spec) {
  UserTrace trace;
  trace.user_id = spec.user_id;
  trace.fps = spec.fps;
  const auto n = static_cast<std::size_t>(std::llround(spec.duration * spec.fps));
  const double dt = 1.0 / spec.fps;
  trace.frames.reserve(n);

  Rng rng(spec.seed);
  const EulerAngles base = look_at(spec.start, spec.target);

  // OU state
  Vec3 omega;   // roll/pitch/yaw rates
  Vec3 offset;  // roll/pitch/yaw offsets
  Vec3 vel;
  Vec3 pos = spec.start;
  const double a_keep = std::exp(-dt / spec.angular_tau);
  const double a_kick = spec.angular_sigma * std::sqrt(1.0 - a_keep * a_keep);
  const double l_keep = std::exp(-dt / spec.linear_tau);
  const double l_kick = spec.linear_sigma * std::sqrt(1.0 - l_keep * l_keep);
  constexpr double sway_pull = 3.0;   // s

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    Vec3 p = spec.start;
    EulerAngles e = base;
    switch (spec.kind) {
      case MotionKind::stationary: break;
      case MotionKind::linear: p = spec.start + spec.velocity * t; break;
      case MotionKind::accelerating:
        p = spec.start + spec.velocity * t + spec.acceleration * (0.5 * t * t);
        break;
      case MotionKind::periodic:
      case MotionKind::growing_sweep: {
        const double amp =
            spec.amplitude * (spec.kind == MotionKind::growing_sweep ? 1.0 + spec.drift * t / spec.duration : 1.0);
        const double phase = 2.0 * std::numbers::pi * t / spec.period;
        e.z += amp * std::sin(phase);
        e.y += 0.4 * amp * std::sin(2.0 * phase);
        break;
      }
      case MotionKind::random_walk:
      case MotionKind::drifting: {
        const double scale =
            spec.kind == MotionKind::drifting ? 1.0 + spec.drift * t / spec.duration : 1.0;
        if (k > 0) {
          omega = Vec3{omega.x * a_keep + 0.3 * a_kick * scale * rng.normal(),
                       omega.y * a_keep + 0.6 * a_kick * scale * rng.normal(),
                       omega.z * a_keep + a_kick * scale * rng.normal()};
          offset += (omega - offset / spec.angular_pull) * dt;
          vel = Vec3{vel.x * l_keep + l_kick * scale * rng.normal(),
                     vel.y * l_keep + l_kick * scale * rng.normal(),
                     vel.z * l_keep + 0.3 * l_kick * scale * rng.normal()};
          pos += (vel - (pos - spec.start) / sway_pull) * dt;
        }
        p = pos;
        e = EulerAngles{base.x + offset.x, base.y + offset.y, base.z + offset.z};
        break;
      }
    }
    trace.frames.push_back({spec.start_time + t, make_pose(p, e)});
  }
  return trace;
}

// ============================================================================
// Bundled scenarios
// ============================================================================

// Content volume used by the synthetic scenarios: a 1 m x 1 m footprint, 2 m
// tall, standing on the floor at the origin.
inline Aabb synthetic_content_bounds() { return {{-0.5, -0.5, 0.0}, {0.5, 0.5, 2.0}}; }

// Viewer on a circle around the content, close enough that the content
// overfills the default frustum and head motion changes the visible set.
inline MotionSpec viewer_at(std::string id, MotionKind kind, double azimuth, std::uint64_t seed,
                            double radius = 1.2) {
  MotionSpec s;
  s.user_id = std::move(id);
  s.kind = kind;
  s.seed = seed;
  s.start = {radius * std::cos(azimuth), radius * std::sin(azimuth), 1.6};
  s.target = {0.0, 0.0, 1.0};
  return s;
}

// Five viewers with mixed mobility: P02 and P03 stand almost still, P01,
// P04 and P05 sweep their heads back and forth at different rates.
inline std::vector<MotionSpec> mixed_mobility_specs(std::uint64_t seed = 7) {
  struct Row {
    MotionKind kind;
    double angular_sigma, period, amplitude;
  };
  const Row rows[5] = {{MotionKind::periodic, 0.0, 1.7, 0.8},
                       {MotionKind::random_walk, 0.1, 0.0, 0.0},
                       {MotionKind::random_walk, 0.4, 0.0, 0.0},
                       {MotionKind::periodic, 0.0, 1.3, 0.4},
                       {MotionKind::periodic, 0.0, 1.1, 0.7}};
  std::vector<MotionSpec> specs;
  for (int u = 0; u < 5; ++u) {
    char id[16];
    std::snprintf(id, sizeof id, "P%02d", u + 1);
    MotionSpec s = viewer_at(id, rows[u].kind, 0.7 * u, seed * 100 + static_cast<std::uint64_t>(u));
    s.angular_sigma = rows[u].angular_sigma;
    s.linear_sigma = 0.02;
    s.period = rows[u].period;
    s.amplitude = rows[u].amplitude;
    specs.push_back(s);
  }
  return specs;
}

// A population of `n` random-walk viewers with seeded motion intensities.
inline std::vector<MotionSpec> population_specs(int n, std::uint64_t seed = 11) {
  Rng rng(seed);
  std::vector<MotionSpec> specs;
  for (int u = 0; u < n; ++u) {
    char id[16];
    std::snprintf(id, sizeof id, "P%02d", u + 1);
    MotionSpec s = viewer_at(id, MotionKind::random_walk, rng.uniform(0.0, 2.0 * std::numbers::pi),
                             seed * 1000 + static_cast<std::uint64_t>(u));
    s.angular_sigma = rng.uniform(0.05, 2.0);
    s.linear_sigma = rng.uniform(0.01, 0.15);
    specs.push_back(s);
  }
  return specs;
}

// Viewers whose head sweeps widen over the trace, so QoE decays from epoch
// to epoch. Sweep periods divide the 1 s epoch, so every epoch sees whole
// cycles and the decay is smooth.
inline std::vector<MotionSpec> drifting_specs(int n = 4, std::uint64_t seed = 23) {
  Rng rng(seed);
  std::vector<MotionSpec> specs;
  for (int u = 0; u < n; ++u) {
    char id[16];
    std::snprintf(id, sizeof id, "D%02d", u + 1);
    MotionSpec s = viewer_at(id, MotionKind::growing_sweep, 1.3 * u, seed * 100 + static_cast<std::uint64_t>(u));
    s.period = u % 2 == 0 ? 0.5 : 1.0;
    s.amplitude = rng.uniform(0.1, 0.2);
    s.drift = 4.0;
    specs.push_back(s);
  }
  return specs;
}

// Viewer walking sideways at constant speed with a fixed gaze; a last-value
// predictor then misses by the same offset (velocity * lookahead) every frame.
inline MotionSpec constant_offset_spec(std::uint64_t seed = 31) {
  MotionSpec s = viewer_at("C01", MotionKind::linear, 0.0, seed);
  s.velocity = {0.0, 0.3, 0.0};
  return s;
}

// Writes one canonical CSV per viewer plus `manifest.json`; returns the
// manifest path.
inline fs::path write_synthetic_dataset(const fs::path& dir, const std::vector<MotionSpec>& specs,
                                        const std::string& dataset = "synthetic",
                                        Aabb bounds = synthetic_content_bounds()) {
  fs::create_directories(dir);
  DatasetManifest m;
  m.dataset = dataset;
  m.fps = specs.empty() ? 30.0 : specs.front().fps;
  m.grid_bounds = bounds;
  for (const auto& s : specs) {
    const fs::path file = dir / (s.user_id + ".csv");
    write_trace_file(generate_trace(s), file);
    m.entries.push_back({s.user_id, file, RotationConvention::quaternion_wxyz, bounds});
  }
  const fs::path manifest = dir / "manifest.json";
  std::ofstream out(manifest);
  if (!out) throw IoError("cannot write " + manifest.string());
  out << manifest_to_json(m, dir).dump(2) << '\n';
  return manifest;
}

}  // namespace marqoe
