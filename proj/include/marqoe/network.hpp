// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Uplink model: Shannon-rate link, D/G/1 mean-delay bound, and the mapping
// between allocated bandwidth and the largest sustainable frame sampling rate.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "marqoe/error.hpp"
#include "marqoe/random.hpp"

namespace marqoe {

enum class ChannelMode { constant, lognormal };

struct ChannelConfig {
  ChannelMode mode{ChannelMode::constant};
  double mean_snr{15.0};  // linear; lognormal mode centres the dB draw on it
  double shadowing_sigma_db{0.0};
  std::uint64_t seed{1};
  int mc_samples{4096};

  void validate() const {
    if (!(mean_snr > 0.0)) throw InvalidParameter("mean_snr must be > 0");
    if (!(shadowing_sigma_db >= 0.0)) throw InvalidParameter("shadowing sigma must be >= 0");
    if (mc_samples <= 0) throw InvalidParameter("mc_samples must be > 0");
  }
};

struct QueueParams {
  double frame_bits{1.0e6};  // bits per uploaded camera frame
  double max_delay{0.1};     // seconds

  void validate() const {
    if (!(frame_bits > 0.0) || !(max_delay > 0.0))
      throw InvalidParameter("frame_bits and max_delay must be > 0");
  }
};

struct ServiceMoments {
  double mean{0.0};           // E[S], seconds
  double second_moment{0.0};  // E[S^2], seconds^2
};

struct LinkState {
  std::string user_id;
  double bandwidth{0.0};
  double sampling_rate{0.0};  // 0 when the link carries no uploads
  double delay{0.0};          // +inf when the chosen rate is unstable
};

// Bits per second, base-2 logarithm.
inline double uplink_rate(double bandwidth, double snr) {
  if (!(bandwidth >= 0.0) || !(snr >= 0.0))
    throw InvalidParameter("uplink_rate needs bandwidth >= 0 and snr >= 0");
  return bandwidth * std::log2(1.0 + snr);
}

// Per-draw SNR of the lognormal shadowing process.
inline double shadowed_snr(const ChannelConfig& channel, Rng& rng) {
  return channel.mean_snr * std::pow(10.0, channel.shadowing_sigma_db * rng.normal() / 10.0);
}

inline ServiceMoments service_moments(double bandwidth, const ChannelConfig& channel,
                                      const QueueParams& q, int n_samples) {
  if (bandwidth < 0.0 || std::isnan(bandwidth)) throw InvalidParameter("negative bandwidth");
  if (bandwidth == 0.0) throw InfiniteServiceTime("zero bandwidth");
  if (channel.mode == ChannelMode::constant) {
    const double r = uplink_rate(bandwidth, channel.mean_snr);
    if (r == 0.0) throw InfiniteServiceTime("zero uplink rate");
    const double s = q.frame_bits / r;
    return {s, s * s};
  }
  if (n_samples <= 0) throw InvalidParameter("n_samples must be > 0");
  Rng rng(channel.seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double s = q.frame_bits / uplink_rate(bandwidth, shadowed_snr(channel, rng));
    sum += s;
    sum_sq += s * s;
  }
  return {sum / n_samples, sum_sq / n_samples};
}

inline ServiceMoments service_moments(double bandwidth, const ChannelConfig& channel,
                                      const QueueParams& q) {
  return service_moments(bandwidth, channel, q, channel.mc_samples);
}

// Mean sojourn time (wait + service) of the D/G/1 uplink queue.
inline double queue_delay(double rate, const ServiceMoments& m) {
  if (rate < 0.0 || std::isnan(rate)) throw InvalidParameter("negative sampling rate");
  const double rho = rate * m.mean;
  if (rho >= 1.0) throw Unstable("utilization " + std::to_string(rho) + " >= 1");
  return m.mean + rate * m.second_moment / (2.0 * (1.0 - rho));
}

inline bool rate_feasible(double rate, const ServiceMoments& m, const QueueParams& q) {
  return rate * m.mean < 1.0 && queue_delay(rate, m) <= q.max_delay;
}

// Divisors of the frame rate, descending; keeps resampled uploads frame-aligned.
inline std::vector<double> default_candidate_rates(int fps = 30) {
  std::vector<double> out;
  for (int d = fps; d >= 1; --d)
    if (fps % d == 0) out.push_back(static_cast<double>(d));
  return out;
}

inline std::optional<double> max_sampling_rate(double bandwidth, const ChannelConfig& channel,
                                               const QueueParams& q,
                                               std::span<const double> candidates) {
  if (candidates.empty()) throw InvalidParameter("empty candidate rate set");
  for (double c : candidates)
    if (!(c > 0.0)) throw InvalidParameter("candidate rates must be > 0");
  if (!(bandwidth > 0.0)) return std::nullopt;

  ServiceMoments m;
  try {
    m = service_moments(bandwidth, channel, q);
  } catch (const InfiniteServiceTime&) {
    return std::nullopt;
  }
  std::optional<double> best;
  for (double c : candidates)
    if ((!best || c > *best) && rate_feasible(c, m, q)) best = c;
  return best;
}

// Smallest bandwidth (to within `tolerance_hz`, rounded up) whose delay at
// `rate` respects the deadline. Delay is nonincreasing in bandwidth, so
// bisection over [0, ceiling] is valid.
inline double min_bandwidth_for_rate(double rate, const ChannelConfig& channel,
                                     const QueueParams& q, double ceiling_hz,
                                     double tolerance_hz = 1.0e3) {
  if (!(rate > 0.0)) throw InvalidParameter("rate must be > 0");
  auto feasible = [&](double b) {
    if (!(b > 0.0)) return false;
    try {
      return rate_feasible(rate, service_moments(b, channel, q), q);
    } catch (const InfiniteServiceTime&) {
      return false;
    }
  };
  if (!feasible(ceiling_hz))
    throw Infeasible("no bandwidth up to " + std::to_string(ceiling_hz) + " Hz sustains " +
                     std::to_string(rate) + " Hz");
  double lo = 0.0, hi = ceiling_hz;
  while (hi - lo > tolerance_hz) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

// A sampling-rate tier and the least bandwidth that sustains it.
struct RateTier {
  double rate{0.0};
  double min_bandwidth{0.0};
};

// Feasible tiers ordered by bandwidth (ascending); unreachable rates dropped.
inline std::vector<RateTier> rate_tiers(const ChannelConfig& channel, const QueueParams& q,
                                        std::span<const double> candidates, double ceiling_hz) {
  std::vector<RateTier> tiers;
  for (double c : candidates) {
    try {
      tiers.push_back({c, min_bandwidth_for_rate(c, channel, q, ceiling_hz)});
    } catch (const Infeasible&) {
    }
  }
  std::sort(tiers.begin(), tiers.end(), [](const RateTier& a, const RateTier& b) {
    return a.min_bandwidth < b.min_bandwidth || (a.min_bandwidth == b.min_bandwidth && a.rate < b.rate);
  });
  return tiers;
}

inline LinkState link_state_at_rate(std::string user_id, double bandwidth, double rate,
                                    const ChannelConfig& channel, const QueueParams& q) {
  LinkState s{std::move(user_id), bandwidth, rate, 0.0};
  if (rate <= 0.0) return s;
  try {
    s.delay = queue_delay(rate, service_moments(bandwidth, channel, q));
  } catch (const InfiniteServiceTime&) {
    s.delay = std::numeric_limits<double>::infinity();
  } catch (const Unstable&) {
    s.delay = std::numeric_limits<double>::infinity();
  }
  return s;
}

// Link operating at the largest feasible candidate rate (or idle).
inline LinkState make_link_state(std::string user_id, double bandwidth,
                                 const ChannelConfig& channel, const QueueParams& q,
                                 std::span<const double> candidates) {
  const auto rate = max_sampling_rate(bandwidth, channel, q, candidates);
  return link_state_at_rate(std::move(user_id), bandwidth, rate.value_or(0.0), channel, q);
}

}  // namespace marqoe
