// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Donor/receiver bandwidth reallocation and the provisioning objective.
//
// Users predicted above h_hig donate down to the cheapest lower rate tier that
// still keeps them near h_tar; users predicted below h_tar receive the pooled
// surplus in proportion to their QoE deficit. Single pass, no re-balancing.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "marqoe/error.hpp"
#include "marqoe/network.hpp"

namespace marqoe {

enum class Utility { identity, log1p };

struct AllocationParams {
  double target_qoe{0.7};   // h_tar
  double high_qoe{0.85};    // h_hig
  double total_bandwidth{25.0e6};
  double tradeoff_weight{0.0};  // per Hz
  Utility utility{Utility::identity};
  double search_tolerance{0.02};

  void validate() const {
    if (!(0.0 <= target_qoe && target_qoe < high_qoe && high_qoe <= 1.0))
      throw InvalidParameter("thresholds need 0 <= h_tar < h_hig <= 1");
    if (!(total_bandwidth > 0.0)) throw InvalidParameter("total bandwidth must be > 0");
    if (!(tradeoff_weight >= 0.0)) throw InvalidParameter("tradeoff weight must be >= 0");
    if (!(search_tolerance >= 0.0)) throw InvalidParameter("search tolerance must be >= 0");
  }
};

inline double utility(double h, Utility u) { return u == Utility::identity ? h : std::log1p(h); }

// Sum of utilities minus the bandwidth price.
inline double objective(std::span<const double> bandwidths, std::span<const double> qoe,
                        const AllocationParams& params) {
  if (bandwidths.size() != qoe.size())
    throw InvalidInput("objective: " + std::to_string(bandwidths.size()) + " bandwidths vs " +
                       std::to_string(qoe.size()) + " QoE values");
  double u = 0.0, b = 0.0;
  for (double h : qoe) u += utility(h, params.utility);
  for (double x : bandwidths) b += x;
  return u - params.tradeoff_weight * b;
}

// ============================================================================
// Feasibility
// ============================================================================
struct Violation {
  enum class Kind {
    budget,     // total bandwidth above B_total
    delay,      // active link whose delay exceeds T (or is unstable)
    idle_link,  // notice only: link cannot sustain any sampling rate
  };
  Kind kind;
  std::string user_id;  // empty for budget
  std::string message;

  bool is_notice() const { return kind == Kind::idle_link; }
};

inline std::vector<Violation> check_feasibility(std::span<const double> bandwidths,
                                                std::span<const LinkState> links,
                                                const AllocationParams& params, const QueueParams& q) {
  std::vector<Violation> out;
  const double total = std::accumulate(bandwidths.begin(), bandwidths.end(), 0.0);
  if (total > params.total_bandwidth)
    out.push_back({Violation::Kind::budget, "",
                   "total bandwidth " + std::to_string(total) + " Hz exceeds " +
                       std::to_string(params.total_bandwidth) + " Hz"});
  for (const auto& l : links) {
    if (l.sampling_rate <= 0.0) {
      out.push_back({Violation::Kind::idle_link, l.user_id, l.user_id + ": link sustains no sampling rate"});
    } else if (!(l.delay <= q.max_delay)) {
      out.push_back({Violation::Kind::delay, l.user_id,
                     l.user_id + ": delay " + std::to_string(l.delay) + " s exceeds " +
                         std::to_string(q.max_delay) + " s"});
    }
  }
  return out;
}

inline bool is_feasible(std::span<const Violation> violations) {
  return std::all_of(violations.begin(), violations.end(), [](const Violation& v) { return v.is_notice(); });
}

// ============================================================================
// Reallocation
// ============================================================================

// Predicted QoE of a user at a candidate bandwidth.
template <class F>
concept QoEPredictor = requires(F f, const std::string& user, double bandwidth) {
  { f(user, bandwidth) } -> std::convertible_to<double>;
};

// Rate tiers (ascending bandwidth) available to a user.
template <class F>
concept TierLookup = requires(F f, const std::string& user) {
  { f(user) } -> std::convertible_to<std::span<const RateTier>>;
};

enum class Role { untouched, donor, receiver };

inline std::string to_string(Role r) {
  switch (r) {
    case Role::donor: return "donor";
    case Role::receiver: return "receiver";
    default: return "untouched";
  }
}

struct UserBandwidth {
  std::string user_id;
  double bandwidth{0.0};
};

struct UserAllocation {
  std::string user_id;
  double old_bandwidth{0.0};
  double new_bandwidth{0.0};
  double predicted_before{0.0};
  double predicted_after{0.0};
  Role role{Role::untouched};
  double released{0.0};  // donors: b - b'
  double granted{0.0};   // receivers
  double deficit{0.0};   // receivers: h_tar - predicted
};

struct AllocationResult {
  std::vector<UserAllocation> users;  // ordered by user id
  double surplus{0.0};                // B_sur
  double total_deficit{0.0};          // D_all

  std::vector<double> new_bandwidths() const {
    std::vector<double> b;
    for (const auto& u : users) b.push_back(u.new_bandwidth);
    return b;
  }
  std::vector<std::string> with_role(Role r) const {
    std::vector<std::string> ids;
    for (const auto& u : users)
      if (u.role == r) ids.push_back(u.user_id);
    return ids;
  }
  const UserAllocation& at(const std::string& id) const {
    for (const auto& u : users)
      if (u.user_id == id) return u;
    throw NotFound("user " + id + " not in allocation");
  }
};

// Highest tier rate sustainable at `bandwidth`, or 0.
inline double tier_rate_at(std::span<const RateTier> tiers, double bandwidth) {
  double rate = 0.0;
  for (const auto& t : tiers)
    if (t.min_bandwidth <= bandwidth) rate = std::max(rate, t.rate);
  return rate;
}

// Cheapest tier below the user's current one whose predicted QoE stays
// within the tolerance of h_tar; the current bandwidth when none qualifies.
template <QoEPredictor Predict>
double donor_reduced_bandwidth(const std::string& user, double current_bandwidth,
                               std::span<const RateTier> tiers, const AllocationParams& params,
                               Predict&& predict) {
  const double current_rate = tier_rate_at(tiers, current_bandwidth);
  for (const auto& t : tiers) {  // ascending bandwidth: first hit is minimal
    if (t.rate >= current_rate || t.min_bandwidth >= current_bandwidth) continue;
    if (predict(user, t.min_bandwidth) >= params.target_qoe - params.search_tolerance)
      return t.min_bandwidth;
  }
  return current_bandwidth;
}

template <QoEPredictor Predict, TierLookup Tiers>
AllocationResult reallocate(std::span<const UserBandwidth> current, const AllocationParams& params,
                            Tiers&& tiers_of, Predict&& predict) {
  params.validate();
  double total = 0.0;
  for (const auto& u : current) {
    if (!(u.bandwidth >= 0.0)) throw InvalidInput(u.user_id + ": negative bandwidth");
    total += u.bandwidth;
  }
  if (total > params.total_bandwidth * (1.0 + 1e-9))
    throw InvalidInput("current allocation exceeds the total bandwidth");

  AllocationResult res;
  for (const auto& u : current) {
    UserAllocation a;
    a.user_id = u.user_id;
    a.old_bandwidth = a.new_bandwidth = u.bandwidth;
    res.users.push_back(std::move(a));
  }
  std::sort(res.users.begin(), res.users.end(),
            [](const UserAllocation& a, const UserAllocation& b) { return a.user_id < b.user_id; });
  for (std::size_t i = 1; i < res.users.size(); ++i)
    if (res.users[i].user_id == res.users[i - 1].user_id)
      throw InvalidInput("duplicate user " + res.users[i].user_id);

  for (auto& a : res.users) a.predicted_before = predict(a.user_id, a.old_bandwidth);

  for (auto& a : res.users) {
    if (a.predicted_before > params.high_qoe) {
      const std::span<const RateTier> tiers = tiers_of(a.user_id);
      a.role = Role::donor;
      a.new_bandwidth = donor_reduced_bandwidth(a.user_id, a.old_bandwidth, tiers, params, predict);
      a.released = a.old_bandwidth - a.new_bandwidth;
      res.surplus += a.released;
    } else if (a.predicted_before < params.target_qoe) {
      a.role = Role::receiver;
      a.deficit = params.target_qoe - a.predicted_before;
      res.total_deficit += a.deficit;
    }
  }

  if (res.total_deficit > 0.0 && res.surplus > 0.0) {
    for (auto& a : res.users) {
      if (a.role != Role::receiver) continue;
      a.granted = res.surplus * (a.deficit / res.total_deficit);
      a.new_bandwidth = a.old_bandwidth + a.granted;
    }
  }

  for (auto& a : res.users)
    a.predicted_after =
        a.new_bandwidth == a.old_bandwidth ? a.predicted_before : predict(a.user_id, a.new_bandwidth);
  return res;
}

}  // namespace marqoe
