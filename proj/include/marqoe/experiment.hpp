// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Epoch-by-epoch provisioning experiment.
//
// Epoch 0 only seeds the trailing-window forecast, so experiment epochs start
// at 1. In each epoch: forecast every user at the current allocation, run the
// donor/receiver pass (allocate mode), then evaluate realized QoE over the
// epoch at the current ("before") and new ("after") allocation. The current
// allocation is the initial split every epoch unless carry-over is enabled.

#pragma once

#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "marqoe/allocate.hpp"
#include "marqoe/config.hpp"
#include "marqoe/eval.hpp"
#include "marqoe/parallel.hpp"
#include "marqoe/predict.hpp"
#include "marqoe/simulation.hpp"

namespace marqoe {

struct ExperimentRecord {
  int epoch{0};
  std::string user;
  std::string method;
  double bandwidth{0.0};  // after reallocation
  double predicted{0.0};  // forecast at `bandwidth`
  double realized_before{0.0};
  double realized_after{0.0};
  Role role{Role::untouched};
  bool operator==(const ExperimentRecord&) const = default;
};

struct UserStats {
  std::string user;
  int epochs{0};
  double mean_before{0.0};
  double mean_after{0.0};
  int receiver_epochs{0};
  double receiver_mean_before{0.0};
  double receiver_mean_after{0.0};
  int donor_epochs{0};
  double donor_mean_after{0.0};
};

struct ExperimentSummary {
  std::string method;
  int users{0};
  int epochs{0};
  std::size_t records{0};
  double mean_before{0.0};
  double mean_after{0.0};
  double mse{0.0};                // predicted vs realized_after
  double category_accuracy{0.0};  // same pairs
  double objective{0.0};          // mean per-epoch objective at the new allocation
  double max_total_bandwidth{0.0};
  double final_total_bandwidth{0.0};
  int donor_events{0};
  int receiver_events{0};
  std::vector<UserStats> per_user;  // ordered by user id
};

struct ExperimentReport {
  std::vector<ExperimentRecord> records;  // epoch-major, users by id
  ExperimentSummary summary;
};

// Metrics over a record set; records of several methods are pooled.
inline ExperimentSummary summarize(const std::vector<ExperimentRecord>& records, const AllocationParams& params) {
  if (records.empty()) throw InvalidInput("empty report");
  ExperimentSummary s;
  s.method = records.front().method;
  s.records = records.size();

  std::vector<double> pred, real;
  std::map<std::string, UserStats> users;
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_epoch;
  for (const auto& r : records) {
    pred.push_back(r.predicted);
    real.push_back(r.realized_after);
    s.mean_before += r.realized_before;
    s.mean_after += r.realized_after;
    auto& u = users[r.user];
    u.user = r.user;
    ++u.epochs;
    u.mean_before += r.realized_before;
    u.mean_after += r.realized_after;
    if (r.role == Role::receiver) {
      ++u.receiver_epochs;
      ++s.receiver_events;
      u.receiver_mean_before += r.realized_before;
      u.receiver_mean_after += r.realized_after;
    } else if (r.role == Role::donor) {
      ++u.donor_epochs;
      ++s.donor_events;
      u.donor_mean_after += r.realized_after;
    }
    by_epoch[r.epoch].first.push_back(r.bandwidth);
    by_epoch[r.epoch].second.push_back(r.realized_after);
  }
  const auto n = static_cast<double>(records.size());
  s.mean_before /= n;
  s.mean_after /= n;
  s.mse = qoe_mse(pred, real);
  s.category_accuracy = category_accuracy(pred, real);
  for (auto& [id, u] : users) {
    u.mean_before /= u.epochs;
    u.mean_after /= u.epochs;
    if (u.receiver_epochs) {
      u.receiver_mean_before /= u.receiver_epochs;
      u.receiver_mean_after /= u.receiver_epochs;
    }
    if (u.donor_epochs) u.donor_mean_after /= u.donor_epochs;
    s.per_user.push_back(u);
  }
  s.users = static_cast<int>(users.size());
  s.epochs = static_cast<int>(by_epoch.size());
  for (const auto& [e, v] : by_epoch) {
    const double total = std::accumulate(v.first.begin(), v.first.end(), 0.0);
    s.max_total_bandwidth = std::max(s.max_total_bandwidth, total);
    s.final_total_bandwidth = total;
    s.objective += objective(v.first, v.second, params);
  }
  s.objective /= static_cast<double>(by_epoch.size());
  return s;
}

struct ExperimentHooks {
  // Called once per (epoch, user) after the epoch completes, in record order.
  std::function<void(const std::string& user, const QoERecord&)> on_history;
};

inline std::vector<double> initial_allocation(const ExperimentConfig& cfg, const std::vector<std::string>& users) {
  std::vector<double> b;
  if (cfg.initial_policy == InitialPolicy::uniform) {
    b.assign(users.size(), cfg.allocation.total_bandwidth / static_cast<double>(users.size()));
  } else {
    for (const auto& u : users) {
      auto it = cfg.initial_bandwidths.find(u);
      if (it == cfg.initial_bandwidths.end()) throw ConfigError("initial allocation lacks user " + u);
      if (!(it->second >= 0.0)) throw ConfigError("initial allocation for " + u + " is negative");
      b.push_back(it->second);
    }
    for (const auto& [u, v] : cfg.initial_bandwidths)
      if (std::find(users.begin(), users.end(), u) == users.end())
        throw ConfigError("initial allocation names unknown user " + u);
  }
  const double total = std::accumulate(b.begin(), b.end(), 0.0);
  if (total > cfg.allocation.total_bandwidth * (1.0 + 1e-12))
    throw ConfigError("initial allocation (" + std::to_string(total) + " Hz) exceeds the total bandwidth");
  return b;
}

inline ExperimentReport run_experiment(Simulation& sim, const ExperimentHooks& hooks = {}) {
  const ExperimentConfig& cfg = sim.config();
  const auto& ids = sim.user_ids();
  const std::size_t n = ids.size();
  if (n == 0) throw ConfigError("manifest has no users");

  const int usable = sim.common_epochs();
  if (usable < 2)
    throw ConfigError("traces cover " + std::to_string(usable) + " epoch(s); at least 2 plus the lookahead are needed");
  int last = usable - 1;
  if (cfg.max_epochs > 0) last = std::min(last, cfg.max_epochs);

  const std::vector<double> initial = initial_allocation(cfg, ids);
  std::vector<double> bw = initial;
  std::vector<std::vector<QoERecord>> history(n);
  ExperimentReport report;

  for (int e = 1; e <= last; ++e) {
    std::vector<double> forecast(n);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
      auto& ev = sim.evaluator(i);
      forecast[i] = ev.predicted(bw[i], e, history[i]).value;
      if (cfg.mode == RunMode::allocate && forecast[i] > cfg.allocation.high_qoe)
        for (const auto& t : sim.tiers(i))  // warm the donor search
          if (t.min_bandwidth < bw[i]) ev.predicted(t.min_bandwidth, e, history[i]);
    });

    std::vector<double> next = bw, predicted = forecast;
    std::vector<Role> roles(n, Role::untouched);
    if (cfg.mode == RunMode::allocate) {
      std::vector<UserBandwidth> cur;
      for (std::size_t i = 0; i < n; ++i) cur.push_back({ids[i], bw[i]});
      auto predict = [&](const std::string& u, double b) {
        const std::size_t i = sim.index_of(u);
        if (b == bw[i]) return forecast[i];
        return sim.evaluator(i).predicted(b, e, history[i]).value;
      };
      auto tiers = [&](const std::string& u) { return sim.tiers(u); };
      const AllocationResult res = reallocate(cur, cfg.allocation, tiers, predict);
      for (const auto& a : res.users) {
        const std::size_t i = sim.index_of(a.user_id);
        next[i] = a.new_bandwidth;
        predicted[i] = a.predicted_after;
        roles[i] = a.role;
      }
    }

    std::vector<double> before(n), after(n);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
      auto& ev = sim.evaluator(i);
      before[i] = ev.realized(bw[i], e).value;
      after[i] = next[i] == bw[i] ? before[i] : ev.realized(next[i], e).value;
    });

    for (std::size_t i = 0; i < n; ++i) {
      report.records.push_back({e, ids[i], cfg.method, next[i], predicted[i], before[i], after[i], roles[i]});
      const QoERecord h{e, next[i], predicted[i], after[i]};
      history[i].push_back(h);
      if (hooks.on_history) hooks.on_history(ids[i], h);
    }
    bw = cfg.carry_over ? std::move(next) : initial;
  }
  report.summary = summarize(report.records, cfg.allocation);
  return report;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const ExperimentHooks& hooks = {}) {
  cfg.validate();
  Simulation sim(cfg);
  return run_experiment(sim, hooks);
}

}  // namespace marqoe
