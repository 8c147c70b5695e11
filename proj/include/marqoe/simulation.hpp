// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// A loaded dataset plus one cached QoE evaluator and rate-tier table per
// user. Shared by the experiment runner and the tool service.

#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marqoe/config.hpp"
#include "marqoe/network.hpp"
#include "marqoe/predict.hpp"
#include "marqoe/trace.hpp"

namespace marqoe {

class Simulation {
public:
  // `predictor_overrides` maps user ids to partial predictor documents.
  explicit Simulation(const ExperimentConfig& cfg,
                      const std::map<std::string, nlohmann::json>& predictor_overrides = {})
      : cfg_(cfg), manifest_(load_manifest(cfg.manifest)) {
    build(predictor_overrides);
  }

  Simulation(const ExperimentConfig& cfg, DatasetManifest manifest,
             const std::map<std::string, nlohmann::json>& predictor_overrides = {})
      : cfg_(cfg), manifest_(std::move(manifest)) {
    build(predictor_overrides);
  }

  const ExperimentConfig& config() const { return cfg_; }
  const DatasetManifest& manifest() const { return manifest_; }
  std::size_t size() const { return users_.size(); }
  const std::vector<std::string>& user_ids() const { return ids_; }
  bool has_user(const std::string& id) const { return index_.count(id) != 0; }

  std::size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw NotFound("unknown user " + id);
    return it->second;
  }

  QoEEvaluator& evaluator(std::size_t i) const { return *users_.at(i).evaluator; }
  QoEEvaluator& evaluator(const std::string& id) const { return evaluator(index_of(id)); }
  std::span<const RateTier> tiers(std::size_t i) const { return users_.at(i).tiers; }
  std::span<const RateTier> tiers(const std::string& id) const { return tiers(index_of(id)); }
  const QoEContext& context(std::size_t i) const { return users_.at(i).evaluator->context(); }
  const UserTrace& trace(std::size_t i) const { return users_.at(i).evaluator->trace(); }

  // Epochs every user can evaluate (counted from epoch 0).
  int common_epochs() const {
    int n = -1;
    for (const auto& u : users_) {
      const int e = u.evaluator->usable_epochs();
      n = n < 0 ? e : std::min(n, e);
    }
    return std::max(n, 0);
  }

private:
  struct User {
    std::unique_ptr<QoEEvaluator> evaluator;
    std::vector<RateTier> tiers;
  };

  void build(const std::map<std::string, nlohmann::json>& overrides) {
    cfg_.allocation.validate();
    const auto fps = static_cast<int>(std::lround(manifest_.fps));
    const auto candidates = default_candidate_rates(fps);
    const double ceiling = cfg_.ceiling_factor * cfg_.allocation.total_bandwidth;

    auto entries = manifest_.entries;
    std::sort(entries.begin(), entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.user_id < b.user_id; });
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      QoEContext ctx;
      ctx.view = ViewConfig{cfg_.frustum, manifest_.grid_for(e), cfg_.occlusion};
      ctx.predictor = cfg_.predictor;
      if (auto it = overrides.find(e.user_id); it != overrides.end())
        apply_predictor_json(ctx.predictor, it->second);
      ctx.predictor.validate();
      ctx.channel = cfg_.channel;
      ctx.channel.seed = user_channel_seed(cfg_.seed, i);
      ctx.queue = cfg_.queue;
      ctx.candidate_rates = candidates;
      ctx.epoch_length = cfg_.epoch_length;

      User u;
      u.tiers = rate_tiers(ctx.channel, ctx.queue, candidates, ceiling);
      auto trace = std::make_shared<const UserTrace>(load_trace(manifest_, e));
      u.evaluator = std::make_unique<QoEEvaluator>(std::move(trace), std::move(ctx));
      index_.emplace(e.user_id, i);
      ids_.push_back(e.user_id);
      users_.push_back(std::move(u));
    }
  }

  ExperimentConfig cfg_;
  DatasetManifest manifest_;
  std::vector<User> users_;
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace marqoe
