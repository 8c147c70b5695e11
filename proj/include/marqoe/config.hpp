// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment / service configuration and its JSON document form. Documents
// are partial: absent keys keep their defaults, unknown keys are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "marqoe/allocate.hpp"
#include "marqoe/error.hpp"
#include "marqoe/geometry.hpp"
#include "marqoe/network.hpp"
#include "marqoe/predict.hpp"

namespace marqoe {

enum class InitialPolicy { uniform, explicit_list };
enum class RunMode { allocate, simulate };

struct ExperimentConfig {
  std::filesystem::path manifest;
  double epoch_length{1.0};
  int max_epochs{0};  // 0: every usable epoch
  RunMode mode{RunMode::allocate};
  std::string method{"agent"};
  std::uint64_t seed{42};
  InitialPolicy initial_policy{InitialPolicy::uniform};
  std::map<std::string, double> initial_bandwidths;  // explicit policy
  AllocationParams allocation;
  double ceiling_factor{10.0};  // bisection ceiling = factor * B_total
  bool carry_over{false};       // start each epoch from the previous result instead of the initial split
  PredictorConfig predictor;
  ChannelConfig channel;
  QueueParams queue;
  Frustum frustum;
  Occlusion occlusion{Occlusion::on};
  int threads{0};  // 0: hardware concurrency

  void validate() const {
    if (manifest.empty()) throw ConfigError("no manifest given");
    if (!(epoch_length > 0.0)) throw ConfigError("epoch_length must be > 0");
    if (max_epochs < 0) throw ConfigError("epochs must be >= 0");
    if (!(ceiling_factor >= 1.0)) throw ConfigError("ceiling_factor must be >= 1");
    try {
      allocation.validate();
      predictor.validate();
      channel.validate();
      queue.validate();
      frustum.validate();
    } catch (const InvalidParameter& e) {
      throw ConfigError(e.what());
    }
  }
};

// ============================================================================
// Enum spellings
// ============================================================================
inline std::string to_string(BaseModel m) {
  return m == BaseModel::constant_velocity ? "constant-velocity" : "last-value";
}
inline std::string to_string(CorrectionTarget c) {
  switch (c) {
    case CorrectionTarget::none: return "none";
    case CorrectionTarget::pose: return "pose";
    case CorrectionTarget::qoe_scalar: return "qoe-scalar";
    case CorrectionTarget::both: return "both";
  }
  return "?";
}
inline std::string to_string(ChannelMode m) { return m == ChannelMode::constant ? "constant" : "lognormal"; }
inline std::string to_string(Utility u) { return u == Utility::identity ? "identity" : "log1p"; }
inline std::string to_string(RunMode m) { return m == RunMode::allocate ? "allocate" : "simulate"; }

namespace detail {

template <class E>
E parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, E>> options,
             const std::string& key) {
  for (const auto& [name, value] : options)
    if (s == name) return value;
  std::string allowed;
  for (const auto& [name, value] : options) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
  throw ConfigError(key + ": unknown value '" + s + "' (allowed: " + allowed + ")");
}

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError("unknown key '" + where + (where.empty() ? "" : ".") + k + "'");
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bad value for '" + where + (where.empty() ? "" : ".") + key + "'");
  }
}

inline double deg(double radians) { return radians * 180.0 / std::numbers::pi; }
inline double rad(double degrees) { return degrees * std::numbers::pi / 180.0; }

}  // namespace detail

inline BaseModel parse_base_model(const std::string& s) {
  return detail::parse_enum<BaseModel>(
      s, {{"constant-velocity", BaseModel::constant_velocity}, {"last-value", BaseModel::last_value}},
      "base_model");
}

inline CorrectionTarget parse_correction(const std::string& s) {
  return detail::parse_enum<CorrectionTarget>(s,
                                              {{"none", CorrectionTarget::none},
                                               {"pose", CorrectionTarget::pose},
                                               {"qoe-scalar", CorrectionTarget::qoe_scalar},
                                               {"both", CorrectionTarget::both}},
                                              "correction");
}

// ============================================================================
// Sections
// ============================================================================
inline void apply_predictor_json(PredictorConfig& p, const nlohmann::json& j) {
  detail::check_keys(j, {"base_model", "lookahead_s", "history_window_s", "correction", "kalman"}, "predictor");
  std::string s;
  if (j.contains("base_model")) {
    detail::read(j, "base_model", s, "predictor");
    p.base_model = parse_base_model(s);
  }
  detail::read(j, "lookahead_s", p.lookahead, "predictor");
  detail::read(j, "history_window_s", p.history_window, "predictor");
  if (j.contains("correction")) {
    detail::read(j, "correction", s, "predictor");
    p.correction = parse_correction(s);
  }
  if (j.contains("kalman")) {
    const auto& k = j.at("kalman");
    detail::check_keys(k, {"q", "r", "p0"}, "predictor.kalman");
    detail::read(k, "q", p.kalman.process_noise, "predictor.kalman");
    detail::read(k, "r", p.kalman.measurement_noise, "predictor.kalman");
    detail::read(k, "p0", p.kalman.initial_variance, "predictor.kalman");
  }
}

inline nlohmann::json predictor_to_json(const PredictorConfig& p) {
  return {{"base_model", to_string(p.base_model)},
          {"lookahead_s", p.lookahead},
          {"history_window_s", p.history_window},
          {"correction", to_string(p.correction)},
          {"kalman",
           {{"q", p.kalman.process_noise}, {"r", p.kalman.measurement_noise}, {"p0", p.kalman.initial_variance}}}};
}

inline void apply_channel_json(ChannelConfig& c, const nlohmann::json& j) {
  detail::check_keys(j, {"mode", "mean_snr", "shadowing_sigma_db", "mc_samples", "seed"}, "channel");
  if (j.contains("mode")) {
    std::string s;
    detail::read(j, "mode", s, "channel");
    c.mode = detail::parse_enum<ChannelMode>(
        s, {{"constant", ChannelMode::constant}, {"lognormal", ChannelMode::lognormal}}, "channel.mode");
  }
  detail::read(j, "mean_snr", c.mean_snr, "channel");
  detail::read(j, "shadowing_sigma_db", c.shadowing_sigma_db, "channel");
  detail::read(j, "mc_samples", c.mc_samples, "channel");
  detail::read(j, "seed", c.seed, "channel");
}

inline nlohmann::json channel_to_json(const ChannelConfig& c) {
  return {{"mode", to_string(c.mode)},
          {"mean_snr", c.mean_snr},
          {"shadowing_sigma_db", c.shadowing_sigma_db},
          {"mc_samples", c.mc_samples},
          {"seed", c.seed}};
}

// ============================================================================
// Whole document
// ============================================================================
inline void apply_config_json(ExperimentConfig& cfg, const nlohmann::json& j,
                              const std::filesystem::path& base_dir = {}) {
  using detail::read;
  detail::check_keys(j,
                     {"manifest", "epoch_length", "epochs", "mode", "method", "seed", "initial_allocation",
                      "allocation", "predictor", "channel", "queue", "view", "threads", "log_base"},
                     "");
  if (j.contains("manifest")) {
    std::string m;
    read(j, "manifest", m, "");
    std::filesystem::path p(m);
    cfg.manifest = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  }
  read(j, "epoch_length", cfg.epoch_length, "");
  read(j, "epochs", cfg.max_epochs, "");
  read(j, "method", cfg.method, "");
  read(j, "seed", cfg.seed, "");
  read(j, "threads", cfg.threads, "");
  if (j.contains("log_base") && j.at("log_base") != 2)
    throw ConfigError("log_base: only base-2 rates are supported");
  if (j.contains("mode")) {
    std::string s;
    read(j, "mode", s, "");
    cfg.mode = detail::parse_enum<RunMode>(s, {{"allocate", RunMode::allocate}, {"simulate", RunMode::simulate}},
                                           "mode");
  }
  if (j.contains("initial_allocation")) {
    const auto& ia = j.at("initial_allocation");
    detail::check_keys(ia, {"policy", "bandwidths_hz"}, "initial_allocation");
    std::string s = "uniform";
    read(ia, "policy", s, "initial_allocation");
    cfg.initial_policy = detail::parse_enum<InitialPolicy>(
        s, {{"uniform", InitialPolicy::uniform}, {"explicit", InitialPolicy::explicit_list}},
        "initial_allocation.policy");
    read(ia, "bandwidths_hz", cfg.initial_bandwidths, "initial_allocation");
  }
  if (j.contains("allocation")) {
    const auto& a = j.at("allocation");
    detail::check_keys(a,
                       {"h_tar", "h_hig", "total_bandwidth_hz", "tradeoff_weight", "utility",
                        "search_tolerance", "ceiling_factor", "carry_over"},
                       "allocation");
    read(a, "h_tar", cfg.allocation.target_qoe, "allocation");
    read(a, "h_hig", cfg.allocation.high_qoe, "allocation");
    read(a, "total_bandwidth_hz", cfg.allocation.total_bandwidth, "allocation");
    read(a, "tradeoff_weight", cfg.allocation.tradeoff_weight, "allocation");
    read(a, "search_tolerance", cfg.allocation.search_tolerance, "allocation");
    read(a, "ceiling_factor", cfg.ceiling_factor, "allocation");
    read(a, "carry_over", cfg.carry_over, "allocation");
    if (a.contains("utility")) {
      std::string s;
      read(a, "utility", s, "allocation");
      cfg.allocation.utility = detail::parse_enum<Utility>(
          s, {{"identity", Utility::identity}, {"log1p", Utility::log1p}}, "allocation.utility");
    }
  }
  if (j.contains("predictor")) apply_predictor_json(cfg.predictor, j.at("predictor"));
  if (j.contains("channel")) apply_channel_json(cfg.channel, j.at("channel"));
  if (j.contains("queue")) {
    const auto& q = j.at("queue");
    detail::check_keys(q, {"frame_bits", "max_delay_s"}, "queue");
    read(q, "frame_bits", cfg.queue.frame_bits, "queue");
    read(q, "max_delay_s", cfg.queue.max_delay, "queue");
  }
  if (j.contains("view")) {
    const auto& v = j.at("view");
    detail::check_keys(v, {"horizontal_fov_deg", "vertical_fov_deg", "near_m", "far_m", "occlusion"}, "view");
    double h = detail::deg(cfg.frustum.horizontal_fov), vv = detail::deg(cfg.frustum.vertical_fov);
    read(v, "horizontal_fov_deg", h, "view");
    read(v, "vertical_fov_deg", vv, "view");
    cfg.frustum.horizontal_fov = detail::rad(h);
    cfg.frustum.vertical_fov = detail::rad(vv);
    read(v, "near_m", cfg.frustum.near, "view");
    read(v, "far_m", cfg.frustum.far, "view");
    bool occ = cfg.occlusion == Occlusion::on;
    read(v, "occlusion", occ, "view");
    cfg.occlusion = occ ? Occlusion::on : Occlusion::off;
  }
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json ia{{"policy", c.initial_policy == InitialPolicy::uniform ? "uniform" : "explicit"}};
  if (c.initial_policy == InitialPolicy::explicit_list) ia["bandwidths_hz"] = c.initial_bandwidths;
  return {{"manifest", c.manifest.generic_string()},
          {"epoch_length", c.epoch_length},
          {"epochs", c.max_epochs},
          {"mode", to_string(c.mode)},
          {"method", c.method},
          {"seed", c.seed},
          {"log_base", 2},
          {"initial_allocation", ia},
          {"allocation",
           {{"h_tar", c.allocation.target_qoe},
            {"h_hig", c.allocation.high_qoe},
            {"total_bandwidth_hz", c.allocation.total_bandwidth},
            {"tradeoff_weight", c.allocation.tradeoff_weight},
            {"utility", to_string(c.allocation.utility)},
            {"search_tolerance", c.allocation.search_tolerance},
            {"ceiling_factor", c.ceiling_factor},
            {"carry_over", c.carry_over}}},
          {"predictor", predictor_to_json(c.predictor)},
          {"channel", channel_to_json(c.channel)},
          {"queue", {{"frame_bits", c.queue.frame_bits}, {"max_delay_s", c.queue.max_delay}}},
          {"view",
           {{"horizontal_fov_deg", detail::deg(c.frustum.horizontal_fov)},
            {"vertical_fov_deg", detail::deg(c.frustum.vertical_fov)},
            {"near_m", c.frustum.near},
            {"far_m", c.frustum.far},
            {"occlusion", c.occlusion == Occlusion::on}}}};
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  ExperimentConfig cfg;
  apply_config_json(cfg, j, path.parent_path());
  return cfg;
}

// Channel seed for the user at `index`; distinct, reproducible streams.
inline std::uint64_t user_channel_seed(std::uint64_t base, std::size_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace marqoe
