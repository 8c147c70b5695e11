// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Tool registry and request dispatch. Requests and responses follow the
// JSON-RPC shape {id, method, params} / {id, result | error}. Tool results
// carry derived quantities only; pose samples never leave this layer.

#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marqoe/agent/intent.hpp"
#include "marqoe/agent/schema.hpp"
#include "marqoe/agent/ucr.hpp"
#include "marqoe/allocate.hpp"
#include "marqoe/simulation.hpp"

namespace marqoe::agent {

namespace error_code {
inline constexpr int parse_error = -32700;
inline constexpr int invalid_request = -32600;
inline constexpr int method_not_found = -32601;
inline constexpr int invalid_params = -32602;
inline constexpr int tool_failure = -32000;
}  // namespace error_code

inline std::vector<ToolDescriptor> default_tools() {
  using F = FieldType;
  return {
      {"predict_future_qoe",
       "Predict a user's mean QoE (virtual content hit rate) over an epoch if the user were allocated the given "
       "uplink bandwidth.",
       {{"user", F::string, true, "user id"},
        {"bandwidth_hz", F::number, true, "candidate uplink bandwidth, Hz"},
        {"epoch", F::integer, false, "epoch index (>= 1); defaults to the epoch after the user's last record"}},
       {{"user", F::string, true, "user id"},
        {"bandwidth_hz", F::number, true, "bandwidth, Hz"},
        {"epoch", F::integer, true, "epoch index"},
        {"value", F::number, true, "predicted QoE in [0, 1]"},
        {"kind", F::string, true, "always 'predicted'"}}},
      {"historical_qoe_query",
       "Aggregate a user's recorded QoE history over an epoch range.",
       {{"user", F::string, true, "user id"},
        {"epoch", F::integer, false, "single epoch (shorthand for epoch_from = epoch_to)"},
        {"epoch_from", F::integer, false, "first epoch, inclusive"},
        {"epoch_to", F::integer, false, "last epoch, inclusive"},
        {"aggregate", F::string, false, "aggregate over realized QoE (default mean)", {"mean", "min", "max", "series"}}},
       {{"user", F::string, true, "user id"},
        {"aggregate", F::string, true, "aggregate applied"},
        {"count", F::integer, true, "records in range"},
        {"value", F::number, false, "aggregate of realized QoE (mean/min/max)"},
        {"series", F::array, false, "records {epoch, bandwidth_hz, predicted, realized} (series)"}}},
      {"reallocate_bandwidth",
       "Run one donor/receiver reallocation pass over all users for an epoch and report the proposed allocation.",
       {{"epoch", F::integer, false, "epoch index (>= 1); defaults to the epoch after the latest record"},
        {"bandwidths_hz", F::object, false, "current allocation {user: Hz}; defaults to a uniform split"}},
       {{"epoch", F::integer, true, "epoch index"},
        {"surplus_hz", F::number, true, "bandwidth released by donors, Hz"},
        {"total_deficit", F::number, true, "sum of receiver QoE deficits"},
        {"users", F::array, true, "per-user {user, role, old_bandwidth_hz, new_bandwidth_hz, predicted_before, predicted_after}"}}},
  };
}

// Removes anything path-like from a failure message.
inline std::string sanitize_message(std::string msg) {
  std::string out;
  std::size_t i = 0;
  while (i < msg.size()) {
    std::size_t j = msg.find_first_of(" \t\n'\"", i);
    if (j == std::string::npos) j = msg.size();
    const std::string word = msg.substr(i, j - i);
    out += word.find('/') != std::string::npos ? "<path>" : word;
    if (j < msg.size()) out += msg[j];
    i = j + 1;
  }
  if (out.size() > 240) out = out.substr(0, 240) + "...";
  return out;
}

class ToolService {
public:
  ToolService(std::shared_ptr<Simulation> sim, std::shared_ptr<UserContextRepository> ucr)
      : sim_(std::move(sim)), ucr_(std::move(ucr)), tools_(default_tools()) {}

  const std::vector<ToolDescriptor>& tools() const { return tools_; }
  Simulation& simulation() const { return *sim_; }
  UserContextRepository& ucr() const { return *ucr_; }
  std::vector<std::string> roster() const { return sim_->user_ids(); }

  json tools_list() const {
    json list = json::array();
    for (const auto& t : tools_) list.push_back(to_json(t));
    return {{"tools", list}};
  }

  IntentParse parse(std::string_view text) const {
    const auto r = roster();
    return parse_intent(text, tools_, r);
  }

  // Always returns exactly one response document.
  json handle(const json& request) const {
    json id = nullptr;
    if (request.is_object() && request.contains("id")) id = request["id"];
    if (!request.is_object() || !request.contains("id") || !(id.is_string() || id.is_number_integer()))
      return error(id.is_string() || id.is_number_integer() ? id : json(nullptr), error_code::invalid_request,
                   "request must be an object with a string id");
    if (!request.contains("method") || !request["method"].is_string())
      return error(id, error_code::invalid_request, "request lacks a method");
    const std::string method = request["method"];
    if (method == "tools/list") return {{"id", id}, {"result", tools_list()}};
    if (method != "tools/call") return error(id, error_code::method_not_found, "unknown method " + method);

    const json params = request.value("params", json::object());
    if (!params.is_object()) return error(id, error_code::invalid_params, "params must be an object", "params");
    if (!params.contains("name") || !params["name"].is_string())
      return error(id, error_code::invalid_params, "missing tool name", "name");
    const std::string name = params["name"];
    const json args = params.value("arguments", json::object());
    const ToolDescriptor* d = detail::find_tool(tools_, name);
    if (!d) return error(id, error_code::method_not_found, "unknown tool " + name);
    if (auto v = validate_arguments(*d, args)) return error(id, error_code::invalid_params, v->message, v->field);
    try {
      return {{"id", id}, {"result", call(name, args)}};
    } catch (const ArgumentError& e) {
      return error(id, error_code::invalid_params, e.message, e.field);
    } catch (const marqoe::Error& e) {
      return error(id, error_code::tool_failure, sanitize_message(e.what()));
    } catch (const std::exception&) {
      return error(id, error_code::tool_failure, "internal error");
    }
  }

  // Message-level entry point: parse failures map to -32700.
  std::string handle_text(std::string_view message) const {
    json req;
    try {
      req = json::parse(message);
    } catch (const json::exception&) {
      return error(nullptr, error_code::parse_error, "message is not valid JSON").dump();
    }
    return handle(req).dump();
  }

  json call(const std::string& name, const json& args) const {
    if (name == "predict_future_qoe") return predict(args);
    if (name == "historical_qoe_query") return history(args);
    if (name == "reallocate_bandwidth") return reallocate_tool(args);
    throw NotFound("unknown tool " + name);
  }

private:
  struct ArgumentError {
    std::string field, message;
  };

  static json error(const json& id, int code, const std::string& message, const std::string& field = "") {
    json e{{"code", code}, {"message", message}};
    if (!field.empty()) e["data"] = {{"field", field}};
    return {{"id", id}, {"error", e}};
  }

  std::string user_arg(const json& args) const {
    const std::string user = args.at("user");
    if (!sim_->has_user(user)) throw ArgumentError{"user", "unknown user '" + user + "'"};
    return user;
  }

  std::vector<QoERecord> history_of(const std::string& user) const {
    return ucr_->contains(user) ? ucr_->get(user).history : std::vector<QoERecord>{};
  }

  static int next_epoch(const std::vector<QoERecord>& h) { return h.empty() ? 1 : h.back().epoch + 1; }

  static int epoch_arg(const json& args, const char* key, int fallback) {
    if (!args.contains(key)) return fallback;
    const double v = args.at(key).get<double>();
    if (v < 0 || v > std::numeric_limits<int>::max()) throw ArgumentError{key, std::string(key) + " out of range"};
    return static_cast<int>(v);
  }

  json predict(const json& args) const {
    const std::string user = user_arg(args);
    const double b = args.at("bandwidth_hz").get<double>();
    if (b < 0.0) throw ArgumentError{"bandwidth_hz", "bandwidth_hz must be >= 0"};
    const auto hist = history_of(user);
    const int epoch = epoch_arg(args, "epoch", next_epoch(hist));
    const QoEEstimate est = sim_->evaluator(user).predicted(b, epoch, hist);
    return {{"user", user}, {"bandwidth_hz", b}, {"epoch", epoch}, {"value", est.value}, {"kind", to_string(est.kind)}};
  }

  json history(const json& args) const {
    const std::string user = user_arg(args);
    if (!ucr_->contains(user)) throw NotFound("no context for user " + user);
    const auto hist = ucr_->get(user).history;
    const std::string agg = args.value("aggregate", "mean");
    int lo = std::numeric_limits<int>::min(), hi = std::numeric_limits<int>::max();
    if (args.contains("epoch")) lo = hi = epoch_arg(args, "epoch", 0);
    lo = epoch_arg(args, "epoch_from", lo);
    hi = epoch_arg(args, "epoch_to", hi);

    std::vector<QoERecord> sel;
    for (const auto& r : hist)
      if (r.epoch >= lo && r.epoch <= hi) sel.push_back(r);
    if (sel.empty()) throw EmptyRange("no history records for " + user + " in the requested range");

    json out{{"user", user}, {"aggregate", agg}, {"count", sel.size()}};
    if (agg == "series") {
      json s = json::array();
      for (const auto& r : sel) s.push_back(to_json(r));
      out["series"] = s;
    } else {
      double v = agg == "min" ? 1.0 : agg == "max" ? 0.0 : 0.0;
      for (const auto& r : sel) {
        if (agg == "min") v = std::min(v, r.realized);
        else if (agg == "max") v = std::max(v, r.realized);
        else v += r.realized;
      }
      if (agg == "mean") v /= static_cast<double>(sel.size());
      out["value"] = v;
    }
    return out;
  }

  json reallocate_tool(const json& args) const {
    const auto& ids = sim_->user_ids();
    std::map<std::string, std::vector<QoERecord>> hist;
    int latest = 0;
    for (const auto& u : ids) {
      hist[u] = history_of(u);
      if (!hist[u].empty()) latest = std::max(latest, hist[u].back().epoch);
    }
    const int epoch = epoch_arg(args, "epoch", latest + 1);
    const auto& cfg = sim_->config();

    std::vector<UserBandwidth> cur;
    if (args.contains("bandwidths_hz")) {
      const json& m = args.at("bandwidths_hz");
      for (const auto& [u, v] : m.items()) {
        if (!sim_->has_user(u)) throw ArgumentError{"bandwidths_hz", "unknown user '" + u + "'"};
        if (!v.is_number()) throw ArgumentError{"bandwidths_hz", "bandwidth for '" + u + "' must be a number"};
      }
      for (const auto& u : ids) {
        if (!m.contains(u)) throw ArgumentError{"bandwidths_hz", "missing bandwidth for '" + u + "'"};
        cur.push_back({u, m.at(u).get<double>()});
      }
    } else {
      for (const auto& u : ids)
        cur.push_back({u, cfg.allocation.total_bandwidth / static_cast<double>(ids.size())});
    }

    auto predict = [&](const std::string& u, double b) {
      return sim_->evaluator(u).predicted(b, epoch, hist.at(u)).value;
    };
    auto tiers = [&](const std::string& u) { return sim_->tiers(u); };
    const AllocationResult res = reallocate(cur, cfg.allocation, tiers, predict);

    json users = json::array();
    for (const auto& a : res.users)
      users.push_back({{"user", a.user_id},
                       {"role", to_string(a.role)},
                       {"old_bandwidth_hz", a.old_bandwidth},
                       {"new_bandwidth_hz", a.new_bandwidth},
                       {"predicted_before", a.predicted_before},
                       {"predicted_after", a.predicted_after}});
    return {{"epoch", epoch}, {"surplus_hz", res.surplus}, {"total_deficit", res.total_deficit}, {"users", users}};
  }

  std::shared_ptr<Simulation> sim_;
  std::shared_ptr<UserContextRepository> ucr_;
  std::vector<ToolDescriptor> tools_;
};

// Context record for a manifest user (no history yet).
inline UserContextRecord initial_record(const DatasetManifest& m, const ManifestEntry& e,
                                        const ExperimentConfig& cfg) {
  UserContextRecord r;
  r.user_id = e.user_id;
  r.dataset = m.dataset;
  r.trace_ref = e.path.generic_string();
  r.grid_bounds = {e.grid_bounds.min.x, e.grid_bounds.min.y, e.grid_bounds.min.z,
                   e.grid_bounds.max.x, e.grid_bounds.max.y, e.grid_bounds.max.z};
  r.grid_dims = m.grid_dims;
  r.channel = channel_to_json(cfg.channel);
  return r;
}

// Seeds the UCR with any manifest users it lacks, then builds the service
// with each user's stored predictor overrides.
inline std::shared_ptr<ToolService> make_service(const ExperimentConfig& cfg,
                                                 std::shared_ptr<UserContextRepository> ucr) {
  DatasetManifest m = load_manifest(cfg.manifest);
  std::map<std::string, json> overrides;
  for (const auto& e : m.entries) {
    if (!ucr->contains(e.user_id)) ucr->put(initial_record(m, e, cfg));
    const auto rec = ucr->get(e.user_id);
    if (!rec.predictor_overrides.empty()) overrides[e.user_id] = rec.predictor_overrides;
  }
  auto sim = std::make_shared<Simulation>(cfg, std::move(m), overrides);
  return std::make_shared<ToolService>(std::move(sim), std::move(ucr));
}

}  // namespace marqoe::agent
