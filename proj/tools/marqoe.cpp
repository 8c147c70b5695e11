// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// marqoe command-line entry point.
//
//   marqoe ingest   --manifest M --out DIR
//   marqoe simulate --config C | --manifest M  [--out DIR] [overrides]
//   marqoe allocate --config C | --manifest M  [--out DIR] [overrides]
//   marqoe serve    --config C | --manifest M  [--serve-addr H:P | --stdio] [--ucr-dir D]
//   marqoe eval     REPORT.csv...  [--out DIR]
//   marqoe synth    --out DIR [--scenario mixed|population] [--users N] [--seed S]
//
// Exit status: 0 success, 1 runtime failure, 2 usage error.

#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "marqoe/marqoe.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace marqoe;

namespace {

constexpr const char* kDefaultServeAddr = "127.0.0.1:7341";

// Flags shared by every experiment-shaped subcommand.
struct ExperimentFlags {
  std::string config;
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::optional<double> epoch_len;
  std::optional<double> b_total;
  std::optional<double> h_tar;
  std::optional<double> h_hig;
  std::optional<int> epochs;
  std::optional<int> threads;
  std::optional<std::string> method;

  void add_to(CLI::App* app) {
    app->add_option("--config", config, "experiment config (JSON)")->check(CLI::ExistingFile);
    app->add_option("--manifest", manifest, "dataset manifest (overrides the config's)");
    app->add_option("--seed", seed, "experiment seed");
    app->add_option("--epoch-len", epoch_len, "epoch length, s");
    app->add_option("--b-total", b_total, "total uplink bandwidth, Hz");
    app->add_option("--h-tar", h_tar, "target QoE");
    app->add_option("--h-hig", h_hig, "high QoE threshold");
    app->add_option("--epochs", epochs, "cap on simulated epochs (0 = all)");
    app->add_option("--threads", threads, "worker threads (0 = hardware)");
    app->add_option("--method", method, "method label written to the report");
  }

  // Config file first, then flags.
  ExperimentConfig build(RunMode mode) const {
    ExperimentConfig cfg;
    bool method_set = false;
    if (!config.empty()) {
      std::ifstream in(config);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError(config + ": " + e.what());
      }
      apply_config_json(cfg, j, fs::path(config).parent_path());
      method_set = j.contains("method");
    }
    cfg.mode = mode;
    if (!manifest.empty()) cfg.manifest = manifest;
    if (seed) cfg.seed = *seed;
    if (epoch_len) cfg.epoch_length = *epoch_len;
    if (b_total) cfg.allocation.total_bandwidth = *b_total;
    if (h_tar) cfg.allocation.target_qoe = *h_tar;
    if (h_hig) cfg.allocation.high_qoe = *h_hig;
    if (epochs) cfg.max_epochs = *epochs;
    if (threads) cfg.threads = *threads;
    if (method) cfg.method = *method;
    else if (!method_set && mode == RunMode::simulate) cfg.method = "static";
    cfg.validate();
    return cfg;
  }
};

std::optional<fs::path> ucr_dir_from(const std::string& flag) {
  if (!flag.empty()) return fs::path(flag);
  if (const char* env = std::getenv("MARQOE_UCR_DIR"); env && *env) return fs::path(env);
  return std::nullopt;
}

std::shared_ptr<agent::UserContextRepository> open_ucr(const std::optional<fs::path>& dir) {
  return dir ? std::make_shared<agent::UserContextRepository>(*dir)
             : std::make_shared<agent::UserContextRepository>();
}

void write_json(const fs::path& path, const json& j) { detail::write_text_file(path, j.dump(2) + "\n"); }

// Blocks SIGINT/SIGTERM in this and every later thread so one thread can
// sigwait for them.
sigset_t block_shutdown_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

// ============================================================================
// Subcommands
// ============================================================================

int cmd_ingest(const std::string& manifest_path, const fs::path& out) {
  const DatasetManifest m = load_manifest(manifest_path);
  fs::create_directories(out);
  DatasetManifest canon = m;
  canon.columns = ColumnMap{};
  canon.retime = false;
  json users = json::array();
  int failures = 0;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    json u{{"user", e.user_id}, {"source", e.path.filename().generic_string()}};
    try {
      const UserTrace t = load_trace(m, e);
      const fs::path dst = out / (e.user_id + ".csv");
      write_trace_file(t, dst);
      canon.entries[i].path = dst;
      canon.entries[i].rotation_convention = RotationConvention::quaternion_wxyz;
      u["status"] = "ok";
      u["frames"] = t.frames.size();
      u["duration_s"] = t.frames.back().timestamp - t.frames.front().timestamp;
    } catch (const Error& err) {
      ++failures;
      u["status"] = "error";
      u["error"] = err.what();
      std::cerr << "ingest: " << e.path.generic_string() << ": " << err.what() << '\n';
    }
    users.push_back(std::move(u));
  }
  write_json(out / "ingest_summary.json",
             {{"dataset", m.dataset}, {"users", users}, {"failures", failures}});
  if (failures > 0) {
    std::cerr << "ingest: " << failures << " of " << m.entries.size() << " traces failed\n";
    return 1;
  }
  write_json(out / "manifest.json", manifest_to_json(canon, out));
  std::cout << "ingested " << m.entries.size() << " traces into " << out.generic_string() << '\n';
  return 0;
}

int cmd_experiment(const ExperimentFlags& flags, RunMode mode, const std::string& out,
                   const std::string& ucr_flag) {
  const ExperimentConfig cfg = flags.build(mode);
  const auto ucr_dir = ucr_dir_from(ucr_flag);

  std::map<std::string, json> overrides;
  std::shared_ptr<agent::UserContextRepository> ucr;
  DatasetManifest m = load_manifest(cfg.manifest);
  if (ucr_dir) {
    ucr = open_ucr(ucr_dir);
    for (const auto& e : m.entries) {
      auto rec = agent::initial_record(m, e, cfg);
      if (ucr->contains(e.user_id)) rec.predictor_overrides = ucr->get(e.user_id).predictor_overrides;
      if (!rec.predictor_overrides.empty()) overrides[e.user_id] = rec.predictor_overrides;
      ucr->put(rec);  // a run replaces the stored history
    }
  }
  Simulation sim(cfg, std::move(m), overrides);
  ExperimentHooks hooks;
  if (ucr) hooks.on_history = [&](const std::string& u, const QoERecord& r) { ucr->append_history(u, r); };
  const ExperimentReport report = run_experiment(sim, hooks);

  if (!out.empty()) {
    const auto files = emit_report(report, out);
    write_json(fs::path(out) / "effective_config.json", config_to_json(cfg));
    std::cout << "wrote " << files.csv.generic_string() << ", " << files.svg.generic_string() << ", "
              << files.summary.generic_string() << '\n';
  }
  std::cout << summary_to_json(report.summary).dump(2) << '\n';
  return 0;
}

int cmd_serve(const ExperimentFlags& flags, const std::string& addr, bool use_stdio, const std::string& ucr_flag) {
  const sigset_t signals = block_shutdown_signals();
  const ExperimentConfig cfg = flags.build(RunMode::allocate);
  auto service = agent::make_service(cfg, open_ucr(ucr_dir_from(ucr_flag)));

  if (use_stdio) {
    // Requests are handled one at a time; a shutdown signal waits for the
    // one in flight so its UCR commit and response complete.
    std::mutex busy;
    std::thread watcher([&] {
      int sig = 0;
      sigwait(&signals, &sig);
      std::lock_guard lock(busy);
      std::cout.flush();
      std::_Exit(0);
    });
    watcher.detach();
    while (true) {
      std::optional<std::string> msg;
      try {
        msg = agent::read_message(std::cin);
      } catch (const InvalidInput& e) {
        agent::write_message(std::cout, json{{"id", nullptr},
                                             {"error", {{"code", agent::error_code::parse_error}, {"message", e.what()}}}}
                                            .dump());
        return 1;
      }
      if (!msg) return 0;
      std::lock_guard lock(busy);
      agent::write_message(std::cout, service->handle_text(*msg));
    }
  }

  agent::TcpServer server(service, addr);
  server.start();
  std::cout << "listening on " << server.address() << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  std::cout << "shut down" << std::endl;
  return 0;
}

int cmd_eval(const std::vector<std::string>& paths, const std::string& config, const std::string& out) {
  AllocationParams params;
  if (!config.empty()) params = load_config(config).allocation;
  std::map<std::string, std::vector<ExperimentRecord>> by_method;
  for (const auto& p : paths) {
    auto recs = read_report_file(p);
    for (auto& r : recs) by_method[r.method].push_back(std::move(r));
  }
  json rows = json::array();
  for (const auto& [method, recs] : by_method) {
    const ExperimentSummary s = summarize(recs, params);
    rows.push_back({{"method", method},
                    {"records", s.records},
                    {"users", s.users},
                    {"epochs", s.epochs},
                    {"mse", s.mse},
                    {"category_accuracy", s.category_accuracy},
                    {"objective", s.objective},
                    {"mean_qoe_before", s.mean_before},
                    {"mean_qoe_after", s.mean_after}});
  }
  const json doc{{"methods", rows}};
  if (!out.empty()) {
    fs::create_directories(out);
    write_json(fs::path(out) / "eval.json", doc);
  }
  std::cout << doc.dump(2) << '\n';
  return 0;
}

int cmd_synth(const fs::path& out, const std::string& scenario, int users, std::optional<std::uint64_t> seed) {
  std::vector<MotionSpec> specs;
  if (scenario == "mixed") specs = seed ? mixed_mobility_specs(*seed) : mixed_mobility_specs();
  else specs = seed ? population_specs(users, *seed) : population_specs(users);
  const fs::path manifest = write_synthetic_dataset(out, specs, scenario == "mixed" ? "synthetic-mixed" : "synthetic-population");
  std::cout << manifest.generic_string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QoE-aware uplink bandwidth provisioning for mobile AR"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "marqoe 0.1.0");

  std::string out, ucr_dir, serve_addr = kDefaultServeAddr, scenario = "mixed", eval_config;
  bool use_stdio = false;
  int synth_users = 40;
  std::optional<std::uint64_t> synth_seed;
  std::vector<std::string> report_paths;
  std::string ingest_manifest;

  auto* ingest = app.add_subcommand("ingest", "validate traces and write canonical CSVs");
  ingest->add_option("--manifest", ingest_manifest, "dataset manifest")->required();
  ingest->add_option("--out", out, "output directory")->required();

  ExperimentFlags sim_flags, alloc_flags, serve_flags;
  auto* simulate = app.add_subcommand("simulate", "run the epoch loop at a fixed allocation");
  sim_flags.add_to(simulate);
  simulate->add_option("--out", out, "report directory");
  simulate->add_option("--ucr-dir", ucr_dir, "user context repository directory");

  auto* allocate = app.add_subcommand("allocate", "run the epoch loop with per-epoch reallocation");
  alloc_flags.add_to(allocate);
  allocate->add_option("--out", out, "report directory");
  allocate->add_option("--ucr-dir", ucr_dir, "user context repository directory");

  auto* serve = app.add_subcommand("serve", "serve the agent tool endpoint");
  serve_flags.add_to(serve);
  serve->add_option("--serve-addr", serve_addr, "TCP listen address host:port (port 0 picks one)");
  serve->add_option("--ucr-dir", ucr_dir, "user context repository directory (env MARQOE_UCR_DIR)");
  serve->add_flag("--stdio", use_stdio, "serve on standard input/output instead of TCP");

  auto* eval = app.add_subcommand("eval", "metrics over one or more report CSVs");
  eval->add_option("reports", report_paths, "report CSV files")->required()->check(CLI::ExistingFile);
  eval->add_option("--config", eval_config, "config supplying the objective parameters")->check(CLI::ExistingFile);
  eval->add_option("--out", out, "directory for eval.json");

  auto* synth = app.add_subcommand("synth", "write a synthetic trace dataset");
  synth->add_option("--out", out, "dataset directory")->required();
  synth->add_option("--scenario", scenario, "mixed (5 users) or population")
      ->check(CLI::IsMember({"mixed", "population"}));
  synth->add_option("--users", synth_users, "population size")->check(CLI::Range(1, 100000));
  synth->add_option("--seed", synth_seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*ingest) return cmd_ingest(ingest_manifest, out);
    if (*simulate) return cmd_experiment(sim_flags, RunMode::simulate, out, ucr_dir);
    if (*allocate) return cmd_experiment(alloc_flags, RunMode::allocate, out, ucr_dir);
    if (*serve) return cmd_serve(serve_flags, serve_addr, use_stdio, ucr_dir);
    if (*eval) return cmd_eval(report_paths, eval_config, out);
    if (*synth) return cmd_synth(out, scenario, synth_users, synth_seed);
  } catch (const Error& e) {
    std::cerr << "marqoe: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "marqoe: unexpected failure: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
