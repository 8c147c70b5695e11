// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// User context repository: one JSON document per user. Persistent stores
// write each document to a temp file, fsync it, and rename it over the old
// one, so a crash leaves either the previous or the new document. Temp files
// left by a crash are removed when the store is opened.

#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marqoe/error.hpp"
#include "marqoe/predict.hpp"

namespace marqoe::agent {

using nlohmann::json;

struct UserContextRecord {
  std::string user_id;
  std::string dataset;
  std::string trace_ref;  // path of the trace inside the provider domain
  std::array<double, 6> grid_bounds{};
  std::array<int, 3> grid_dims{4, 4, 2};
  json predictor_overrides = json::object();  // partial predictor document
  json channel = json::object();
  std::vector<QoERecord> history;  // ordered by epoch

  bool operator==(const UserContextRecord&) const = default;
};

inline json to_json(const QoERecord& r) {
  return {{"epoch", r.epoch}, {"bandwidth_hz", r.bandwidth}, {"predicted", r.predicted}, {"realized", r.realized}};
}

inline json to_json(const UserContextRecord& r) {
  json hist = json::array();
  for (const auto& h : r.history) hist.push_back(to_json(h));
  return {{"user_id", r.user_id},
          {"dataset", r.dataset},
          {"trace_ref", r.trace_ref},
          {"grid_bounds", r.grid_bounds},
          {"grid_dims", r.grid_dims},
          {"predictor_overrides", r.predictor_overrides},
          {"channel", r.channel},
          {"history", hist}};
}

inline void validate_record(const UserContextRecord& r) {
  if (r.user_id.empty() || r.user_id.front() == '.' ||
      r.user_id.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_.-") !=
          std::string::npos)
    throw InvalidInput("user id '" + r.user_id + "' must be non-empty [A-Za-z0-9_.-] not starting with '.'");
  if (!r.predictor_overrides.is_object() || !r.channel.is_object())
    throw InvalidInput(r.user_id + ": predictor_overrides and channel must be objects");
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    const auto& h = r.history[i];
    if (i > 0 && h.epoch <= r.history[i - 1].epoch)
      throw InvalidInput(r.user_id + ": history epochs must be strictly increasing");
    if (!std::isfinite(h.bandwidth) || h.bandwidth < 0.0 || !(h.predicted >= 0.0 && h.predicted <= 1.0) ||
        !(h.realized >= 0.0 && h.realized <= 1.0))
      throw InvalidInput(r.user_id + ": history entry for epoch " + std::to_string(h.epoch) + " out of range");
  }
}

inline UserContextRecord record_from_json(const json& j) {
  try {
    UserContextRecord r;
    r.user_id = j.at("user_id").get<std::string>();
    r.dataset = j.value("dataset", "");
    r.trace_ref = j.value("trace_ref", "");
    if (j.contains("grid_bounds")) r.grid_bounds = j.at("grid_bounds").get<std::array<double, 6>>();
    if (j.contains("grid_dims")) r.grid_dims = j.at("grid_dims").get<std::array<int, 3>>();
    r.predictor_overrides = j.value("predictor_overrides", json::object());
    r.channel = j.value("channel", json::object());
    for (const auto& h : j.value("history", json::array()))
      r.history.push_back({h.at("epoch").get<int>(), h.at("bandwidth_hz").get<double>(),
                           h.at("predicted").get<double>(), h.at("realized").get<double>()});
    validate_record(r);
    return r;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed user context record: ") + e.what());
  }
}

class UserContextRepository {
public:
  // In-memory store.
  UserContextRepository() = default;

  // Directory store; created if absent.
  explicit UserContextRepository(std::filesystem::path dir) : dir_(std::move(dir)) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(*dir_, ec);
    if (ec) throw IoError("cannot create UCR directory " + dir_->string() + ": " + ec.message());
    for (const auto& entry : fs::directory_iterator(*dir_)) {
      const auto name = entry.path().filename().string();
      if (name.ends_with(".tmp")) {
        fs::remove(entry.path(), ec);
        continue;
      }
      if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
      std::ifstream in(entry.path());
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::exception& e) {
        throw IoError("corrupt UCR document " + entry.path().filename().string() + ": " + e.what());
      }
      UserContextRecord r = record_from_json(doc);
      slot(r.user_id).record = std::move(r);
    }
  }

  bool persistent() const { return dir_.has_value(); }

  bool contains(const std::string& user_id) const {
    std::shared_lock lock(map_mutex_);
    auto it = slots_.find(user_id);
    return it != slots_.end() && it->second->record.has_value();
  }

  UserContextRecord get(const std::string& user_id) const {
    const Slot* s = find(user_id);
    if (!s) throw NotFound("no context for user " + user_id);
    std::lock_guard lock(s->mutex);
    if (!s->record) throw NotFound("no context for user " + user_id);
    return *s->record;
  }

  void put(const UserContextRecord& record) {
    validate_record(record);
    Slot& s = slot(record.user_id);
    std::lock_guard lock(s.mutex);
    commit(record);
    s.record = record;
  }

  // Atomic per user; epochs must be strictly increasing.
  void append_history(const std::string& user_id, const QoERecord& entry) {
    Slot* s = find(user_id);
    if (!s) throw NotFound("no context for user " + user_id);
    std::lock_guard lock(s->mutex);
    if (!s->record) throw NotFound("no context for user " + user_id);
    UserContextRecord next = *s->record;
    next.history.push_back(entry);
    validate_record(next);
    commit(next);
    s->record = std::move(next);
  }

  std::vector<std::string> roster() const {
    std::shared_lock lock(map_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, s] : slots_) {
      std::lock_guard slock(s->mutex);
      if (s->record) ids.push_back(id);
    }
    return ids;  // std::map keeps them sorted
  }

  std::optional<std::filesystem::path> directory() const { return dir_; }

private:
  struct Slot {
    mutable std::mutex mutex;
    std::optional<UserContextRecord> record;
  };

  const Slot* find(const std::string& id) const {
    std::shared_lock lock(map_mutex_);
    auto it = slots_.find(id);
    return it == slots_.end() ? nullptr : it->second.get();
  }
  Slot* find(const std::string& id) {
    std::shared_lock lock(map_mutex_);
    auto it = slots_.find(id);
    return it == slots_.end() ? nullptr : it->second.get();
  }

  Slot& slot(const std::string& id) {
    std::unique_lock lock(map_mutex_);
    auto& p = slots_[id];
    if (!p) p = std::make_unique<Slot>();
    return *p;
  }

  void commit(const UserContextRecord& r) {
    if (!dir_) return;
    const std::string text = to_json(r).dump(2) + "\n";
    const auto final_path = *dir_ / (r.user_id + ".json");
    const auto tmp_path =
        *dir_ / ("." + r.user_id + "." + std::to_string(::getpid()) + "." + std::to_string(counter_++) + ".tmp");
    const int fd = ::open(tmp_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw IoError("cannot write UCR document for " + r.user_id + ": " + std::strerror(errno));
    std::size_t off = 0;
    while (off < text.size()) {
      const ssize_t n = ::write(fd, text.data() + off, text.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        const int err = errno;
        ::close(fd);
        ::unlink(tmp_path.c_str());
        throw IoError("write failed for " + r.user_id + ": " + std::strerror(err));
      }
      off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0 || ::close(fd) != 0) {
      ::unlink(tmp_path.c_str());
      throw IoError("fsync failed for " + r.user_id);
    }
    if (::rename(tmp_path.c_str(), final_path.c_str()) != 0) {
      const int err = errno;
      ::unlink(tmp_path.c_str());
      throw IoError("rename failed for " + r.user_id + ": " + std::strerror(err));
    }
    const int dfd = ::open(dir_->c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (dfd >= 0) {
      ::fsync(dfd);
      ::close(dfd);
    }
  }

  std::optional<std::filesystem::path> dir_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
  std::atomic<std::uint64_t> counter_{0};
};

}  // namespace marqoe::agent
