// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Discrete-event simulation of the D/G/1 uplink queue: frames are selected at
// a fixed rate and served FIFO by one transmitter with random service times.

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <queue>
#include <vector>

#include "marqoe/error.hpp"
#include "marqoe/network.hpp"
#include "marqoe/random.hpp"

namespace marqoe {

struct QueueSimResult {
  std::size_t jobs{0};
  double mean_delay{0.0};    // arrival -> departure
  double mean_wait{0.0};     // arrival -> start of service
  double mean_service{0.0};
};

// Service-time draws for frames sent over a (possibly shadowed) channel.
class ChannelServiceSampler {
public:
  ChannelServiceSampler(double bandwidth, ChannelConfig channel, QueueParams q)
      : bandwidth_(bandwidth), channel_(channel), q_(q), rng_(channel.seed) {
    if (!(bandwidth > 0.0)) throw InfiniteServiceTime("zero bandwidth");
  }

  double operator()() {
    const double snr =
        channel_.mode == ChannelMode::constant ? channel_.mean_snr : shadowed_snr(channel_, rng_);
    return q_.frame_bits / uplink_rate(bandwidth_, snr);
  }

private:
  double bandwidth_;
  ChannelConfig channel_;
  QueueParams q_;
  Rng rng_;
};

inline QueueSimResult simulate_dg1(double arrival_rate, std::size_t n_jobs,
                                   const std::function<double()>& draw_service) {
  if (!(arrival_rate > 0.0)) throw InvalidParameter("arrival rate must be > 0");

  enum class Kind { arrival, departure };
  struct Event {
    double time;
    Kind kind;
    std::size_t job;
    // departures before arrivals at equal times; then by job id
    bool operator>(const Event& o) const {
      if (time != o.time) return time > o.time;
      if (kind != o.kind) return kind == Kind::arrival;
      return job > o.job;
    }
  };

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::vector<double> arrival(n_jobs), start(n_jobs), service(n_jobs);
  std::deque<std::size_t> waiting;
  bool busy = false;
  const double period = 1.0 / arrival_rate;

  if (n_jobs > 0) events.push({0.0, Kind::arrival, 0});

  auto begin_service = [&](std::size_t job, double now) {
    busy = true;
    start[job] = now;
    service[job] = draw_service();
    events.push({now + service[job], Kind::departure, job});
  };

  QueueSimResult r;
  while (!events.empty()) {
    const Event ev = events.top();
    events.pop();
    if (ev.kind == Kind::arrival) {
      arrival[ev.job] = ev.time;
      if (ev.job + 1 < n_jobs)
        events.push({static_cast<double>(ev.job + 1) * period, Kind::arrival, ev.job + 1});
      if (busy) {
        waiting.push_back(ev.job);
      } else {
        begin_service(ev.job, ev.time);
      }
    } else {
      r.mean_delay += ev.time - arrival[ev.job];
      r.mean_wait += start[ev.job] - arrival[ev.job];
      r.mean_service += service[ev.job];
      ++r.jobs;
      busy = false;
      if (!waiting.empty()) {
        const std::size_t next = waiting.front();
        waiting.pop_front();
        begin_service(next, ev.time);
      }
    }
  }
  if (r.jobs > 0) {
    r.mean_delay /= static_cast<double>(r.jobs);
    r.mean_wait /= static_cast<double>(r.jobs);
    r.mean_service /= static_cast<double>(r.jobs);
  }
  return r;
}

}  // namespace marqoe
