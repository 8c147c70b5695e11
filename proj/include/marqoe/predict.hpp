// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Pose prediction, Kalman bias correction, and the bandwidth -> QoE pipeline.
//
// Per-frame pipeline at sampling rate r (uploads on the grid t0 + k/r):
//   1. feed the pose filters the errors of every earlier prediction whose
//      target frame has now been observed;
//   2. anchor = latest upload instant <= current frame time f;
//      history = uploads in (f - H, anchor];
//   3. predict the pose at f + W from the anchor (lookahead f + W - anchor),
//      adding the filtered per-component bias;
//   4. VCHR between the visible cells of the predicted and true pose at f + W.
// The per-frame series always runs from the start of the trace, so a window's
// value does not depend on how the trace is cut into windows.

#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "marqoe/error.hpp"
#include "marqoe/geometry.hpp"
#include "marqoe/kalman.hpp"
#include "marqoe/network.hpp"
#include "marqoe/trace.hpp"

namespace marqoe {

enum class BaseModel { constant_velocity, last_value };

enum class CorrectionTarget { none, pose, qoe_scalar, both };

struct PredictorConfig {
  BaseModel base_model{BaseModel::constant_velocity};
  double lookahead{0.1};       // W, seconds
  double history_window{1.0};  // H, seconds
  KalmanParams kalman;
  CorrectionTarget correction{CorrectionTarget::both};

  bool corrects_pose() const {
    return correction == CorrectionTarget::pose || correction == CorrectionTarget::both;
  }
  bool corrects_qoe() const {
    return correction == CorrectionTarget::qoe_scalar || correction == CorrectionTarget::both;
  }
  void validate() const {
    if (!(lookahead > 0.0)) throw InvalidParameter("lookahead must be > 0");
    if (!(history_window > 0.0)) throw InvalidParameter("history window must be > 0");
    kalman.validate();
  }
};

enum class QoEKind { predicted, realized };

inline std::string to_string(QoEKind k) { return k == QoEKind::predicted ? "predicted" : "realized"; }

struct QoEEstimate {
  std::string user_id;
  double bandwidth{0.0};
  int epoch{0};
  double value{0.0};
  QoEKind kind{QoEKind::realized};
};

// One completed epoch of a user's QoE history.
struct QoERecord {
  int epoch{0};
  double bandwidth{0.0};
  double predicted{0.0};
  double realized{0.0};
  bool operator==(const QoERecord&) const = default;
};

// Everything the pipeline needs besides the trace.
struct QoEContext {
  ViewConfig view;
  PredictorConfig predictor;
  ChannelConfig channel;
  QueueParams queue;
  std::vector<double> candidate_rates{default_candidate_rates(30)};
  double epoch_length{1.0};
};

// ============================================================================
// Pose predictors
// ============================================================================
inline Pose predict_pose_base(const PoseHistory& history, double lookahead, BaseModel model) {
  if (history.empty()) throw NoHistory("empty pose history");
  const Pose& last = history.samples.back().pose;
  const std::size_t n = history.samples.size();
  if (model == BaseModel::last_value || n == 1) return last;

  // least-squares velocity of each position component
  double t_mean = 0.0;
  Vec3 p_mean;
  for (const auto& s : history.samples) {
    t_mean += s.timestamp;
    p_mean += s.pose.position;
  }
  t_mean /= static_cast<double>(n);
  p_mean = p_mean / static_cast<double>(n);
  double stt = 0.0;
  Vec3 stp;
  for (const auto& s : history.samples) {
    const double dt = s.timestamp - t_mean;
    stt += dt * dt;
    stp += (s.pose.position - p_mean) * dt;
  }
  const Vec3 velocity = stt > 0.0 ? stp / stt : Vec3{};

  // mean world-frame angular velocity between consecutive samples
  Vec3 omega;
  for (std::size_t i = 1; i < n; ++i) {
    const auto& a = history.samples[i - 1];
    const auto& b = history.samples[i];
    const Quaternion delta = b.pose.orientation * a.pose.orientation.conjugate();
    omega += delta.log() / (b.timestamp - a.timestamp);
  }
  omega = omega / static_cast<double>(n - 1);

  Pose out;
  out.position = last.position + velocity * lookahead;
  out.orientation = omega == Vec3{} ? last.orientation
                                    : (Quaternion::exp(omega * lookahead) * last.orientation).canonical();
  return out;
}

// Adds per-component biases: position in metres, orientation in the Z-Y-X
// Euler parameterization (then re-canonicalized).
inline Pose apply_bias(const Pose& base, const std::array<double, 6>& bias) {
  Pose out = base;
  out.position = base.position + Vec3{bias[0], bias[1], bias[2]};
  if (bias[3] != 0.0 || bias[4] != 0.0 || bias[5] != 0.0) {
    const EulerAngles e = base.euler();
    out.orientation = quaternion_from_euler({e.x + bias[3], e.y + bias[4], e.z + bias[5]});
  }
  return out;
}

inline Pose predict_pose_corrected(const PoseHistory& history, double lookahead,
                                   const KalmanBank& bank, BaseModel model) {
  const Pose base = predict_pose_base(history, lookahead, model);
  std::array<double, 6> bias{};
  for (std::size_t i = 0; i < 6; ++i) bias[i] = bank[i].bias;
  return apply_bias(base, bias);
}

// Component-wise error actual - predicted (angles wrapped to [-pi, pi]).
inline std::array<double, 6> pose_error(const Pose& actual, const Pose& predicted) {
  const Vec3 dp = actual.position - predicted.position;
  const EulerAngles ea = actual.euler(), ep = predicted.euler();
  return {dp.x, dp.y, dp.z, wrap_angle(ea.x - ep.x), wrap_angle(ea.y - ep.y), wrap_angle(ea.z - ep.z)};
}

inline void update_bank(KalmanBank& bank, const std::array<double, 6>& error, const KalmanParams& p) {
  for (std::size_t i = 0; i < 6; ++i) bank[i] = kalman_update(bank[i], error[i], p);
}

// ============================================================================
// Epoch windows
// ============================================================================
struct FrameRange {
  std::size_t first{0};
  std::size_t last{0};  // inclusive
  std::size_t count() const { return last - first + 1; }
};

// Frames with timestamps in [t0, t1) whose lookahead target still lies inside
// the trace.
inline FrameRange frames_in_window(const UserTrace& trace, double t0, double t1, double lookahead) {
  constexpr double eps = 1e-9;
  if (trace.frames.empty()) throw EmptyTrace(trace.user_id);
  if (!(t1 > t0)) throw OutOfRange("empty window");
  const double rel0 = (t0 - trace.start()) * trace.fps;
  const double rel1 = (t1 - trace.start()) * trace.fps;
  if (rel0 < -eps) throw OutOfRange("window starts before trace " + trace.user_id);
  const auto first = static_cast<long>(std::ceil(rel0 - eps));
  const auto last = static_cast<long>(std::ceil(rel1 - eps)) - 1;
  if (last < first || last >= static_cast<long>(trace.frames.size()))
    throw OutOfRange("window exceeds trace " + trace.user_id);
  if (trace.frames[static_cast<std::size_t>(last)].timestamp + lookahead > trace.end() + eps)
    throw OutOfRange("window leaves no room for the lookahead in trace " + trace.user_id);
  return {static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

inline std::pair<double, double> epoch_bounds(const UserTrace& trace, int epoch, double epoch_length) {
  const double t0 = trace.start() + epoch * epoch_length;
  return {t0, t0 + epoch_length};
}

// Number of whole epochs (from 0) the trace can evaluate.
inline int usable_epochs(const UserTrace& trace, const QoEContext& ctx) {
  int e = 0;
  while (true) {
    const auto [t0, t1] = epoch_bounds(trace, e, ctx.epoch_length);
    try {
      frames_in_window(trace, t0, t1, ctx.predictor.lookahead);
    } catch (const OutOfRange&) {
      return e;
    }
    ++e;
  }
}

// ============================================================================
// Per-frame VCHR series at a fixed sampling rate
// ============================================================================
class QoESeries {
public:
  QoESeries(const UserTrace& trace, double rate, const QoEContext& ctx,
            std::vector<std::optional<CellSet>>* truth_cache = nullptr)
      : trace_(&trace), rate_(rate), ctx_(&ctx), bank_(initial_bank(ctx.predictor.kalman)),
        truth_cache_(truth_cache) {
    if (!(rate > 0.0)) throw InvalidParameter("sampling rate must be > 0");
  }

  // Extends the series through frame `last` (inclusive).
  void extend_to(std::size_t last) {
    const auto& tr = *trace_;
    const auto& pc = ctx_->predictor;
    constexpr double eps = 1e-9;
    while (values_.size() <= last) {
      const std::size_t k = values_.size();
      const double t = tr.frames[k].timestamp;

      while (!pending_.empty() && pending_.front().target <= k) {
        const Pending p = pending_.front();
        pending_.pop_front();
        if (pc.corrects_pose())
          update_bank(bank_, pose_error(tr.frames[p.target].pose, p.predicted), pc.kalman);
      }

      const double anchor =
          tr.start() + std::floor((t - tr.start()) * rate_ + eps) / rate_;
      const double window = std::max(pc.history_window - (t - anchor), 0.5 / rate_);
      const PoseHistory history = resample_history(tr, anchor, rate_, window);
      const double lookahead = t + pc.lookahead - anchor;
      const Pose predicted = pc.corrects_pose()
                                 ? predict_pose_corrected(history, lookahead, bank_, pc.base_model)
                                 : predict_pose_base(history, lookahead, pc.base_model);
      const std::size_t target = tr.nearest_frame(t + pc.lookahead);
      values_.push_back(iou(truth(target), visible_cells(predicted, ctx_->view)));
      pending_.push_back({target, predicted});
    }
  }

  double value(std::size_t k) const { return values_.at(k); }
  std::size_t size() const { return values_.size(); }
  const KalmanBank& bank() const { return bank_; }

  double mean(const FrameRange& r) {
    extend_to(r.last);
    double sum = 0.0;
    for (std::size_t k = r.first; k <= r.last; ++k) sum += values_[k];
    return sum / static_cast<double>(r.count());
  }

private:
  struct Pending {
    std::size_t target;
    Pose predicted;
  };

  const CellSet& truth(std::size_t k) {
    if (truth_cache_) {
      if (truth_cache_->size() != trace_->frames.size()) truth_cache_->resize(trace_->frames.size());
      auto& slot = (*truth_cache_)[k];
      if (!slot) slot = visible_cells(trace_->frames[k].pose, ctx_->view);
      return *slot;
    }
    scratch_ = visible_cells(trace_->frames[k].pose, ctx_->view);
    return scratch_;
  }

  const UserTrace* trace_;
  double rate_;
  const QoEContext* ctx_;
  KalmanBank bank_;
  std::deque<Pending> pending_;
  std::vector<double> values_;
  std::vector<std::optional<CellSet>>* truth_cache_;
  CellSet scratch_;
};

// ============================================================================
// Realized / predicted QoE
// ============================================================================
inline QoEEstimate realized_qoe_window(const UserTrace& trace, double bandwidth, double t0, double t1,
                                       const QoEContext& ctx) {
  const FrameRange range = frames_in_window(trace, t0, t1, ctx.predictor.lookahead);
  QoEEstimate est{trace.user_id, bandwidth, 0, 0.0, QoEKind::realized};
  const auto rate = max_sampling_rate(bandwidth, ctx.channel, ctx.queue, ctx.candidate_rates);
  if (!rate) return est;
  QoESeries series(trace, *rate, ctx);
  est.value = series.mean(range);
  return est;
}

inline QoEEstimate realized_qoe(const UserTrace& trace, double bandwidth, int epoch,
                                const QoEContext& ctx) {
  if (epoch < 0) throw OutOfRange("negative epoch");
  const auto [t0, t1] = epoch_bounds(trace, epoch, ctx.epoch_length);
  QoEEstimate est = realized_qoe_window(trace, bandwidth, t0, t1, ctx);
  est.epoch = epoch;
  return est;
}

// Scalar residual bias learned from the (predicted, realized) pairs of
// epochs before `epoch`, in epoch order.
inline KalmanState qoe_bias_state(std::span<const QoERecord> history, int epoch,
                                  const KalmanParams& params) {
  std::vector<QoERecord> past;
  for (const auto& r : history)
    if (r.epoch < epoch) past.push_back(r);
  std::stable_sort(past.begin(), past.end(),
                   [](const QoERecord& a, const QoERecord& b) { return a.epoch < b.epoch; });
  KalmanState s = KalmanState::initial(params);
  for (const auto& r : past) s = kalman_update(s, r.realized - r.predicted, params);
  return s;
}

// Trailing-window proxy (realized QoE of epoch - 1 at the candidate
// bandwidth) plus the learned scalar bias, clamped to [0, 1].
inline double corrected_qoe_forecast(double proxy, std::span<const QoERecord> history, int epoch,
                                     const PredictorConfig& pc) {
  double v = proxy;
  if (pc.corrects_qoe()) v += qoe_bias_state(history, epoch, pc.kalman).bias;
  return std::clamp(v, 0.0, 1.0);
}

inline QoEEstimate predict_future_qoe(const UserTrace& trace, double bandwidth, int epoch,
                                      std::span<const QoERecord> history, const QoEContext& ctx) {
  if (epoch < 1) throw NoHistory("epoch " + std::to_string(epoch) + " has no completed epoch before it");
  const double proxy = realized_qoe(trace, bandwidth, epoch - 1, ctx).value;
  return {trace.user_id, bandwidth, epoch, corrected_qoe_forecast(proxy, history, epoch, ctx.predictor),
          QoEKind::predicted};
}

// ============================================================================
// Cached evaluator for one user
// ============================================================================

// Memoizes the per-frame series per sampling rate (QoE depends on bandwidth
// only through the rate) and the true visible sets. Results are identical to
// the free functions above. Safe to share between threads.
class QoEEvaluator {
public:
  QoEEvaluator(std::shared_ptr<const UserTrace> trace, QoEContext ctx)
      : trace_(std::move(trace)), ctx_(std::move(ctx)) {}

  const UserTrace& trace() const { return *trace_; }
  const QoEContext& context() const { return ctx_; }

  std::optional<double> rate_for(double bandwidth) {
    std::lock_guard lock(mutex_);
    return rate_for_locked(bandwidth);
  }

  QoEEstimate realized(double bandwidth, int epoch) {
    if (epoch < 0) throw OutOfRange("negative epoch");
    const auto [t0, t1] = epoch_bounds(*trace_, epoch, ctx_.epoch_length);
    const FrameRange range = frames_in_window(*trace_, t0, t1, ctx_.predictor.lookahead);
    QoEEstimate est{trace_->user_id, bandwidth, epoch, 0.0, QoEKind::realized};
    std::lock_guard lock(mutex_);
    const auto rate = rate_for_locked(bandwidth);
    if (!rate) return est;
    auto it = series_.find(*rate);
    if (it == series_.end())
      it = series_.emplace(*rate, std::make_unique<QoESeries>(*trace_, *rate, ctx_, &truth_)).first;
    est.value = it->second->mean(range);
    return est;
  }

  QoEEstimate predicted(double bandwidth, int epoch, std::span<const QoERecord> history) {
    if (epoch < 1) throw NoHistory("epoch " + std::to_string(epoch) + " has no completed epoch before it");
    const double proxy = realized(bandwidth, epoch - 1).value;
    return {trace_->user_id, bandwidth, epoch,
            corrected_qoe_forecast(proxy, history, epoch, ctx_.predictor), QoEKind::predicted};
  }

  int usable_epochs() const { return marqoe::usable_epochs(*trace_, ctx_); }

private:
  std::optional<double> rate_for_locked(double bandwidth) {
    auto it = rates_.find(bandwidth);
    if (it != rates_.end()) return it->second;
    const auto r = max_sampling_rate(bandwidth, ctx_.channel, ctx_.queue, ctx_.candidate_rates);
    rates_.emplace(bandwidth, r);
    return r;
  }

  std::shared_ptr<const UserTrace> trace_;
  QoEContext ctx_;
  std::mutex mutex_;
  std::map<double, std::optional<double>> rates_;
  std::map<double, std::unique_ptr<QoESeries>> series_;
  std::vector<std::optional<CellSet>> truth_;
};

}  // namespace marqoe
