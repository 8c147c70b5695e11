// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "marqoe/predict.hpp"
#include "marqoe/synthetic.hpp"
#include "support.hpp"

using namespace marqoe;

namespace {

PoseHistory history_of(const std::vector<std::pair<double, Pose>>& samples, double rate = 10.0) {
  PoseHistory h;
  h.sampling_rate = rate;
  h.window = 1.0;
  for (const auto& [t, p] : samples) h.samples.push_back({t, p});
  return h;
}

QoEContext default_context() {
  QoEContext ctx;
  ctx.view.grid = CellGrid(synthetic_content_bounds(), {4, 4, 2});
  return ctx;
}

const UserTrace& walk_trace() {
  static const UserTrace t = parse_trace_file(testing_support::data_dir() / "walk_w01.csv", ColumnMap{},
                                              RotationConvention::quaternion_wxyz);
  return t;
}

}  // namespace

TEST(BasePredictor, StationaryHistoryReturnsLastPose) {
  const Pose p = make_pose({1, 2, 1.5}, {0.1, -0.2, 2.0});
  const auto h = history_of({{0.0, p}, {0.1, p}, {0.2, p}});
  EXPECT_EQ(predict_pose_base(h, 0.3, BaseModel::constant_velocity), p);
  EXPECT_EQ(predict_pose_base(h, 0.3, BaseModel::last_value), p);
  EXPECT_THROW(predict_pose_base(PoseHistory{}, 0.1, BaseModel::last_value), NoHistory);
}

TEST(BasePredictor, StraightLineExtrapolates) {
  const Vec3 v{0.4, -0.25, 0.1};
  std::vector<std::pair<double, Pose>> s;
  for (int k = 0; k < 10; ++k) s.push_back({k * 0.1, make_pose(Vec3{1, 1, 1} + v * (k * 0.1), {})});
  const Pose out = predict_pose_base(history_of(s), 0.1, BaseModel::constant_velocity);
  const Vec3 expected = s.back().second.position + v * 0.1;
  EXPECT_NEAR(out.position.x, expected.x, 1e-12);
  EXPECT_NEAR(out.position.y, expected.y, 1e-12);
  EXPECT_NEAR(out.position.z, expected.z, 1e-12);
}

TEST(BasePredictor, SteadyYawRateExtrapolates) {
  std::vector<std::pair<double, Pose>> s;
  for (int k = 0; k < 5; ++k) s.push_back({k * 0.2, make_pose({}, {0, 0, 0.3 * k * 0.2})});
  const Pose out = predict_pose_base(history_of(s, 5.0), 0.5, BaseModel::constant_velocity);
  EXPECT_NEAR(out.euler().z, 0.3 * (0.8 + 0.5), 1e-12);
}

TEST(BasePredictor, NoisyTrajectoryMatchesLeastSquaresOracle) {
  std::mt19937_64 g(5);
  std::normal_distribution<double> n(0.0, 0.05);
  std::vector<std::pair<double, Pose>> s;
  std::vector<double> ts, xs, ys, zs;
  for (int k = 0; k < 12; ++k) {
    const double t = 3.0 + k / 15.0;
    const Vec3 p{0.5 * t + n(g), -0.2 * t + n(g), 1.6 + n(g)};
    s.push_back({t, make_pose(p, {})});
    ts.push_back(t), xs.push_back(p.x), ys.push_back(p.y), zs.push_back(p.z);
  }
  // slope of y on t from the raw normal equations
  auto slope = [&](const std::vector<double>& y) {
    const double n = static_cast<double>(ts.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) st += ts[i], sy += y[i], stt += ts[i] * ts[i], sty += ts[i] * y[i];
    return (n * sty - st * sy) / (n * stt - st * st);
  };
  const double w = 0.1;
  const Pose out = predict_pose_base(history_of(s, 15.0), w, BaseModel::constant_velocity);
  EXPECT_NEAR(out.position.x, xs.back() + slope(xs) * w, 1e-9);
  EXPECT_NEAR(out.position.y, ys.back() + slope(ys) * w, 1e-9);
  EXPECT_NEAR(out.position.z, zs.back() + slope(zs) * w, 1e-9);
}

TEST(Kalman, OneStepArithmetic) {
  const KalmanParams p{0.01, 1.0, 1.0};
  const KalmanState s = kalman_update(KalmanState::initial(p), 2.0, p);
  const double k = 1.01 / 2.01;
  EXPECT_NEAR(k, 0.50249, 1e-5);
  EXPECT_DOUBLE_EQ(s.bias, 2.0 * k);
  EXPECT_NEAR(s.bias, 1.00498, 1e-5);
  EXPECT_DOUBLE_EQ(s.variance, (1.0 - k) * 1.01);
}

TEST(Kalman, ZeroInnovationConvergesMonotonicallyToRiccati) {
  const KalmanParams p;
  const double star = riccati_fixed_point(p);
  EXPECT_GT(star, 0.0);
  const double prior = star + p.process_noise;
  EXPECT_NEAR(star, (1.0 - prior / (prior + p.measurement_noise)) * prior, 1e-15);
  KalmanState s = KalmanState::initial(p);
  double gap = std::abs(s.variance - star);
  for (int i = 0; i < 2000; ++i) {
    s = kalman_update(s, 0.0, p);
    EXPECT_EQ(s.bias, 0.0);
    const double g = std::abs(s.variance - star);
    EXPECT_LE(g, gap);
    gap = g;
  }
  EXPECT_LT(gap, 1e-12);
}

TEST(Kalman, ConstantBiasIsLearned) {
  for (double beta : {0.01, 0.5, 3.0}) {
    const KalmanParams p{1e-4 * beta * beta, 1e-2 * beta * beta, 1.0};
    KalmanState s = KalmanState::initial(p);
    for (int i = 0; i < 100; ++i) s = kalman_update(s, beta - s.bias, p);
    EXPECT_LE(std::abs(s.bias - beta), 0.05 * beta);
  }
  EXPECT_THROW(kalman_update(KalmanState{}, NAN, KalmanParams{}), InvalidParameter);
}

TEST(ApplyBias, ZeroAndAdditive) {
  const Pose base = make_pose({1, 2, 3}, {0.1, 0.2, 0.3});
  EXPECT_EQ(apply_bias(base, {0, 0, 0, 0, 0, 0}), base);
  const Pose moved = apply_bias(base, {0.1, 0, 0, 0, 0, 0});
  EXPECT_EQ(moved.position.x, base.position.x + 0.1);
  EXPECT_EQ(moved.orientation, base.orientation);
  const Pose turned = apply_bias(base, {0, 0, 0, 0, 0, 0.05});
  EXPECT_NEAR(turned.euler().z, 0.35, 1e-12);
}

TEST(PoseCorrection, ReducesErrorOnConstantOffsetTrace) {
  const UserTrace tr = generate_trace(constant_offset_spec());
  const KalmanParams kp;
  KalmanBank bank = initial_bank(kp);
  const double rate = 10.0, w = 0.1;
  double raw = 0.0, corrected = 0.0;
  int n = 0;
  for (std::size_t k = 30; k + 3 < tr.size(); k += 3) {
    const double t = tr.frames[k].timestamp;
    const auto h = resample_history(tr, t, rate, 1.0);
    const Pose truth = tr.frames[tr.nearest_frame(t + w)].pose;
    const Pose base = predict_pose_base(h, w, BaseModel::last_value);
    const Pose fixed = predict_pose_corrected(h, w, bank, BaseModel::last_value);
    if (k >= 150) {  // after the filters have settled
      raw += (truth.position - base.position).norm();
      corrected += (truth.position - fixed.position).norm();
      ++n;
    }
    update_bank(bank, pose_error(truth, fixed), kp);
  }
  ASSERT_GT(n, 10);
  EXPECT_LT(corrected / n, raw / n);
}

TEST(RealizedQoE, WalkTraceMatchesReplayOracle) {
  // Frozen from the library and confirmed by tests/oracles/replay_qoe.py.
  const QoEContext ctx = default_context();
  const auto& tr = walk_trace();
  EXPECT_NEAR(realized_qoe(tr, 5e6, 0, ctx).value, 0.9916666666666667, 1e-12);
  EXPECT_NEAR(realized_qoe(tr, 5e6, 1, ctx).value, 0.98750000000000004, 1e-12);
  EXPECT_NEAR(realized_qoe(tr, 5e6, 2, ctx).value, 0.92500000000000004, 1e-12);
  EXPECT_NEAR(realized_qoe(tr, 5e6, 3, ctx).value, 0.93333333333333335, 1e-12);
  EXPECT_NEAR(realized_qoe(tr, 3e6, 2, ctx).value, 0.90833333333333333, 1e-12);
  EXPECT_NEAR(realized_qoe(tr, 3e6, 3, ctx).value, 0.94226190476190474, 1e-12);
}

TEST(RealizedQoE, ZeroBandwidthIsZero) {
  EXPECT_EQ(realized_qoe(walk_trace(), 0.0, 2, default_context()).value, 0.0);
  EXPECT_EQ(realized_qoe(walk_trace(), 1e3, 2, default_context()).value, 0.0);
}

TEST(RealizedQoE, StationaryUserIsPerfect) {
  const UserTrace tr = generate_trace(viewer_at("S", MotionKind::stationary, 0.5, 1));
  QoEContext ctx = default_context();
  for (auto model : {BaseModel::last_value, BaseModel::constant_velocity}) {
    ctx.predictor.base_model = model;
    for (double b : {2.7e6, 5e6, 9e6, 2e7}) {
      EXPECT_EQ(realized_qoe(tr, b, 3, ctx).value, 1.0);
      EXPECT_EQ(predict_future_qoe(tr, b, 4, {}, ctx).value, 1.0);
    }
  }
}

TEST(RealizedQoE, InvariantToEpochSubdivision) {
  const auto& tr = walk_trace();
  const QoEContext ctx = default_context();
  for (double b : {2.7e6, 5e6, 9e6}) {
    for (int e = 0; e < 5; ++e) {
      const double t0 = tr.start() + e, t1 = t0 + 1.0;
      const double mid = t0 + 0.4;
      const auto r1 = frames_in_window(tr, t0, mid, 0.1), r2 = frames_in_window(tr, mid, t1, 0.1);
      const double whole = realized_qoe_window(tr, b, t0, t1, ctx).value;
      const double halves = (realized_qoe_window(tr, b, t0, mid, ctx).value * r1.count() +
                             realized_qoe_window(tr, b, mid, t1, ctx).value * r2.count()) /
                            static_cast<double>(r1.count() + r2.count());
      EXPECT_NEAR(whole, halves, 1e-12) << b << " " << e;
    }
  }
}

TEST(RealizedQoE, WindowErrors) {
  const auto& tr = walk_trace();
  EXPECT_EQ(usable_epochs(tr, default_context()), 11);
  EXPECT_THROW(frames_in_window(tr, 11.5, 12.0, 0.1), OutOfRange);
  EXPECT_THROW(frames_in_window(tr, -1.0, 0.5, 0.1), OutOfRange);
  EXPECT_THROW(realized_qoe(tr, 5e6, -1, default_context()), OutOfRange);
}

TEST(PredictedQoE, TrailingProxyWithoutCorrection) {
  MotionSpec spec = viewer_at("P", MotionKind::periodic, 0.0, 2);
  spec.period = 1.0;
  const UserTrace tr = generate_trace(spec);
  QoEContext ctx = default_context();
  ctx.predictor.correction = CorrectionTarget::pose;
  const std::vector<QoERecord> hist{{1, 5e6, 0.2, 0.9}, {2, 5e6, 0.3, 0.8}};
  for (int e = 1; e < 8; ++e)
    EXPECT_EQ(predict_future_qoe(tr, 5e6, e, hist, ctx).value, realized_qoe(tr, 5e6, e - 1, ctx).value);
  EXPECT_THROW(predict_future_qoe(tr, 5e6, 0, hist, ctx), NoHistory);
}

TEST(PredictedQoE, ScalarCorrectionReplaysTheHistory) {
  const auto& tr = walk_trace();
  const QoEContext ctx = default_context();
  const std::vector<QoERecord> hist{{1, 5e6, 0.5, 0.7}, {2, 5e6, 0.6, 0.5}, {5, 5e6, 0.9, 0.1}};
  KalmanState s = KalmanState::initial(ctx.predictor.kalman);
  s = kalman_update(s, 0.2, ctx.predictor.kalman);
  s = kalman_update(s, -0.1, ctx.predictor.kalman);
  const double proxy = realized_qoe(tr, 5e6, 2, ctx).value;
  EXPECT_DOUBLE_EQ(predict_future_qoe(tr, 5e6, 3, hist, ctx).value, std::clamp(proxy + s.bias, 0.0, 1.0));
}

TEST(PredictedQoE, BoundedAndDeterministic) {
  const auto& tr = walk_trace();
  const QoEContext ctx = default_context();
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<QoERecord> hist;
  for (int e = 1; e < 10; ++e) hist.push_back({e, 5e6, u(g), u(g)});
  for (int e = 1; e < 11; ++e) {
    for (double b : {0.0, 2.7e6, 5e6, 9e6}) {
      const double v = predict_future_qoe(tr, b, e, hist, ctx).value;
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      EXPECT_EQ(v, predict_future_qoe(tr, b, e, hist, ctx).value);
    }
  }
}

TEST(Evaluator, MatchesFreeFunctions) {
  const QoEContext ctx = default_context();
  QoEEvaluator ev(std::make_shared<const UserTrace>(walk_trace()), ctx);
  const std::vector<QoERecord> hist{{1, 5e6, 0.8, 0.9}};
  for (int e = 1; e < 6; ++e)
    for (double b : {0.0, 2.7e6, 5e6, 9e6, 5e6}) {
      EXPECT_EQ(ev.realized(b, e).value, realized_qoe(walk_trace(), b, e, ctx).value);
      EXPECT_EQ(ev.predicted(b, e, hist).value, predict_future_qoe(walk_trace(), b, e, hist, ctx).value);
    }
}
