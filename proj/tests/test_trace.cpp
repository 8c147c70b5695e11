// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "marqoe/synthetic.hpp"
#include "marqoe/trace.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace marqoe;
using testing_support::TempDir;

namespace {

UserTrace parse(const std::string& text, RotationConvention conv = RotationConvention::quaternion_wxyz,
                TraceParseOptions opts = {}) {
  std::istringstream in(text);
  return parse_trace(in, ColumnMap{}, conv, opts, "mem.csv");
}

// Stationary 30 fps trace of `n` frames starting at t0.
UserTrace still_trace(std::size_t n, double t0 = 0.0) {
  UserTrace t;
  t.user_id = "S";
  for (std::size_t k = 0; k < n; ++k) t.frames.push_back({t0 + k / 30.0, make_pose({0, 0, 0}, {})});
  return t;
}

std::vector<std::size_t> sample_indices(const UserTrace& tr, const PoseHistory& h) {
  std::vector<std::size_t> out;
  for (const auto& s : h.samples) out.push_back(tr.nearest_frame(s.timestamp));
  return out;
}

}  // namespace

TEST(TraceCsv, SingleRowIsAValidTrace) {
  const auto t = parse("t,px,py,pz,qw,qx,qy,qz\n0.5,1,2,3,1,0,0,0\n");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.user_id, "mem");
  EXPECT_EQ(t.frames[0].pose.position, (Vec3{1, 2, 3}));
}

TEST(TraceCsv, QuaternionXyzwMatchesConversionOracle) {
  std::mt19937_64 g(9);
  std::normal_distribution<double> n(0.0, 1.0);
  std::ostringstream csv;
  csv << "t,px,py,pz,qx,qy,qz,qw\n";
  std::vector<std::array<double, 4>> rows;
  csv.precision(17);
  for (int k = 0; k < 50; ++k) {
    const std::array<double, 4> q{n(g), n(g), n(g), n(g)};
    rows.push_back(q);
    csv << k / 30.0 << ",0,0,0," << q[0] << ',' << q[1] << ',' << q[2] << ',' << q[3] << '\n';
  }
  const auto t = parse(csv.str(), RotationConvention::quaternion_xyzw);
  ASSERT_EQ(t.size(), rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Mat3 m = t.frames[k].pose.orientation.to_matrix();
    const auto o = oracle::rotation_from_xyzw(rows[k][0], rows[k][1], rows[k][2], rows[k][3]);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(m[i][j], o[i][j], 1e-12) << "row " << k;
  }
}

TEST(TraceCsv, EulerConventions) {
  const auto zyx = parse("t,px,py,pz,rx,ry,rz\n0,0,0,0,0.1,0.2,0.3\n", RotationConvention::euler_zyx);
  const auto o = oracle::rotation_zyx(0.1, 0.2, 0.3);
  const Mat3 m = zyx.frames[0].pose.orientation.to_matrix();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(m[i][j], o[i][j], 1e-12);
  EXPECT_NO_THROW(parse("t,px,py,pz,rx,ry,rz\n0,0,0,0,0.1,0.2,0.3\n", RotationConvention::euler_xyz));
}

TEST(TraceCsv, Errors) {
  EXPECT_THROW(parse(""), EmptyTrace);
  EXPECT_THROW(parse("t,px,py,pz,qw,qx,qy,qz\n"), EmptyTrace);
  EXPECT_THROW(parse("t,px,py,qw,qx,qy,qz\n0,0,0,1,0,0,0\n"), SchemaError);
  EXPECT_THROW(parse("t,px,py,pz,qw,qx,qy,qz\n0,0,0,nan,1,0,0,0\n"), SchemaError);
  EXPECT_THROW(parse("t,px,py,pz,qw,qx,qy,qz\n0,0,0,0,0,0,0,0\n"), SchemaError);
  EXPECT_THROW(parse("t,px,py,pz,qw,qx,qy,qz\n0,0,0,0,1,0,0\n"), SchemaError);
  EXPECT_THROW(parse("t,px,py,pz,qw,qx,qy,qz\n0.1,0,0,0,1,0,0,0\n0.1,0,0,0,1,0,0,0\n"), OrderError);
  EXPECT_THROW(parse("t,px,py,pz,qw,qx,qy,qz\n0,0,0,0,1,0,0,0\n0.05,0,0,0,1,0,0,0\n"), OrderError);
  EXPECT_THROW(parse_rotation_convention("euler-yxz"), SchemaError);
}

TEST(TraceCsv, RetimeSnapsJitteredClocks) {
  TraceParseOptions o;
  o.retime = true;
  const auto t = parse("t,px,py,pz,qw,qx,qy,qz\n1,0,0,0,1,0,0,0\n1.0341,0,0,0,1,0,0,0\n1.066,0,0,0,1,0,0,0\n",
                       RotationConvention::quaternion_wxyz, o);
  EXPECT_DOUBLE_EQ(t.frames[2].timestamp, 1.0 + 2.0 / 30.0);
}

TEST(TraceCsv, RoundTripKeepsPoses) {
  const UserTrace a = generate_trace(viewer_at("R1", MotionKind::random_walk, 0.4, 3));
  std::stringstream s;
  write_trace_csv(a, s);
  const UserTrace b = parse_trace(s, ColumnMap{}, RotationConvention::quaternion_wxyz, {}, "R1");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_NEAR(a.frames[k].timestamp, b.frames[k].timestamp, 1e-9);
    const Vec3 d = a.frames[k].pose.position - b.frames[k].pose.position;
    EXPECT_LT(d.norm(), 1e-9);
    const auto& qa = a.frames[k].pose.orientation;
    const auto& qb = b.frames[k].pose.orientation;
    EXPECT_NEAR(qa.w, qb.w, 1e-9);
    EXPECT_NEAR(qa.x, qb.x, 1e-9);
    EXPECT_NEAR(qa.y, qb.y, 1e-9);
    EXPECT_NEAR(qa.z, qb.z, 1e-9);
  }
}

TEST(Resample, FullRateIsTheRawFrames) {
  const auto tr = still_trace(90);
  const auto h = resample_history(tr, 2.0, 30, 1.0);
  ASSERT_EQ(h.samples.size(), 30u);
  const auto idx = sample_indices(tr, h);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(idx[i], 31 + i);
}

TEST(Resample, OneHertzKeepsOnlyTheAnchor) {
  const auto tr = still_trace(90);
  const auto h = resample_history(tr, 2.0, 1, 1.0);
  ASSERT_EQ(h.samples.size(), 1u);
  EXPECT_EQ(tr.nearest_frame(h.samples[0].timestamp), 60u);
}

TEST(Resample, TenHertzTakesEveryThirdFrame) {
  const auto tr = still_trace(90);
  const auto h = resample_history(tr, 2.0, 10, 1.0);
  const std::vector<std::size_t> expected{33, 36, 39, 42, 45, 48, 51, 54, 57, 60};
  EXPECT_EQ(sample_indices(tr, h), expected);
}

TEST(Resample, DropsInstantsBeforeTheTrace) {
  const auto tr = still_trace(90, 5.0);
  const auto h = resample_history(tr, 5.2, 10, 1.0);
  EXPECT_EQ(sample_indices(tr, h), (std::vector<std::size_t>{0, 3, 6}));
  EXPECT_THROW(resample_history(tr, 4.0, 10, 1.0), OutOfRange);
  EXPECT_THROW(resample_history(tr, 8.0, 10, 1.0), OutOfRange);
  EXPECT_THROW(resample_history(tr, 5.5, 0, 1.0), InvalidParameter);
}

TEST(Resample, CountIsCeilWindowTimesRate) {
  const auto tr = still_trace(150);
  std::mt19937_64 g(17);
  std::uniform_real_distribution<double> uw(0.05, 2.0);
  for (double rate : {30.0, 15.0, 10.0, 6.0, 5.0, 3.0, 2.0, 1.0}) {
    for (int n = 0; n < 40; ++n) {
      const double window = uw(g);
      const double f = 2.5 + (n % 30) / 30.0;
      const auto h = resample_history(tr, f, rate, window);
      EXPECT_EQ(h.samples.size(), static_cast<std::size_t>(std::ceil(window * rate - 1e-9)))
          << "rate " << rate << " window " << window;
      for (const auto& s : h.samples) {
        EXPECT_GT(s.timestamp, f - window - 1e-9);
        EXPECT_LE(s.timestamp, f + 1e-9);
      }
    }
  }
}

TEST(Manifest, ParsesAndResolvesPaths) {
  TempDir dir("manifest");
  const auto mpath = write_synthetic_dataset(dir.path(), {viewer_at("A", MotionKind::stationary, 0.0, 1)});
  const auto m = load_manifest(mpath);
  ASSERT_EQ(m.entries.size(), 1u);
  EXPECT_EQ(m.entries[0].user_id, "A");
  EXPECT_TRUE(std::filesystem::exists(m.entries[0].path));
  EXPECT_EQ(load_trace(m, m.entries[0]).size(), 360u);
}

TEST(Manifest, Errors) {
  using nlohmann::json;
  const json base{{"dataset", "d"},
                  {"fps", 30},
                  {"grid_bounds", {-1, -1, 0, 1, 1, 2}},
                  {"users", {{{"id", "a"}, {"path", "a.csv"}}}}};
  EXPECT_NO_THROW(parse_manifest(base, ".", false));

  json empty = base;
  empty["users"] = json::array();
  EXPECT_THROW(parse_manifest(empty, ".", false), ManifestError);

  json dup = base;
  dup["users"].push_back({{"id", "a"}, {"path", "b.csv"}});
  EXPECT_THROW(parse_manifest(dup, ".", false), ManifestError);

  json bounds = base;
  bounds["grid_bounds"] = {0, 0, 0, 0, 1, 1};
  EXPECT_THROW(parse_manifest(bounds, ".", false), ManifestError);

  json conv = base;
  conv["users"][0]["rotation_convention"] = "euler-zzz";
  EXPECT_THROW(parse_manifest(conv, ".", false), ManifestError);

  try {
    parse_manifest(base, "/nonexistent-dir", true);
    FAIL() << "missing trace accepted";
  } catch (const ManifestError& e) {
    EXPECT_NE(std::string(e.what()).find("a.csv"), std::string::npos);
  }
}
