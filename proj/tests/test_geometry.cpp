// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "marqoe/geometry.hpp"
#include "oracle.hpp"

using namespace marqoe;

namespace {

constexpr double pi = std::numbers::pi;

std::set<oracle::Cell> as_set(const CellSet& s) {
  std::set<oracle::Cell> out;
  for (const auto& c : s) out.emplace(c.i, c.j, c.k);
  return out;
}

Pose pose_of(const oracle::RandomPose& p) {
  return make_pose({p.position[0], p.position[1], p.position[2]}, {p.angles[0], p.angles[1], p.angles[2]});
}

void expect_matrix_near(const Mat3& m, const oracle::M3& o, double tol) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(m[i][j], o[i][j], tol) << i << "," << j;
}

}  // namespace

TEST(Pose, IdentityEuler) {
  const Pose p = make_pose({0, 0, 0}, {0, 0, 0});
  EXPECT_EQ(p.orientation, Quaternion::identity());
  EXPECT_EQ(p.position, (Vec3{0, 0, 0}));
}

TEST(Pose, QuaternionIsNormalized) {
  const Pose p = canonicalize_pose(RawPose{{1, 2, 3}, Quaternion{0, 0, 0, 2}});
  EXPECT_EQ(p.orientation, (Quaternion{0, 0, 0, 1}));
}

TEST(Pose, SignIsCanonical) {
  const Pose a = canonicalize_pose(RawPose{{}, Quaternion{-0.5, 0.5, -0.5, 0.5}});
  const Pose b = canonicalize_pose(RawPose{{}, Quaternion{0.5, -0.5, 0.5, -0.5}});
  EXPECT_EQ(a.orientation, b.orientation);
  EXPECT_GT(a.orientation.w, 0.0);
}

TEST(Pose, RollQuarterTurnMatchesMatrixOracle) {
  const Pose p = make_pose({}, {pi / 2, 0, 0});
  expect_matrix_near(p.orientation.to_matrix(), oracle::rotation_zyx(pi / 2, 0, 0), 1e-12);
}

TEST(Pose, EulerCompositionMatchesMatrixOracle) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(-pi, pi);
  for (int n = 0; n < 200; ++n) {
    const double r = u(g), p = 0.49 * u(g), y = u(g);
    const Pose pose = make_pose({}, {r, p, y});
    expect_matrix_near(pose.orientation.to_matrix(), oracle::rotation_zyx(r, p, y), 1e-12);
    EXPECT_NEAR(pose.orientation.norm(), 1.0, 1e-9);
    const EulerAngles back = pose.euler();
    EXPECT_NEAR(back.x, r, 1e-9);
    EXPECT_NEAR(back.y, p, 1e-9);
    EXPECT_NEAR(back.z, y, 1e-9);
  }
}

TEST(Pose, RejectsNonFinite) {
  EXPECT_THROW(make_pose({NAN, 0, 0}, {}), InvalidPose);
  EXPECT_THROW(make_pose({}, {0, INFINITY, 0}), InvalidPose);
  EXPECT_THROW(canonicalize_pose(RawPose{{}, Quaternion{0, 0, 0, 0}}), InvalidPose);
}

TEST(Frustum, Validation) {
  EXPECT_NO_THROW(Frustum{}.validate());
  EXPECT_THROW((Frustum{pi / 2, pi / 2, 1.0, 0.5}.validate()), InvalidParameter);
  EXPECT_THROW((Frustum{pi, pi / 2, 0.05, 100}.validate()), InvalidParameter);
  EXPECT_THROW((Frustum{pi / 2, 0.0, 0.05, 100}.validate()), InvalidParameter);
}

TEST(CellGrid, DefaultsAndIndexing) {
  const CellGrid g;
  EXPECT_EQ(g.cell_count(), 32);
  for (int l = 0; l < g.cell_count(); ++l) EXPECT_EQ(g.linear(g.index(l)), l);
  EXPECT_THROW(CellGrid({{0, 0, 0}, {1, 1, 1}}, {0, 1, 1}), InvalidParameter);
  EXPECT_THROW(CellGrid({{0, 0, 0}, {0, 1, 1}}, {1, 1, 1}), InvalidParameter);
}

TEST(Visibility, BeyondFarPlaneIsEmpty) {
  const Pose p = make_pose({1000, 0, 1}, {0, 0, pi});
  EXPECT_TRUE(visible_cells(p, Frustum{}, CellGrid{}, Occlusion::off).empty());
}

TEST(Visibility, WholeGridInView) {
  // far enough back that the 90 degree frustum covers every center
  const Pose p = make_pose({-6, 0, 1}, {0, 0, 0});
  const oracle::Camera cam{{-6, 0, 1}, oracle::rotation_zyx(0, 0, 0)};
  const auto expected = oracle::visible(cam, oracle::Grid{}, false);
  ASSERT_EQ(expected.size(), 32u);
  EXPECT_EQ(as_set(visible_cells(p, Frustum{}, CellGrid{}, Occlusion::off)), expected);
}

TEST(Visibility, CollinearCentersKeepOnlyTheNearer) {
  // two cells of a 2x1x1 grid on the camera's line of sight
  const CellGrid grid({{0, -0.5, -0.5}, {2, 0.5, 0.5}}, {2, 1, 1});
  const Pose p = make_pose({-3, 0, 0}, {0, 0, 0});
  const CellSet open = visible_cells(p, Frustum{}, grid, Occlusion::off);
  const CellSet occluded = visible_cells(p, Frustum{}, grid, Occlusion::on);
  EXPECT_EQ(open.size(), 2u);
  ASSERT_EQ(occluded.size(), 1u);
  EXPECT_EQ(occluded.members().front(), (CellIndex{0, 0, 0}));

  oracle::Grid og{{0, -0.5, -0.5}, {2, 0.5, 0.5}, {2, 1, 1}};
  const oracle::Camera cam{{-3, 0, 0}, oracle::rotation_zyx(0, 0, 0)};
  EXPECT_EQ(as_set(occluded), oracle::visible(cam, og, true));
}

TEST(Visibility, SegmentHitsBox) {
  const Aabb box{{0, 0, 0}, {1, 1, 1}};
  EXPECT_TRUE(segment_hits_box({-1, 0.5, 0.5}, {2, 0.5, 0.5}, box));
  EXPECT_FALSE(segment_hits_box({-1, 2, 0.5}, {2, 2, 0.5}, box));
  EXPECT_FALSE(segment_hits_box({-2, 0.5, 0.5}, {-1, 0.5, 0.5}, box));  // stops short
  EXPECT_TRUE(segment_hits_box({-1, 0.5, 0.5}, {0.5, 0.5, 0.5}, box));  // ends inside
}

TEST(Visibility, RandomPosesMatchBruteForce) {
  std::mt19937_64 g(101);
  const oracle::Grid og;
  for (int n = 0; n < 300; ++n) {
    const auto rp = oracle::random_pose(g);
    const Pose p = pose_of(rp);
    const auto cam = oracle::camera_of(rp);
    const CellSet on = visible_cells(p, Frustum{}, CellGrid{}, Occlusion::on);
    const CellSet off = visible_cells(p, Frustum{}, CellGrid{}, Occlusion::off);
    EXPECT_EQ(as_set(off), oracle::visible(cam, og, false)) << "pose " << n;
    EXPECT_EQ(as_set(on), oracle::visible(cam, og, true)) << "pose " << n;
    EXPECT_TRUE(on.is_subset_of(off));
  }
}

TEST(Vchr, Conventions) {
  const Pose looking = make_pose({3, 0, 1}, {0, 0, pi});
  const Pose away = make_pose({3, 0, 1}, {0, 0, 0});
  const Frustum f;
  const CellGrid g;
  ASSERT_FALSE(visible_cells(looking, f, g, Occlusion::on).empty());
  ASSERT_TRUE(visible_cells(away, f, g, Occlusion::on).empty());
  EXPECT_EQ(vchr(looking, looking, f, g, Occlusion::on), 1.0);
  EXPECT_EQ(vchr(looking, away, f, g, Occlusion::on), 0.0);
  EXPECT_EQ(vchr(away, away, f, g, Occlusion::on), 1.0);  // both empty
}

TEST(Vchr, RandomPairsAreSymmetricBoundedAndMatchOracle) {
  std::mt19937_64 g(7);
  const oracle::Grid og;
  for (int n = 0; n < 300; ++n) {
    const auto a = oracle::random_pose(g), b = oracle::random_pose(g);
    const double v = vchr(pose_of(a), pose_of(b), Frustum{}, CellGrid{}, Occlusion::on);
    EXPECT_EQ(v, vchr(pose_of(b), pose_of(a), Frustum{}, CellGrid{}, Occlusion::on));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_EQ(v, oracle::iou(oracle::visible(oracle::camera_of(a), og, true),
                             oracle::visible(oracle::camera_of(b), og, true)));
    EXPECT_EQ(vchr(pose_of(a), pose_of(a), Frustum{}, CellGrid{}, Occlusion::on), 1.0);
  }
}
