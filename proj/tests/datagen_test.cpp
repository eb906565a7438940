// Copyright 2026 The onlinesfm Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <set>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "onlinesfm/datagen.hpp"
#include "onlinesfm/metric.hpp"
#include "onlinesfm/online_driver.hpp"
#include "oracles.hpp"

namespace onlinesfm {
namespace {

using Eigen::MatrixXd;
using Cells = std::set<std::pair<Index, Index>>;

double rank_ratio(const MatrixXd& w) {
  const auto sv = oracle::singular_values(w);
  return sv(4) / sv(0);
}

TEST(GenSphere, PointsOnUnitSphere) {
  const auto scene = gen_sphere(100, 200, 0);
  EXPECT_LE((scene.Sgt.rowwise().norm().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_EQ(scene.Wfull.rows(), 100);
  EXPECT_EQ(scene.Wfull.cols(), 400);
  EXPECT_LE(rank_ratio(scene.Wfull), 1e-10);
}

TEST(GenSphere, CamerasAreOrthographic) {
  const auto scene = gen_sphere(10, 50, 1);
  for (const auto& cam : scene.cameras) {
    EXPECT_TRUE((cam.P * cam.P.transpose()).isIdentity(1e-12));
    EXPECT_LE((cam.P * cam.viewDir).norm(), 1e-12);
  }
}

TEST(GenSphere, Reproducible) {
  EXPECT_EQ(gen_sphere(20, 10, 5).Wfull, gen_sphere(20, 10, 5).Wfull);
  EXPECT_NE(gen_sphere(20, 10, 5).Sgt, gen_sphere(20, 10, 6).Sgt);
  EXPECT_THROW(gen_sphere(3, 10, 0), Error);
}

TEST(BandedOcclusion, DefaultSphere) {
  auto scene = gen_sphere(100, 200, 0);
  const auto w = apply_banded_occlusion(scene);
  EXPECT_NEAR(w.missing_fraction(), 0.651, 0.05);
  EXPECT_GE(w.rows(), 120);
  EXPECT_LE(w.rows(), 170);
  EXPECT_EQ(std::size_t(w.rows()), scene.trackMap.size());
}

TEST(BandedOcclusion, VisibilityAndContiguity) {
  auto scene = gen_sphere(100, 200, 3);
  const auto w = apply_banded_occlusion(scene);
  std::vector<int> coverage(std::size_t(scene.points() * scene.frames()), 0);
  for (Index r = 0; r < w.rows(); ++r) {
    const Index p = scene.trackMap[std::size_t(r)];
    Index first = -1, last = -1;
    for (Index f = 0; f < scene.frames(); ++f) {
      const bool seen = w.observed(r, 2 * f);
      EXPECT_EQ(seen, w.observed(r, 2 * f + 1));
      if (!seen) continue;
      EXPECT_GT(scene.Sgt.row(p).dot(scene.cameras[std::size_t(f)].viewDir.transpose()), 0.0);
      EXPECT_EQ(w.values(r, 2 * f), scene.Wfull(p, 2 * f));
      if (first < 0) first = f;
      EXPECT_TRUE(last < 0 || last == f - 1) << "row " << r << " is not one band";
      last = f;
      ++coverage[std::size_t(p * scene.frames() + f)];
    }
    EXPECT_GE(first, 0);
  }
  for (Index p = 0; p < scene.points(); ++p)
    for (Index f = 0; f < scene.frames(); ++f) {
      const bool facing = scene.Sgt.row(p).dot(scene.cameras[std::size_t(f)].viewDir.transpose()) > 0.0;
      EXPECT_EQ(coverage[std::size_t(p * scene.frames() + f)], facing ? 1 : 0);
    }
}

TEST(BandedOcclusion, RowPointsFollowTrackMap) {
  auto scene = gen_sphere(30, 40, 4);
  apply_banded_occlusion(scene);
  const MatrixXd rp = scene.row_points();
  for (std::size_t r = 0; r < scene.trackMap.size(); ++r)
    EXPECT_EQ(rp.row(Index(r)), scene.Sgt.row(scene.trackMap[r]));
}

TEST(RandomOcclusion, ZeroFractionIsIdentity) {
  const auto scene = gen_sphere(20, 10, 0);
  const auto w = apply_random_occlusion(scene.Wfull, 0.0, 1);
  EXPECT_EQ(w.observed_count(), 20 * 20);
  EXPECT_EQ(w.values, scene.Wfull);
}

TEST(RandomOcclusion, HidesExactCount) {
  const auto scene = gen_sphere(100, 200, 0);
  const auto w = apply_random_occlusion(scene.Wfull, 0.651, 1);
  EXPECT_EQ(100 * 400 - w.observed_count(), 26040);
  for (Index j = 0; j < w.cols(); ++j) EXPECT_GE(w.observed_in_column(j), 5);
  EXPECT_EQ(apply_random_occlusion(scene.Wfull, 0.651, 1).mask, w.mask);
  EXPECT_NE(apply_random_occlusion(scene.Wfull, 0.651, 2).mask, w.mask);
}

TEST(RandomOcclusion, Infeasible) {
  const MatrixXd w = MatrixXd::Ones(6, 4);
  try {
    apply_random_occlusion(w, 0.5, 0, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OcclusionInfeasible);
  }
  EXPECT_THROW(apply_random_occlusion(w, 1.0, 0), Error);
}

TEST(Outliers, ZeroFractionIsIdentity) {
  const auto w = MeasurementMatrixd::dense(gen_sphere(10, 10, 0).Wfull);
  const auto out = inject_outliers(w, 0.0, 1);
  EXPECT_EQ(out.values, w.values);
  EXPECT_EQ(out.mask, w.mask);
}

TEST(Outliers, ExactCountInRange) {
  const auto w = MeasurementMatrixd::dense(gen_sphere(50, 10, 0).Wfull);
  ASSERT_EQ(w.observed_count(), 1000);
  std::vector<std::pair<Index, Index>> where;
  const auto out = inject_outliers(w, 0.1, 1, -100.0, 100.0, &where);
  EXPECT_EQ(where.size(), 100u);
  EXPECT_EQ(Cells(where.begin(), where.end()).size(), 100u);
  Index changed = 0;
  for (Index j = 0; j < w.cols(); ++j)
    for (Index i = 0; i < w.rows(); ++i)
      if (out.values(i, j) != w.values(i, j)) ++changed;
  EXPECT_EQ(changed, 100);
  for (const auto& [i, j] : where) {
    EXPECT_GE(out.values(i, j), -100.0);
    EXPECT_LE(out.values(i, j), 100.0);
  }
  EXPECT_EQ(out.mask, w.mask);
}

TEST(Outliers, SeedsGiveDifferentPositions) {
  const auto w = MeasurementMatrixd::dense(gen_sphere(50, 10, 0).Wfull);
  std::vector<std::pair<Index, Index>> a, b;
  inject_outliers(w, 0.1, 1, -100.0, 100.0, &a);
  inject_outliers(w, 0.1, 2, -100.0, 100.0, &b);
  EXPECT_NE(Cells(a.begin(), a.end()), Cells(b.begin(), b.end()));
}

TEST(Noise, OnlyObservedEntries) {
  auto w = MeasurementMatrixd::dense(MatrixXd::Zero(40, 40));
  w.hide(3, 3);
  const auto out = add_noise(w, 0.5, 2);
  EXPECT_EQ(out.values(3, 3), 0.0);
  EXPECT_NEAR(out.values.norm() / 40.0, 0.5, 0.05);
}

TEST(ProjectedModel, DinoShape) {
  const auto scene = gen_projected_model(random_cloud(319, 1), 100, 0.9, 2);
  const auto w = scene.measurement();
  EXPECT_EQ(w.rows(), 319);
  EXPECT_EQ(w.cols(), 200);
  EXPECT_EQ(w.observed_count(), 319 * 200 - 57420);
  EXPECT_NEAR(1.0 - w.missing_fraction(), 0.1, 1e-12);
  EXPECT_LE(rank_ratio(scene.Wfull), 1e-10);
  for (const auto& cam : scene.cameras) EXPECT_TRUE((cam.P * cam.P.transpose()).isIdentity(1e-12));
}

TEST(ProjectedModel, ExactlySolvableEndToEnd) {
  const auto scene = gen_projected_model(random_cloud(80, 3), 30, 0.5, 4);
  BatchConfig cfg;
  cfg.convergence.relDrop = 0.0;
  cfg.convergence.maxPasses = 500;
  const auto res = run_batch(scene.measurement(), cfg);
  EXPECT_LE(evaluate_structure(res.model, scene.Sgt).rmse3d, 1e-5);
}

TEST(FramesFrom, PairsColumns) {
  MeasurementMatrixd w(3, 4);
  w.set(0, 0, 1.0);
  w.set(0, 1, 2.0);
  w.set(1, 0, 3.0);
  w.set(2, 2, 4.0);
  w.set(2, 3, 5.0);
  const auto frames = frames_from(w);
  ASSERT_EQ(frames.size(), 2u);
  ASSERT_EQ(frames[0].observations.size(), 1u);
  EXPECT_EQ(frames[0].observations[0].trackId, 0);
  EXPECT_EQ(frames[0].observations[0].v, 2.0);
  ASSERT_EQ(frames[1].observations.size(), 1u);
  EXPECT_EQ(frames[1].observations[0].trackId, 2);
  EXPECT_EQ(frames[1].frameId, 1);
}

}  // namespace
}  // namespace onlinesfm
