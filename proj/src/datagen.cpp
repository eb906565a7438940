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

#include "onlinesfm/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Geometry>

namespace onlinesfm {

namespace {

using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

void project_all(SyntheticScene& scene) {
  const Index n = scene.points();
  const Index m = scene.frames();
  scene.Wfull.resize(n, 2 * m);
  for (Index f = 0; f < m; ++f) {
    const Camera& cam = scene.cameras[static_cast<std::size_t>(f)];
    scene.Wfull.middleCols(2 * f, 2) = scene.Sgt * cam.P.transpose();
    scene.Wfull.col(2 * f).array() += cam.t(0);
    scene.Wfull.col(2 * f + 1).array() += cam.t(1);
  }
  scene.mask = Mask::Ones(n, 2 * m);
  scene.trackMap.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) scene.trackMap[static_cast<std::size_t>(i)] = i;
}

std::vector<std::pair<Index, Index>> observed_entries(const MeasurementMatrixd& w) {
  std::vector<std::pair<Index, Index>> out;
  out.reserve(static_cast<std::size_t>(w.observed_count()));
  for (Index j = 0; j < w.cols(); ++j)
    for (Index i = 0; i < w.rows(); ++i)
      if (w.observed(i, j)) out.emplace_back(i, j);
  return out;
}

}  // namespace

Eigen::MatrixXd SyntheticScene::row_points() const {
  Eigen::MatrixXd out(static_cast<Index>(trackMap.size()), 3);
  for (std::size_t r = 0; r < trackMap.size(); ++r) out.row(static_cast<Index>(r)) = Sgt.row(trackMap[r]);
  return out;
}

MeasurementMatrixd SyntheticScene::measurement() const {
  const Index rows = static_cast<Index>(trackMap.size());
  MeasurementMatrixd w(rows, Wfull.cols());
  for (Index r = 0; r < rows; ++r) {
    const Index p = trackMap[static_cast<std::size_t>(r)];
    for (Index j = 0; j < Wfull.cols(); ++j)
      if (mask(r, j)) w.set(r, j, Wfull(p, j));
  }
  return w;
}

SyntheticScene gen_sphere(const SphereConfig& config) {
  if (config.points < 4 || config.frames < 3) {
    throw Error(ErrorCode::InvalidDimension, "gen_sphere needs at least 4 points and 3 frames");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss;
  SyntheticScene scene;
  scene.Sgt.resize(config.points, 3);
  for (Index i = 0; i < config.points; ++i) {
    Eigen::RowVector3d p;
    do {
      p << gauss(rng), gauss(rng), gauss(rng);
    } while (p.norm() < 1e-8);
    scene.Sgt.row(i) = p.normalized();
  }

  const double two_pi = 2.0 * std::numbers::pi;
  for (Index f = 0; f < config.frames; ++f) {
    const double s = static_cast<double>(f) / static_cast<double>(config.frames);
    const double az = two_pi * s;
    const double el = config.elevationAmplitude * std::sin(two_pi * config.elevationCycles * s);
    Camera cam;
    cam.viewDir << std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el);
    const Eigen::Vector3d ex(-std::sin(az), std::cos(az), 0.0);
    const Eigen::Vector3d ey = cam.viewDir.cross(ex).normalized();
    cam.P.row(0) = ex.transpose();
    cam.P.row(1) = ey.transpose();
    cam.t << config.translationAmplitude * std::sin(two_pi * s), config.translationAmplitude * std::cos(2.0 * two_pi * s);
    scene.cameras.push_back(cam);
  }
  project_all(scene);
  return scene;
}

SyntheticScene gen_sphere(Index points, Index frames, std::uint64_t seed) {
  SphereConfig cfg;
  cfg.points = points;
  cfg.frames = frames;
  cfg.seed = seed;
  return gen_sphere(cfg);
}

Eigen::MatrixXd random_cloud(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::MatrixXd out(n, 3);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < 3; ++c) out(i, c) = unit(rng);
  return out;
}

SyntheticScene gen_projected_model(const Eigen::MatrixXd& sgt, Index frames, double missingFraction,
                                   std::uint64_t seed, Index minPerColumn) {
  if (sgt.cols() != 3 || sgt.rows() < 1 || frames < 1) {
    throw Error(ErrorCode::InvalidDimension, "gen_projected_model: bad point set or frame count");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  SyntheticScene scene;
  scene.Sgt = sgt;
  for (Index f = 0; f < frames; ++f) {
    Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    q.normalize();
    const Eigen::Matrix3d rot = q.toRotationMatrix();
    Camera cam;
    cam.P = rot.topRows(2);
    cam.viewDir = rot.row(2).transpose();
    cam.t << 0.1 * gauss(rng), 0.1 * gauss(rng);
    scene.cameras.push_back(cam);
  }
  project_all(scene);
  const auto w = apply_random_occlusion(scene.Wfull, missingFraction, rng(), minPerColumn);
  scene.mask = w.mask;
  return scene;
}

MeasurementMatrixd apply_banded_occlusion(SyntheticScene& scene) {
  const Index n = scene.points();
  const Index m = scene.frames();
  std::vector<Index> track_map;
  std::vector<std::pair<Index, Index>> runs;  // [first, last] frame per row
  for (Index p = 0; p < n; ++p) {
    Index start = -1;
    for (Index f = 0; f <= m; ++f) {
      const bool visible =
          f < m && scene.Sgt.row(p).dot(scene.cameras[static_cast<std::size_t>(f)].viewDir.transpose()) > 0.0;
      if (visible && start < 0) start = f;
      if (!visible && start >= 0) {
        track_map.push_back(p);
        runs.emplace_back(start, f - 1);
        start = -1;
      }
    }
  }
  const Index rows = static_cast<Index>(track_map.size());
  scene.mask = Mask::Zero(rows, 2 * m);
  for (Index r = 0; r < rows; ++r) {
    const auto [first, last] = runs[static_cast<std::size_t>(r)];
    scene.mask.row(r).segment(2 * first, 2 * (last - first + 1)).setOnes();
  }
  scene.trackMap = std::move(track_map);
  return scene.measurement();
}

MeasurementMatrixd apply_random_occlusion(const MeasurementMatrixd& w, double missingFraction, std::uint64_t seed,
                                          Index minPerColumn) {
  if (!(missingFraction >= 0.0 && missingFraction < 1.0)) {
    throw Error(ErrorCode::InvalidDimension, "missing fraction must lie in [0, 1)");
  }
  auto entries = observed_entries(w);
  const auto hide = static_cast<std::size_t>(std::llround(missingFraction * static_cast<double>(w.rows() * w.cols())));
  if (hide > entries.size()) {
    throw Error(ErrorCode::OcclusionInfeasible, "more entries to hide than are observed");
  }
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::shuffle(entries.begin(), entries.end(), rng);
    MeasurementMatrixd out = w;
    for (std::size_t e = 0; e < hide; ++e) out.hide(entries[e].first, entries[e].second);
    bool ok = true;
    for (Index j = 0; j < out.cols() && ok; ++j) ok = out.observed_in_column(j) >= minPerColumn;
    if (ok) return out;
  }
  throw Error(ErrorCode::OcclusionInfeasible,
              "no occlusion pattern keeps " + std::to_string(minPerColumn) + " entries per column");
}

MeasurementMatrixd apply_random_occlusion(const Eigen::MatrixXd& w, double missingFraction, std::uint64_t seed,
                                          Index minPerColumn) {
  return apply_random_occlusion(MeasurementMatrixd::dense(w), missingFraction, seed, minPerColumn);
}

MeasurementMatrixd inject_outliers(const MeasurementMatrixd& w, double fraction, std::uint64_t seed, double lo,
                                   double hi, std::vector<std::pair<Index, Index>>* positions) {
  auto entries = observed_entries(w);
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(entries.size())));
  std::mt19937_64 rng(seed);
  std::shuffle(entries.begin(), entries.end(), rng);
  std::uniform_real_distribution<double> draw(lo, hi);
  MeasurementMatrixd out = w;
  for (std::size_t e = 0; e < std::min(count, entries.size()); ++e) out.set(entries[e].first, entries[e].second, draw(rng));
  if (positions) positions->assign(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(std::min(count, entries.size())));
  return out;
}

MeasurementMatrixd add_noise(const MeasurementMatrixd& w, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  MeasurementMatrixd out = w;
  for (Index j = 0; j < w.cols(); ++j)
    for (Index i = 0; i < w.rows(); ++i)
      if (w.observed(i, j)) out.values(i, j) += gauss(rng);
  return out;
}

std::vector<Frame> frames_from(const MeasurementMatrixd& w) {
  std::vector<Frame> frames;
  for (Index f = 0; 2 * f + 1 < w.cols(); ++f) {
    Frame frame;
    frame.frameId = f;
    for (Index i = 0; i < w.rows(); ++i) {
      if (w.observed(i, 2 * f) && w.observed(i, 2 * f + 1)) {
        frame.observations.push_back({static_cast<std::int64_t>(i), w.values(i, 2 * f), w.values(i, 2 * f + 1)});
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace onlinesfm
