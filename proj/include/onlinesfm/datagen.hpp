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

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "onlinesfm/measurement.hpp"
#include "onlinesfm/stream.hpp"
#include "onlinesfm/types.hpp"

namespace onlinesfm {

/// Orthographic camera: image point = P * X + t.
struct Camera {
  Eigen::Matrix<double, 2, 3> P = Eigen::Matrix<double, 2, 3>::Zero();
  Eigen::Vector2d t = Eigen::Vector2d::Zero();
  Eigen::Vector3d viewDir = Eigen::Vector3d::UnitZ();  // unit vector towards the camera
};

struct SyntheticScene {
  Eigen::MatrixXd Sgt;               // n x 3
  std::vector<Camera> cameras;       // m
  Eigen::MatrixXd Wfull;             // n x 2m, complete
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> mask;
  std::vector<Index> trackMap;       // row -> point id

  Index points() const { return Sgt.rows(); }
  Index frames() const { return static_cast<Index>(cameras.size()); }
  /// Ground truth point for each measurement row.
  Eigen::MatrixXd row_points() const;
  /// Observed entries of Wfull under the current mask (rows follow trackMap).
  MeasurementMatrixd measurement() const;
};

struct SphereConfig {
  Index points = 100;
  Index frames = 200;
  std::uint64_t seed = 0;
  double elevationAmplitude = 0.5;   // radians
  double elevationCycles = 0.5;      // oscillations per revolution
  double translationAmplitude = 0.2;
};

SyntheticScene gen_sphere(const SphereConfig& config);
SyntheticScene gen_sphere(Index points, Index frames, std::uint64_t seed);

/// Projects `sgt` onto random orthographic cameras and hides
/// `missingFraction` of the entries uniformly at random.
SyntheticScene gen_projected_model(const Eigen::MatrixXd& sgt, Index frames, double missingFraction,
                                   std::uint64_t seed, Index minPerColumn = 5);

/// Points uniformly distributed in [-1, 1]^3.
Eigen::MatrixXd random_cloud(Index n, std::uint64_t seed);

/// Hemisphere visibility. Every visibility run becomes its own row;
/// scene.trackMap and scene.mask are rewritten to the split layout.
MeasurementMatrixd apply_banded_occlusion(SyntheticScene& scene);

MeasurementMatrixd apply_random_occlusion(const MeasurementMatrixd& w, double missingFraction, std::uint64_t seed,
                                          Index minPerColumn = 5);
MeasurementMatrixd apply_random_occlusion(const Eigen::MatrixXd& w, double missingFraction, std::uint64_t seed,
                                          Index minPerColumn = 5);

MeasurementMatrixd inject_outliers(const MeasurementMatrixd& w, double fraction, std::uint64_t seed,
                                   double lo = -100.0, double hi = 100.0,
                                   std::vector<std::pair<Index, Index>>* positions = nullptr);

MeasurementMatrixd add_noise(const MeasurementMatrixd& w, double sigma, std::uint64_t seed);

/// One frame per column pair; a row contributes when both coordinates are
/// observed. Track ids are row indices.
std::vector<Frame> frames_from(const MeasurementMatrixd& w);

}  // namespace onlinesfm
