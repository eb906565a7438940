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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "onlinesfm/factor_model.hpp"
#include "onlinesfm/measurement.hpp"
#include "onlinesfm/online_driver.hpp"
#include "onlinesfm/stream.hpp"

namespace onlinesfm {

// Sparse measurement matrix: "<rows> <cols>" then "<row> <col> <value>"
// lines, 0-based, '#' starts a comment line.
MeasurementMatrixd read_matrix(std::istream& in, const std::string& name = "<stream>");
MeasurementMatrixd read_matrix(const std::filesystem::path& path);
void write_matrix(const MeasurementMatrixd& w, std::ostream& out);
void write_matrix(const MeasurementMatrixd& w, const std::filesystem::path& path);

// Track stream: "frame <f>" followed by "<trackId> <u> <v>" lines.
std::vector<Frame> read_tracks(std::istream& in, const std::string& name = "<stream>");
std::vector<Frame> read_tracks(const std::filesystem::path& path);
void write_tracks(const std::vector<Frame>& frames, std::ostream& out);
void write_tracks(const std::vector<Frame>& frames, const std::filesystem::path& path);

// One record per line: index seconds rmse2d cols rows. Seconds are written
// as 0 when `timing` is false so that logs compare byte for byte.
void write_runlog(const RunLog& log, std::ostream& out, bool timing = true);
void write_runlog(const RunLog& log, const std::filesystem::path& path, bool timing = true);
RunLog read_runlog(std::istream& in, const std::string& name = "<stream>");
RunLog read_runlog(const std::filesystem::path& path);

void write_model(const FactorModel<double>& model, std::ostream& out);
void write_model(const FactorModel<double>& model, const std::filesystem::path& path);
FactorModel<double> read_model(std::istream& in, const std::string& name = "<stream>");
FactorModel<double> read_model(const std::filesystem::path& path);

/// Ground truth per measurement row: the source point id and its position.
struct GroundTruth {
  std::vector<Index> pointIds;
  Eigen::MatrixXd rowPoints;  // rows x 3
};

void write_ground_truth(const GroundTruth& gt, std::ostream& out);
void write_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);
GroundTruth read_ground_truth(std::istream& in, const std::string& name = "<stream>");
GroundTruth read_ground_truth(const std::filesystem::path& path);

/// "x y z" per line.
void write_point_cloud(const Eigen::MatrixXd& s, std::ostream& out);
Eigen::MatrixXd read_point_cloud(std::istream& in, const std::string& name = "<stream>");
/// Per frame: "<f> mx0 mx1 mx2 my0 my1 my2 tx ty".
void write_cameras(const Eigen::MatrixXd& m, const Eigen::VectorXd& tau, std::ostream& out);

}  // namespace onlinesfm
