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

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "onlinesfm/types.hpp"

namespace onlinesfm {

/// Partially observed n x 2m matrix of track coordinates. Column 2f holds the
/// x coordinates of frame f and column 2f+1 the y coordinates.
template <typename Scalar>
struct MeasurementMatrix {
  MatrixX<Scalar> values;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> mask;

  MeasurementMatrix() = default;
  MeasurementMatrix(Index rows, Index cols)
      : values(MatrixX<Scalar>::Zero(rows, cols)),
        mask(Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(rows, cols)) {}

  /// Fully observed matrix.
  static MeasurementMatrix dense(const MatrixX<Scalar>& w) {
    MeasurementMatrix out(w.rows(), w.cols());
    out.values = w;
    out.mask.setOnes();
    return out;
  }

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  bool observed(Index i, Index j) const { return mask(i, j) != 0; }

  void set(Index i, Index j, Scalar v) {
    values(i, j) = v;
    mask(i, j) = 1;
  }
  void hide(Index i, Index j) {
    values(i, j) = Scalar(0);
    mask(i, j) = 0;
  }

  Index observed_count() const {
    return mask.template cast<Index>().sum();
  }
  Index observed_in_column(Index j) const {
    return mask.col(j).template cast<Index>().sum();
  }
  double missing_fraction() const {
    const double total = static_cast<double>(rows() * cols());
    return total == 0.0 ? 0.0 : 1.0 - static_cast<double>(observed_count()) / total;
  }

  template <typename Other>
  MeasurementMatrix<Other> cast() const {
    MeasurementMatrix<Other> out;
    out.values = values.template cast<Other>();
    out.mask = mask;
    return out;
  }
};

using MeasurementMatrixd = MeasurementMatrix<double>;

/// One streamed column: observed row indices (strictly increasing) and values.
template <typename Scalar>
struct ObservedColumn {
  std::vector<Index> omega;
  VectorX<Scalar> values;
  Index columnId = 0;
  Index frameId = 0;

  Index size() const { return static_cast<Index>(omega.size()); }

  /// Throws unless indices are strictly increasing, below `rows`, and values
  /// are finite.
  void validate(Index rows) const {
    if (static_cast<Index>(omega.size()) != values.size()) {
      throw Error(ErrorCode::InvalidDimension, "observed column: index/value count mismatch");
    }
    for (std::size_t i = 0; i < omega.size(); ++i) {
      if (omega[i] < 0 || omega[i] >= rows) {
        throw Error(ErrorCode::IndexError, "observed column: row index out of range");
      }
      if (i > 0 && omega[i] <= omega[i - 1]) {
        throw Error(ErrorCode::InvalidDimension, "observed column: indices not strictly increasing");
      }
    }
    if (!values.allFinite()) {
      throw Error(ErrorCode::NumericalFault, "observed column: non-finite value");
    }
  }
};

template <typename Scalar>
ObservedColumn<Scalar> extract_column(const MeasurementMatrix<Scalar>& w, Index j) {
  ObservedColumn<Scalar> col;
  col.columnId = j;
  col.frameId = j / 2;
  for (Index i = 0; i < w.rows(); ++i) {
    if (w.observed(i, j)) col.omega.push_back(i);
  }
  col.values.resize(static_cast<Index>(col.omega.size()));
  for (std::size_t i = 0; i < col.omega.size(); ++i) {
    col.values(static_cast<Index>(i)) = w.values(col.omega[i], j);
  }
  return col;
}

template <typename Scalar>
std::vector<ObservedColumn<Scalar>> extract_columns(const MeasurementMatrix<Scalar>& w) {
  std::vector<ObservedColumn<Scalar>> cols;
  cols.reserve(static_cast<std::size_t>(w.cols()));
  for (Index j = 0; j < w.cols(); ++j) cols.push_back(extract_column(w, j));
  return cols;
}

}  // namespace onlinesfm
