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

#include <Eigen/Core>
#include <Eigen/QR>

#include "onlinesfm/measurement.hpp"
#include "onlinesfm/types.hpp"

namespace onlinesfm {

/// Projection weights and the residual restricted to the observed rows.
/// Entries of the residual off the observed set are zero by definition.
template <typename Scalar>
struct ProjectionFit {
  VectorX<Scalar> w;
  VectorX<Scalar> residual;  // |omega| entries, aligned with col.omega
};

template <typename Scalar>
MatrixX<Scalar> observed_rows(const MatrixX<Scalar>& u, const ObservedColumn<Scalar>& col) {
  return u(col.omega, Eigen::all);
}

/// Least-residual-norm weights of the observed entries on U_omega.
///
/// Uses a complete orthogonal decomposition, so rank-deficient U_omega yields
/// the minimum-norm solution. One refinement step brings U_omega^T r to
/// working precision.
template <typename Scalar>
ProjectionFit<Scalar> solve_weights_l2(const MatrixX<Scalar>& u, const ObservedColumn<Scalar>& col) {
  if (col.omega.empty()) {
    throw Error(ErrorCode::EmptyObservation, "solve_weights_l2: empty observation set");
  }
  const MatrixX<Scalar> uo = observed_rows(u, col);
  Eigen::CompleteOrthogonalDecomposition<MatrixX<Scalar>> cod(uo);
  ProjectionFit<Scalar> fit;
  fit.w = cod.solve(col.values);
  fit.residual = col.values - uo * fit.w;
  const VectorX<Scalar> dw = cod.solve(fit.residual);
  fit.w += dw;
  fit.residual = col.values - uo * fit.w;
  return fit;
}

/// Dense n-vector holding `residual` on omega and zero elsewhere.
template <typename Scalar>
VectorX<Scalar> scatter(Index n, const ObservedColumn<Scalar>& col, const VectorX<Scalar>& onOmega) {
  VectorX<Scalar> out = VectorX<Scalar>::Zero(n);
  for (std::size_t i = 0; i < col.omega.size(); ++i) out(col.omega[i]) = onOmega(static_cast<Index>(i));
  return out;
}

/// Observed entries kept as-is, the rest predicted by U w.
template <typename Scalar>
VectorX<Scalar> impute_column(const MatrixX<Scalar>& u, const VectorX<Scalar>& w,
                              const VectorX<Scalar>& residualOnOmega, const ObservedColumn<Scalar>& col) {
  if (u.cols() != w.size() || residualOnOmega.size() != col.size()) {
    throw Error(ErrorCode::InvalidDimension, "impute_column: dimension mismatch");
  }
  VectorX<Scalar> v = u * w;
  for (std::size_t i = 0; i < col.omega.size(); ++i) v(col.omega[i]) += residualOnOmega(static_cast<Index>(i));
  return v;
}

}  // namespace onlinesfm
