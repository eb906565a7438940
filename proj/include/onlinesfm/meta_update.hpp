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

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Core>

#include "onlinesfm/center_svd.hpp"
#include "onlinesfm/factor_model.hpp"
#include "onlinesfm/measurement.hpp"
#include "onlinesfm/robust_l1.hpp"
#include "onlinesfm/types.hpp"
#include "onlinesfm/weights.hpp"

namespace onlinesfm {

/// Residual scaling per column visit: constant 1, or C / (C + visits).
struct AlphaSchedule {
  enum class Kind { Constant, Decaying };
  Kind kind = Kind::Constant;
  double c = 100.0;

  static AlphaSchedule constant() { return {}; }
  static AlphaSchedule decaying(double c) {
    if (!(c > 0.0)) throw Error(ErrorCode::InvalidDimension, "decaying schedule needs C > 0");
    return {Kind::Decaying, c};
  }

  double alpha(Index visits) const {
    return kind == Kind::Constant ? 1.0 : c / (c + static_cast<double>(visits));
  }
};

enum class WeightSolver { L2, L1 };

struct UpdateConfig {
  AlphaSchedule alphaSchedule;
  WeightSolver weightSolver = WeightSolver::L2;
  AdmmParams admm;
  /// Columns with fewer observed entries are skipped; unset means k + 1.
  std::optional<Index> minObserved;
  double residualFloorRel = 1e-12;
  double residualFloorAbs = 1e-300;

  Index min_observed(Index k) const { return minObserved.value_or(k + 1); }
};

template <typename Scalar>
struct UpdateOutcome {
  VectorX<Scalar> w;  // last entry is the ones-column weight when constrained
  Scalar rNorm = 0;
  VectorX<Scalar> centerSingularValues;
  Scalar droppedValue = 0;
  bool residualZeroed = false;
  bool l1Converged = true;
};

/// One iteration of the meta-algorithm, writing the new column's coefficients
/// into row `row` of R. `row == model.cols()` appends; a smaller value treats
/// that row as absent (its previous content is ignored and overwritten), which
/// is how revisits place the refreshed row back at its original position.
template <typename Scalar>
UpdateOutcome<Scalar> update_column(FactorModel<Scalar>& model, const ObservedColumn<Scalar>& col, Scalar alpha,
                                    const UpdateConfig& config, Index row) {
  const Index n = model.rows();
  const Index k = model.rank();
  const Index kb = model.bar_rank();
  const Index t = model.cols();
  if (row < 0 || row > t) throw Error(ErrorCode::IndexError, "update_column: target row out of range");
  if (col.size() < config.min_observed(k)) {
    throw Error(ErrorCode::ColumnSkipped, "column has " + std::to_string(col.size()) +
                                              " observations, need " + std::to_string(config.min_observed(k)));
  }
  col.validate(n);
  if (!std::isfinite(alpha) || alpha < Scalar(0)) {
    throw Error(ErrorCode::NumericalFault, "update_column: alpha must be finite and >= 0");
  }

  UpdateOutcome<Scalar> out;
  VectorX<Scalar> r;
  if (config.weightSolver == WeightSolver::L2) {
    auto fit = solve_weights_l2(model.U, col);
    out.w = std::move(fit.w);
    r = std::move(fit.residual);
  } else {
    auto fit = solve_weights_l1(model.U, col, config.admm);
    out.w = std::move(fit.wInlier);
    r = std::move(fit.gamma);
    out.l1Converged = fit.converged;
  }
  if (!out.w.allFinite() || !r.allFinite()) {
    throw Error(ErrorCode::NumericalFault, "update_column: non-finite weights or residual");
  }

  out.rNorm = r.norm();
  const Scalar floor = std::max(Scalar(config.residualFloorRel) * col.values.norm(),
                                Scalar(config.residualFloorAbs));
  out.residualZeroed = !(out.rNorm > floor);
  const Scalar rho = out.residualZeroed ? Scalar(0) : alpha * out.rNorm;

  const auto center = center_svd<Scalar>(model.d.head(kb), out.w.head(kb), rho);
  out.centerSingularValues = center.sigma;
  out.droppedValue = center.sigma(kb);

  // Ubar <- [Ubar, r/|r|] Utilde, last column dropped. r lives on omega only.
  const MatrixX<Scalar> u_rot = center.U.topLeftCorner(kb, kb);
  model.U.leftCols(kb) = (model.U.leftCols(kb) * u_rot).eval();
  if (!out.residualZeroed) {
    const RowVectorX<Scalar> u_last = center.U.row(kb).head(kb);
    for (std::size_t i = 0; i < col.omega.size(); ++i) {
      model.U.row(col.omega[i]).head(kb) += (r(static_cast<Index>(i)) / out.rNorm) * u_last;
    }
  }

  // Rbar <- blockdiag(Rbar, 1) Vtilde [Sigma], last column dropped.
  MatrixX<Scalar> r_rot = center.V.topLeftCorner(kb, kb);
  RowVectorX<Scalar> new_row = center.V.row(kb).head(kb);
  if (model.variant == Variant::Sage) {
    r_rot = r_rot * center.sigma.head(kb).asDiagonal();
    new_row = new_row.cwiseProduct(center.sigma.head(kb).transpose());
    model.d.head(kb).setOnes();
  } else {
    model.d.head(kb) = center.sigma.head(kb);
  }
  if (t > 0) model.R.leftCols(kb) = (model.R.leftCols(kb) * r_rot).eval();
  if (row == t) model.R.conservativeResize(t + 1, k);
  model.R.row(row).head(kb) = new_row;
  // tau gains gamma / sqrt(n); stored scaled by sqrt(n).
  if (model.onesColumn) model.R(row, k - 1) = out.w(k - 1);

  if (!model.U.allFinite() || !model.R.allFinite()) {
    throw Error(ErrorCode::NumericalFault, "update_column: non-finite factors");
  }
  return out;
}

/// Absorbs a new column (appending a row to R).
template <typename Scalar>
UpdateOutcome<Scalar> meta_update(FactorModel<Scalar>& model, const ObservedColumn<Scalar>& col, Scalar alpha,
                                  const UpdateConfig& config) {
  return update_column(model, col, alpha, config, model.cols());
}

}  // namespace onlinesfm
