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
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "onlinesfm/measurement.hpp"
#include "onlinesfm/types.hpp"
#include "onlinesfm/weights.hpp"

namespace onlinesfm {

struct AdmmParams {
  double rho = 1.8;
  int maxIters = 60;
  double tolAbs = 1e-7;
  double tolRel = 1e-5;
  /// Residuals beyond this many robust standard deviations (1.4826 * MAD)
  /// are attributed to the sparse component.
  double outlierCut = 3.0;
};

/// Result of the l1 projection. All vectors are indexed like col.omega.
template <typename Scalar>
struct SparseFit {
  VectorX<Scalar> w;        // l1 weights
  VectorX<Scalar> s;        // sparse outlier estimate
  VectorX<Scalar> gamma;    // residual surrogate, orthogonal to U_omega
  VectorX<Scalar> wInlier;  // least-squares weights of v - s; U_omega wInlier + gamma == v - s
  VectorX<Scalar> dual;     // unscaled multiplier of the constraint U w + z = v
  Scalar primalResidual = 0;
  int iters = 0;
  bool converged = false;
};

namespace detail {

template <typename Scalar>
VectorX<Scalar> soft_threshold(const VectorX<Scalar>& x, Scalar kappa) {
  return (x.array() - kappa).max(Scalar(0)) - (-x.array() - kappa).max(Scalar(0));
}

template <typename Scalar>
Scalar median_abs(const VectorX<Scalar>& x) {
  if (x.size() == 0) return Scalar(0);
  std::vector<Scalar> a(x.data(), x.data() + x.size());
  for (auto& e : a) e = std::abs(e);
  const auto mid = a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2);
  std::nth_element(a.begin(), mid, a.end());
  if (a.size() % 2 == 1) return *mid;
  const Scalar upper = *mid;
  const Scalar lower = *std::max_element(a.begin(), mid);
  return (lower + upper) / Scalar(2);
}

}  // namespace detail

/// Weights minimizing ||U_omega w - v_omega||_1 via scaled-form ADMM on
///   minimize ||z||_1  subject to  U_omega w + z = v_omega.
///
/// The problem is solved on data normalized by its RMS so that rho acts on a
/// fixed scale. Hitting maxIters is not an error; `converged` reports it.
template <typename Scalar>
SparseFit<Scalar> solve_weights_l1(const MatrixX<Scalar>& u, const ObservedColumn<Scalar>& col,
                                   const AdmmParams& params = {}) {
  if (col.omega.empty()) {
    throw Error(ErrorCode::EmptyObservation, "solve_weights_l1: empty observation set");
  }
  if (!(params.rho > 0.0) || params.maxIters < 1) {
    throw Error(ErrorCode::InvalidDimension, "solve_weights_l1: rho must be > 0 and maxIters >= 1");
  }
  const MatrixX<Scalar> uo = observed_rows(u, col);
  const Index p = uo.rows();
  const Index k = uo.cols();
  const Scalar rho = Scalar(params.rho);

  Scalar scale = col.values.norm() / std::sqrt(Scalar(p));
  if (!(scale > Scalar(0))) scale = Scalar(1);
  const VectorX<Scalar> v = col.values / scale;

  Eigen::CompleteOrthogonalDecomposition<MatrixX<Scalar>> cod(uo);
  VectorX<Scalar> w = cod.solve(v);
  VectorX<Scalar> uw = uo * w;
  VectorX<Scalar> z = v - uw;
  VectorX<Scalar> y = VectorX<Scalar>::Zero(p);  // scaled dual

  SparseFit<Scalar> fit;
  const Scalar sqrt_p = std::sqrt(Scalar(p));
  const Scalar sqrt_k = std::sqrt(Scalar(k));
  const Scalar v_norm = v.norm();
  for (int it = 0; it < params.maxIters; ++it) {
    w = cod.solve(v - z - y);
    uw.noalias() = uo * w;
    const VectorX<Scalar> z_old = z;
    z = detail::soft_threshold<Scalar>(v - uw - y, Scalar(1) / rho);
    const VectorX<Scalar> primal = uw + z - v;
    y += primal;
    fit.iters = it + 1;

    const Scalar r_norm = primal.norm();
    const Scalar s_norm = rho * (uo.transpose() * (z - z_old)).norm();
    const Scalar eps_pri =
        sqrt_p * Scalar(params.tolAbs) + Scalar(params.tolRel) * std::max({uw.norm(), z.norm(), v_norm});
    const Scalar eps_dual =
        sqrt_k * Scalar(params.tolAbs) + Scalar(params.tolRel) * rho * (uo.transpose() * y).norm();
    fit.primalResidual = r_norm * scale;
    if (r_norm <= eps_pri && s_norm <= eps_dual) {
      fit.converged = true;
      break;
    }
  }

  fit.w = w * scale;
  fit.dual = y * (rho * scale);
  const VectorX<Scalar> e = col.values - uo * fit.w;
  const Scalar cut = Scalar(params.outlierCut) * Scalar(1.4826) * detail::median_abs<Scalar>(e);
  fit.s = detail::soft_threshold<Scalar>(e, cut);

  const VectorX<Scalar> cleaned = col.values - fit.s;
  fit.wInlier = cod.solve(cleaned);
  fit.gamma = cleaned - uo * fit.wInlier;
  fit.wInlier += cod.solve(fit.gamma);
  fit.gamma = cleaned - uo * fit.wInlier;
  if (!fit.w.allFinite() || !fit.gamma.allFinite()) {
    throw Error(ErrorCode::NumericalFault, "solve_weights_l1: non-finite iterate");
  }
  return fit;
}

}  // namespace onlinesfm
