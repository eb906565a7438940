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
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "onlinesfm/types.hpp"

namespace onlinesfm {

/// Full SVD of a small square matrix, A = U diag(sigma) V^T, with U and V
/// orthogonal and sigma sorted nonincreasing.
template <typename Scalar>
struct SmallSvd {
  MatrixX<Scalar> U;
  VectorX<Scalar> sigma;
  MatrixX<Scalar> V;
};

/// One-sided (Hestenes) Jacobi SVD of a square matrix.
///
/// Equal singular values keep the order in which their columns appear in the
/// input, so the last-indexed direction among ties ends up last. Left vectors
/// of numerically zero singular values are completed from the standard basis
/// in index order, which keeps them inside the span of the leading
/// coordinates whenever that span has room.
template <typename Scalar>
SmallSvd<Scalar> jacobi_svd(const MatrixX<Scalar>& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::InvalidDimension, "jacobi_svd expects a square matrix");
  }
  const Index m = a.rows();
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();

  MatrixX<Scalar> work = a;
  MatrixX<Scalar> v = MatrixX<Scalar>::Identity(m, m);

  constexpr int kMaxSweeps = 60;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Index p = 0; p + 1 < m; ++p) {
      for (Index q = p + 1; q < m; ++q) {
        const Scalar alpha = work.col(p).squaredNorm();
        const Scalar beta = work.col(q).squaredNorm();
        const Scalar gamma = work.col(p).dot(work.col(q));
        if (gamma == Scalar(0) ||
            std::abs(gamma) <= eps * std::sqrt(alpha * beta)) {
          continue;
        }
        rotated = true;
        const Scalar zeta = (beta - alpha) / (Scalar(2) * gamma);
        const Scalar t = (zeta >= Scalar(0) ? Scalar(1) : Scalar(-1)) /
                         (std::abs(zeta) + std::sqrt(Scalar(1) + zeta * zeta));
        const Scalar c = Scalar(1) / std::sqrt(Scalar(1) + t * t);
        const Scalar s = c * t;
        for (Index i = 0; i < m; ++i) {
          const Scalar wp = work(i, p);
          const Scalar wq = work(i, q);
          work(i, p) = c * wp - s * wq;
          work(i, q) = s * wp + c * wq;
          const Scalar vp = v(i, p);
          const Scalar vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  VectorX<Scalar> norms(m);
  for (Index j = 0; j < m; ++j) norms(j) = work.col(j).norm();

  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index x, Index y) { return norms(x) > norms(y); });

  SmallSvd<Scalar> out;
  out.U.setZero(m, m);
  out.V.resize(m, m);
  out.sigma.resize(m);
  const Scalar sigma_max = m > 0 ? norms(order[0]) : Scalar(0);
  const Scalar zero_cut = sigma_max * eps * Scalar(4 * m);
  std::vector<Index> incomplete;
  for (Index j = 0; j < m; ++j) {
    const Index src = order[static_cast<std::size_t>(j)];
    out.sigma(j) = norms(src);
    out.V.col(j) = v.col(src);
    if (norms(src) > zero_cut && norms(src) > Scalar(0)) {
      out.U.col(j) = work.col(src) / norms(src);
    } else {
      incomplete.push_back(j);
    }
  }

  // Complete the left basis for (numerically) null directions.
  Index next_basis = 0;
  for (Index j : incomplete) {
    bool placed = false;
    while (!placed && next_basis < m) {
      VectorX<Scalar> cand = VectorX<Scalar>::Unit(m, next_basis++);
      for (int pass = 0; pass < 2; ++pass) {
        for (Index c = 0; c < m; ++c) {
          if (c == j) continue;
          cand -= out.U.col(c).dot(cand) * out.U.col(c);
        }
      }
      const Scalar nrm = cand.norm();
      if (nrm > Scalar(0.5)) {
        out.U.col(j) = cand / nrm;
        placed = true;
      }
    }
  }
  return out;
}

/// Decomposition of the center matrix [diag(dbar), wbar; 0, rho].
template <typename Scalar>
struct CenterSvd {
  MatrixX<Scalar> U;      // (p+1) x (p+1)
  VectorX<Scalar> sigma;  // p+1 values, nonincreasing
  MatrixX<Scalar> V;      // (p+1) x (p+1)
};

template <typename Scalar>
MatrixX<Scalar> center_matrix(const Eigen::Ref<const VectorX<Scalar>>& dbar,
                              const Eigen::Ref<const VectorX<Scalar>>& wbar,
                              Scalar rho) {
  const Index p = dbar.size();
  if (wbar.size() != p) {
    throw Error(ErrorCode::InvalidDimension, "center_matrix: wbar size mismatch");
  }
  MatrixX<Scalar> c = MatrixX<Scalar>::Zero(p + 1, p + 1);
  c.topLeftCorner(p, p).diagonal() = dbar;
  c.topRightCorner(p, 1) = wbar;
  c(p, p) = rho;
  return c;
}

template <typename Scalar>
CenterSvd<Scalar> center_svd(const Eigen::Ref<const VectorX<Scalar>>& dbar,
                             const Eigen::Ref<const VectorX<Scalar>>& wbar,
                             Scalar rho) {
  if (rho < Scalar(0) || !std::isfinite(rho)) {
    throw Error(ErrorCode::NumericalFault, "center_svd: rho must be finite and >= 0");
  }
  auto svd = jacobi_svd<Scalar>(center_matrix<Scalar>(dbar, wbar, rho));
  return {std::move(svd.U), std::move(svd.sigma), std::move(svd.V)};
}

}  // namespace onlinesfm
