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

// Independent reference computations shared by the tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "onlinesfm/factor_model.hpp"
#include "onlinesfm/measurement.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using onlinesfm::Index;

inline MatrixXd gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

inline MatrixXd random_orthonormal(Index rows, Index cols, std::mt19937_64& rng) {
  Eigen::HouseholderQR<MatrixXd> qr(gaussian(rows, cols, rng));
  return qr.householderQ() * MatrixXd::Identity(rows, cols);
}

inline MatrixXd low_rank(Index rows, Index cols, Index rank, std::mt19937_64& rng) {
  return gaussian(rows, rank, rng) * gaussian(rank, cols, rng);
}

inline VectorXd singular_values(const MatrixXd& a) { return Eigen::JacobiSVD<MatrixXd>(a).singularValues(); }

inline MatrixXd best_rank(const MatrixXd& a, Index k) {
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index r = std::min<Index>(k, svd.singularValues().size());
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

// Best rank-k approximation whose column space contains the ones vector.
inline MatrixXd best_rank_with_ones(const MatrixXd& a, Index k) {
  const Index n = a.rows();
  const MatrixXd p1 = MatrixXd::Constant(n, n, 1.0 / double(n));
  const MatrixXd centered = a - p1 * a;
  return p1 * a + best_rank(centered, k - 1);
}

// Largest principal angle sine between two orthonormal bases.
inline double subspace_gap(const MatrixXd& a, const MatrixXd& b) {
  const MatrixXd proj = a - b * (b.transpose() * a);
  return Eigen::JacobiSVD<MatrixXd>(proj).singularValues()(0);
}

inline VectorXd normal_equations(const MatrixXd& u, const VectorXd& v) {
  return (u.transpose() * u).llt().solve(u.transpose() * v);
}

// Least absolute deviations by enumerating interpolating k-subsets; exact
// when u has full column rank.
inline double lad_objective(const MatrixXd& u, const VectorXd& v, VectorXd* best_w = nullptr) {
  const Index p = u.rows();
  const Index k = u.cols();
  std::vector<Index> pick(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) pick[static_cast<std::size_t>(i)] = i;
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    MatrixXd a(k, k);
    VectorXd b(k);
    for (Index i = 0; i < k; ++i) {
      a.row(i) = u.row(pick[static_cast<std::size_t>(i)]);
      b(i) = v(pick[static_cast<std::size_t>(i)]);
    }
    Eigen::FullPivLU<MatrixXd> lu(a);
    if (lu.isInvertible()) {
      const VectorXd w = lu.solve(b);
      const double obj = (u * w - v).lpNorm<1>();
      if (obj < best) {
        best = obj;
        if (best_w) *best_w = w;
      }
    }
    Index i = k - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == p - k + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < k; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

// Similarity alignment through the polar factor of the cross-covariance.
struct PolarAlignment {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::RowVector3d translation = Eigen::RowVector3d::Zero();
  MatrixXd aligned;
};

inline PolarAlignment polar_align(const MatrixXd& s, const MatrixXd& t) {
  const Eigen::RowVector3d ms = s.colwise().mean();
  const Eigen::RowVector3d mt = t.colwise().mean();
  const MatrixXd sc = s.rowwise() - ms;
  const MatrixXd tc = t.rowwise() - mt;
  const Eigen::Matrix3d h = sc.transpose() * tc;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(h.transpose() * h);
  const Eigen::Matrix3d inv_sqrt =
      eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  PolarAlignment out;
  out.rotation = h * inv_sqrt;
  out.scale = (out.rotation.transpose() * h).trace() / sc.squaredNorm();
  out.translation = mt - out.scale * ms * out.rotation;
  out.aligned = (out.scale * s * out.rotation).rowwise() + out.translation;
  return out;
}

inline onlinesfm::MeasurementMatrixd hide_random(const MatrixXd& w, double fraction, Index keepPerColumn,
                                                 std::mt19937_64& rng) {
  auto out = onlinesfm::MeasurementMatrixd::dense(w);
  std::uniform_real_distribution<double> u;
  for (Index j = 0; j < w.cols(); ++j)
    for (Index i = 0; i < w.rows(); ++i)
      if (u(rng) < fraction && out.observed_in_column(j) > keepPerColumn) out.hide(i, j);
  return out;
}

}  // namespace oracle
