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
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "onlinesfm/measurement.hpp"
#include "onlinesfm/types.hpp"

namespace onlinesfm {

/// Live rank-k estimate W ~= U diag(d) R^T.
///
/// With the ones constraint enabled the last column of U is exactly
/// 1/sqrt(n), the last entry of d is exactly 1, and the last column of R holds
/// the translation scaled by sqrt(n). The remaining ("bar") columns carry the
/// variant-specific state: for SAGE dbar == 1, for MD-ISVD dbar holds the
/// running singular values and Rbar has orthonormal columns.
template <typename Scalar>
struct FactorModel {
  MatrixX<Scalar> U;
  VectorX<Scalar> d;
  MatrixX<Scalar> R;
  Variant variant = Variant::Sage;
  bool onesColumn = true;

  Index rows() const { return U.rows(); }
  Index rank() const { return U.cols(); }
  Index cols() const { return R.rows(); }
  Index bar_rank() const { return onesColumn ? rank() - 1 : rank(); }
  Index ones_index() const { return rank() - 1; }

  /// Per-column translation, i.e. the ones-column coefficient divided by sqrt(n).
  VectorX<Scalar> translation() const {
    if (!onesColumn) return VectorX<Scalar>::Zero(cols());
    return R.col(ones_index()) / std::sqrt(Scalar(rows()));
  }
};

using FactorModeld = FactorModel<double>;

struct RandomOrthonormalInit {
  std::uint64_t seed = 0;
  /// Number of pre-allocated columns (rows of R); 0 starts an empty stream.
  Index cols = 0;
};

template <typename Scalar>
struct ColumnMeanFillInit {
  MeasurementMatrix<Scalar> w0;
};

template <typename Scalar>
using InitMode = std::variant<RandomOrthonormalInit, ColumnMeanFillInit<Scalar>>;

struct InitOptions {
  bool onesColumn = true;
  /// Value for the bar entries of D under random init. Zero gives the empty
  /// SVD used when the model should represent a plain incremental SVD.
  double barScale = 1.0;
};

namespace detail {

// Orthonormalizes the columns of m in order against `fixed` (already
// orthonormal) and each other. Degenerate columns are replaced by the first
// standard basis vector that survives the projection.
template <typename Scalar>
void orthonormalize_against(MatrixX<Scalar>& m, const MatrixX<Scalar>& fixed) {
  const Index n = m.rows();
  Index basis = 0;
  for (Index j = 0; j < m.cols(); ++j) {
    VectorX<Scalar> v = m.col(j);
    const Scalar original = v.norm();
    auto project = [&](VectorX<Scalar>& x) {
      for (int pass = 0; pass < 2; ++pass) {
        for (Index c = 0; c < fixed.cols(); ++c) x -= fixed.col(c).dot(x) * fixed.col(c);
        for (Index c = 0; c < j; ++c) x -= m.col(c).dot(x) * m.col(c);
      }
    };
    project(v);
    Scalar nrm = v.norm();
    while (!(nrm > Scalar(1e-8) * std::max(original, Scalar(1))) && basis < n) {
      v = VectorX<Scalar>::Unit(n, basis++);
      project(v);
      nrm = v.norm();
    }
    if (!(nrm > Scalar(0))) {
      throw Error(ErrorCode::InvalidDimension, "cannot complete an orthonormal basis");
    }
    m.col(j) = v / nrm;
  }
}

template <typename Scalar>
MatrixX<Scalar> ones_column(Index n) {
  return MatrixX<Scalar>::Constant(n, 1, Scalar(1) / std::sqrt(Scalar(n)));
}

template <typename Scalar>
MatrixX<Scalar> gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixX<Scalar> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = Scalar(normal(rng));
  return m;
}

}  // namespace detail

/// Builds an initial model satisfying every FactorModel invariant.
template <typename Scalar>
FactorModel<Scalar> init_model(Index n0, Index k, Variant variant, const InitMode<Scalar>& mode,
                               const InitOptions& options = {}) {
  if (k < 2 || n0 < k) {
    throw Error(ErrorCode::InvalidDimension, "init_model requires n0 >= k >= 2");
  }
  FactorModel<Scalar> model;
  model.variant = variant;
  model.onesColumn = options.onesColumn;
  const Index kb = options.onesColumn ? k - 1 : k;
  const MatrixX<Scalar> fixed =
      options.onesColumn ? detail::ones_column<Scalar>(n0) : MatrixX<Scalar>(n0, 0);

  if (const auto* random = std::get_if<RandomOrthonormalInit>(&mode)) {
    std::mt19937_64 rng(random->seed);
    MatrixX<Scalar> ubar = detail::gaussian<Scalar>(n0, kb, rng);
    detail::orthonormalize_against<Scalar>(ubar, fixed);
    model.U.resize(n0, k);
    model.U.leftCols(kb) = ubar;
    if (options.onesColumn) model.U.col(k - 1) = fixed.col(0);
    model.d = VectorX<Scalar>::Constant(k, Scalar(options.barScale));
    if (options.onesColumn) model.d(k - 1) = Scalar(1);

    const Index t = random->cols;
    model.R = detail::gaussian<Scalar>(t, k, rng);
    if (variant == Variant::MdIsvd && t >= kb) {
      MatrixX<Scalar> rbar = model.R.leftCols(kb);
      detail::orthonormalize_against<Scalar>(rbar, MatrixX<Scalar>(t, 0));
      model.R.leftCols(kb) = rbar;
    }
    return model;
  }

  const auto& w0 = std::get<ColumnMeanFillInit<Scalar>>(mode).w0;
  if (w0.rows() != n0) {
    throw Error(ErrorCode::InvalidDimension, "init_model: W0 row count differs from n0");
  }
  MatrixX<Scalar> filled = w0.values;
  VectorX<Scalar> means(w0.cols());
  for (Index j = 0; j < w0.cols(); ++j) {
    Scalar sum(0);
    Index count = 0;
    for (Index i = 0; i < n0; ++i) {
      if (w0.observed(i, j)) {
        sum += w0.values(i, j);
        ++count;
      }
    }
    if (count == 0) {
      throw Error(ErrorCode::EmptyColumn, "init_model: column " + std::to_string(j) + " has no entries");
    }
    means(j) = sum / Scalar(count);
    for (Index i = 0; i < n0; ++i) {
      if (!w0.observed(i, j)) filled(i, j) = means(j);
    }
  }

  // With the ones constraint the best approximation is the ones projection
  // plus the best rank-(k-1) approximation of the column-centered remainder.
  MatrixX<Scalar> target = filled;
  if (options.onesColumn) target.rowwise() -= means.transpose();

  Eigen::JacobiSVD<MatrixX<Scalar>> svd(target, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index avail = std::min<Index>(kb, svd.singularValues().size());
  MatrixX<Scalar> ubar = MatrixX<Scalar>::Zero(n0, kb);
  MatrixX<Scalar> vbar = MatrixX<Scalar>::Zero(w0.cols(), kb);
  VectorX<Scalar> sig = VectorX<Scalar>::Zero(kb);
  ubar.leftCols(avail) = svd.matrixU().leftCols(avail);
  vbar.leftCols(avail) = svd.matrixV().leftCols(avail);
  sig.head(avail) = svd.singularValues().head(avail);
  // Directions of zero singular value carry no data; only their orthogonality
  // to the ones vector needs repairing.
  detail::orthonormalize_against<Scalar>(ubar, fixed);

  model.U.resize(n0, k);
  model.U.leftCols(kb) = ubar;
  model.d.resize(k);
  model.R.resize(w0.cols(), k);
  if (variant == Variant::Sage) {
    model.d.head(kb).setOnes();
    model.R.leftCols(kb) = vbar * sig.asDiagonal();
  } else {
    model.d.head(kb) = sig;
    model.R.leftCols(kb) = vbar;
  }
  if (options.onesColumn) {
    model.U.col(k - 1) = fixed.col(0);
    model.d(k - 1) = Scalar(1);
    model.R.col(k - 1) = means * std::sqrt(Scalar(n0));
  }
  return model;
}

/// Full n x T estimate U D R^T.
template <typename Scalar>
MatrixX<Scalar> reconstruct(const FactorModel<Scalar>& model) {
  return model.U * model.d.asDiagonal() * model.R.transpose();
}

/// Estimate restricted to the requested rows and columns.
template <typename Scalar>
MatrixX<Scalar> reconstruct(const FactorModel<Scalar>& model, std::span<const Index> rows,
                            std::span<const Index> cols) {
  for (Index i : rows) {
    if (i < 0 || i >= model.rows()) throw Error(ErrorCode::IndexError, "reconstruct: row out of range");
  }
  for (Index j : cols) {
    if (j < 0 || j >= model.cols()) throw Error(ErrorCode::IndexError, "reconstruct: column out of range");
  }
  MatrixX<Scalar> left(static_cast<Index>(rows.size()), model.rank());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    left.row(static_cast<Index>(a)) = model.U.row(rows[a]).cwiseProduct(model.d.transpose());
  }
  MatrixX<Scalar> right(static_cast<Index>(cols.size()), model.rank());
  for (std::size_t b = 0; b < cols.size(); ++b) right.row(static_cast<Index>(b)) = model.R.row(cols[b]);
  return left * right.transpose();
}

template <typename Scalar>
Scalar reconstruct_entry(const FactorModel<Scalar>& model, Index i, Index j) {
  if (i < 0 || i >= model.rows() || j < 0 || j >= model.cols()) {
    throw Error(ErrorCode::IndexError, "reconstruct_entry: index out of range");
  }
  return model.U.row(i).cwiseProduct(model.d.transpose()).dot(model.R.row(j));
}

/// Measured deviations from the FactorModel invariants.
template <typename Scalar>
struct InvariantReport {
  Scalar orthonormality = 0;  // max |U^T U - I|
  Scalar onesColumn = 0;      // max |U(:, last) - 1/sqrt(n)|
  Scalar onesWeight = 0;      // |d(last) - 1|
  Scalar sageBar = 0;         // max |dbar - 1| (SAGE only)
  Scalar rbarOrthonormality = 0;  // max |Rbar^T Rbar - I| (MD-ISVD, T >= k-1)
  bool nonincreasing = true;  // dbar ordering (MD-ISVD)
};

template <typename Scalar>
InvariantReport<Scalar> check_invariants(const FactorModel<Scalar>& model) {
  InvariantReport<Scalar> rep;
  const Index k = model.rank();
  const Index kb = model.bar_rank();
  const MatrixX<Scalar> gram = model.U.transpose() * model.U;
  rep.orthonormality = (gram - MatrixX<Scalar>::Identity(k, k)).cwiseAbs().maxCoeff();
  if (model.onesColumn) {
    const Scalar target = Scalar(1) / std::sqrt(Scalar(model.rows()));
    rep.onesColumn = (model.U.col(k - 1).array() - target).abs().maxCoeff();
    rep.onesWeight = std::abs(model.d(k - 1) - Scalar(1));
  }
  if (model.variant == Variant::Sage) {
    rep.sageBar = kb > 0 ? (model.d.head(kb).array() - Scalar(1)).abs().maxCoeff() : Scalar(0);
  } else {
    for (Index j = 1; j < kb; ++j) {
      if (model.d(j) > model.d(j - 1)) rep.nonincreasing = false;
    }
    if (model.cols() >= kb && kb > 0) {
      const auto rbar = model.R.leftCols(kb);
      rep.rbarOrthonormality =
          (rbar.transpose() * rbar - MatrixX<Scalar>::Identity(kb, kb)).cwiseAbs().maxCoeff();
    }
  }
  return rep;
}

}  // namespace onlinesfm
