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

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "onlinesfm/factor_model.hpp"
#include "onlinesfm/types.hpp"

namespace onlinesfm {

/// Affine (gauge-ambiguous) structure and motion read off a rank-4 model.
template <typename Scalar>
struct AffineFactors {
  MatrixX<Scalar> Sa;   // n x 3
  MatrixX<Scalar> Ma;   // 2m x 3
  VectorX<Scalar> tau;  // 2m
};

/// Splits a rank-4 model with its ones column into Sa Ma^T + 1 tau^T.
template <typename Scalar>
AffineFactors<Scalar> affine_split(const FactorModel<Scalar>& model) {
  if (model.rank() != 4 || !model.onesColumn) {
    throw Error(ErrorCode::WrongRank, "affine_split needs a rank-4 model with the ones column");
  }
  const Scalar sqrt_n = std::sqrt(Scalar(model.rows()));
  AffineFactors<Scalar> out;
  out.Sa = model.U.leftCols(3) * sqrt_n;
  out.Ma = model.R.leftCols(3) * model.d.head(3).asDiagonal() / sqrt_n;
  out.tau = model.R.col(3) / sqrt_n;
  return out;
}

template <typename Scalar>
struct SfmResult {
  MatrixX<Scalar> S;    // n x 3
  MatrixX<Scalar> M;    // 2m x 3, rows (m_x, m_y) per frame
  VectorX<Scalar> tau;  // 2m, empty when unknown
  Eigen::Matrix<Scalar, 3, 3> gram = Eigen::Matrix<Scalar, 3, 3>::Identity();
  Scalar quality = 0;   // smallest / largest singular value of the constraint system
  bool metricDegenerate = false;
};

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, 1, 6> gram_coefficients(const Eigen::Matrix<Scalar, 1, 3>& a,
                                              const Eigen::Matrix<Scalar, 1, 3>& b) {
  Eigen::Matrix<Scalar, 1, 6> c;
  c << a(0) * b(0), a(0) * b(1) + a(1) * b(0), a(0) * b(2) + a(2) * b(0), a(1) * b(1),
      a(1) * b(2) + a(2) * b(1), a(2) * b(2);
  return c;
}

}  // namespace detail

/// Scaled-orthographic metric upgrade. Solves for the symmetric G = A A^T
/// with m_x^T G m_y = 0 and m_x^T G m_x = m_y^T G m_y in every frame, fixes
/// the global scale so the average camera row has unit norm, and returns
/// S = Sa A^-T, M = Ma A. A non positive-definite G is clamped to
/// 1e-8 * lambda_max and flagged.
template <typename Scalar>
SfmResult<Scalar> metric_upgrade(const MatrixX<Scalar>& sa, const MatrixX<Scalar>& ma) {
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  using Row3 = Eigen::Matrix<Scalar, 1, 3>;
  if (sa.cols() != 3 || ma.cols() != 3 || ma.rows() % 2 != 0) {
    throw Error(ErrorCode::InvalidDimension, "metric_upgrade expects n x 3 structure and 2m x 3 motion");
  }
  const Index frames = ma.rows() / 2;
  if (frames < 3) throw Error(ErrorCode::WrongRank, "metric_upgrade needs at least 3 frames");

  MatrixX<Scalar> a(2 * frames, 6);
  for (Index f = 0; f < frames; ++f) {
    const Row3 mx = ma.row(2 * f);
    const Row3 my = ma.row(2 * f + 1);
    a.row(2 * f) = detail::gram_coefficients<Scalar>(mx, my);
    a.row(2 * f + 1) = detail::gram_coefficients<Scalar>(mx, mx) - detail::gram_coefficients<Scalar>(my, my);
  }
  // Row equilibration keeps frames with large affine scale from dominating.
  for (Index i = 0; i < a.rows(); ++i) {
    const Scalar nrm = a.row(i).norm();
    if (nrm > Scalar(0)) a.row(i) /= nrm;
  }
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Eigen::Matrix<Scalar, 6, 1> g = svd.matrixV().col(5);

  Mat3 gram;
  gram << g(0), g(1), g(2), g(1), g(3), g(4), g(2), g(4), g(5);
  Scalar norm_sum = 0;
  for (Index i = 0; i < ma.rows(); ++i) norm_sum += ma.row(i) * gram * ma.row(i).transpose();
  if (norm_sum < Scalar(0)) {
    gram = -gram;
    norm_sum = -norm_sum;
  }

  SfmResult<Scalar> out;
  out.quality = sv(0) > Scalar(0) ? sv(sv.size() - 1) / sv(0) : Scalar(0);
  if (!(norm_sum > Scalar(0))) {
    out.metricDegenerate = true;
    gram.setIdentity();
  } else {
    gram *= Scalar(ma.rows()) / norm_sum;
  }

  Eigen::SelfAdjointEigenSolver<Mat3> eig(gram);
  Eigen::Matrix<Scalar, 3, 1> lambda = eig.eigenvalues();
  const Scalar lambda_max = lambda.maxCoeff();
  const Scalar lambda_min_allowed = Scalar(1e-8) * std::max(lambda_max, Scalar(0));
  for (int i = 0; i < 3; ++i) {
    if (!(lambda(i) > lambda_min_allowed)) {
      lambda(i) = lambda_max > Scalar(0) ? lambda_min_allowed : Scalar(1);
      out.metricDegenerate = true;
    }
  }
  const Mat3 corr = eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
  out.gram = corr * corr.transpose();
  out.M = ma * corr;
  out.S = sa * corr.inverse().transpose();
  return out;
}

/// Metric upgrade of a model's affine split, carrying its translation along.
template <typename Scalar>
SfmResult<Scalar> metric_upgrade(const FactorModel<Scalar>& model) {
  const auto aff = affine_split(model);
  auto out = metric_upgrade<Scalar>(aff.Sa, aff.Ma);
  out.tau = aff.tau;
  return out;
}

template <typename Scalar>
struct Similarity {
  Scalar scale = 1;
  Eigen::Matrix<Scalar, 3, 3> rotation = Eigen::Matrix<Scalar, 3, 3>::Identity();
  Eigen::Matrix<Scalar, 1, 3> translation = Eigen::Matrix<Scalar, 1, 3>::Zero();

  /// Applies x -> scale * x * rotation + translation to each row.
  MatrixX<Scalar> apply(const MatrixX<Scalar>& pts) const {
    MatrixX<Scalar> out = scale * pts * rotation;
    out.rowwise() += translation;
    return out;
  }
};

template <typename Scalar>
struct Alignment {
  MatrixX<Scalar> aligned;
  Similarity<Scalar> transform;
  Scalar residual = 0;  // Frobenius norm of aligned - target
};

/// Closed-form similarity (reflections allowed) mapping the rows of `s` onto
/// the rows of `target` in the least-squares sense.
template <typename Scalar>
Alignment<Scalar> procrustes_align(const MatrixX<Scalar>& s, const MatrixX<Scalar>& target) {
  if (s.rows() != target.rows() || s.cols() != 3 || target.cols() != 3) {
    throw Error(ErrorCode::InvalidDimension, "procrustes_align: shape mismatch");
  }
  if (s.rows() < 3) throw Error(ErrorCode::DegenerateAlignment, "procrustes_align: fewer than 3 points");
  const Eigen::Matrix<Scalar, 1, 3> mean_s = s.colwise().mean();
  const Eigen::Matrix<Scalar, 1, 3> mean_t = target.colwise().mean();
  const MatrixX<Scalar> sc = s.rowwise() - mean_s;
  const MatrixX<Scalar> tc = target.rowwise() - mean_t;

  Eigen::JacobiSVD<MatrixX<Scalar>> spread(sc);
  const auto& sv = spread.singularValues();
  if (!(sv(0) > Scalar(0)) || sv(1) <= Scalar(1e-12) * sv(0)) {
    throw Error(ErrorCode::DegenerateAlignment, "procrustes_align: points are collinear");
  }

  const Eigen::Matrix<Scalar, 3, 3> h = sc.transpose() * tc;
  Eigen::JacobiSVD<Eigen::Matrix<Scalar, 3, 3>> hs(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Alignment<Scalar> out;
  out.transform.rotation = hs.matrixU() * hs.matrixV().transpose();
  out.transform.scale = hs.singularValues().sum() / sc.squaredNorm();
  out.transform.translation = mean_t - out.transform.scale * mean_s * out.transform.rotation;
  out.aligned = out.transform.apply(s);
  out.residual = (out.aligned - target).norm();
  return out;
}

template <typename Scalar, typename Mask>
Scalar rmse_2d(const MatrixX<Scalar>& estimate, const MatrixX<Scalar>& w, const Mask& mask) {
  if (estimate.rows() != w.rows() || estimate.cols() != w.cols() || mask.rows() != w.rows() ||
      mask.cols() != w.cols()) {
    throw Error(ErrorCode::InvalidDimension, "rmse_2d: shape mismatch");
  }
  Scalar sum = 0;
  Index count = 0;
  for (Index j = 0; j < w.cols(); ++j) {
    for (Index i = 0; i < w.rows(); ++i) {
      if (mask(i, j)) {
        const Scalar diff = estimate(i, j) - w(i, j);
        sum += diff * diff;
        ++count;
      }
    }
  }
  if (count == 0) throw Error(ErrorCode::EmptyObservation, "rmse_2d: empty mask");
  return std::sqrt(sum / Scalar(count));
}

template <typename Scalar>
Scalar rmse_3d(const MatrixX<Scalar>& aligned, const MatrixX<Scalar>& gt) {
  if (aligned.rows() != gt.rows() || aligned.cols() != gt.cols() || gt.rows() == 0) {
    throw Error(ErrorCode::InvalidDimension, "rmse_3d: shape mismatch");
  }
  return std::sqrt((aligned - gt).squaredNorm() / Scalar(gt.rows()));
}

template <typename Scalar>
Scalar rel_struct_error(const MatrixX<Scalar>& s, const MatrixX<Scalar>& gt) {
  if (s.rows() != gt.rows() || s.cols() != gt.cols()) {
    throw Error(ErrorCode::InvalidDimension, "rel_struct_error: shape mismatch");
  }
  return (s - gt).norm() / gt.norm();
}

template <typename Scalar>
struct StructureEval {
  SfmResult<Scalar> sfm;
  Alignment<Scalar> alignment;
  Scalar rmse3d = 0;
  Scalar relError = 0;
};

/// Metric upgrade + Procrustes against per-row ground truth points.
template <typename Scalar>
StructureEval<Scalar> evaluate_structure(const FactorModel<Scalar>& model, const MatrixX<Scalar>& gtRows) {
  StructureEval<Scalar> ev;
  ev.sfm = metric_upgrade(model);
  ev.alignment = procrustes_align<Scalar>(ev.sfm.S, gtRows);
  ev.rmse3d = rmse_3d<Scalar>(ev.alignment.aligned, gtRows);
  ev.relError = rel_struct_error<Scalar>(ev.alignment.aligned, gtRows);
  return ev;
}

}  // namespace onlinesfm
