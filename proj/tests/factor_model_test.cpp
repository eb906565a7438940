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

#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "onlinesfm/factor_model.hpp"
#include "oracles.hpp"

namespace onlinesfm {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(InitModel, RandomSquareHasHalfOnesColumn) {
  const auto m = init_model<double>(4, 4, Variant::Sage, RandomOrthonormalInit{7});
  EXPECT_TRUE((m.U.transpose() * m.U).isIdentity(1e-12));
  EXPECT_TRUE(m.U.col(3).isApprox(VectorXd::Constant(4, 0.5), 1e-14));
}

TEST(InitModel, RandomMdIsvdStartsEmpty) {
  const auto m = init_model<double>(100, 4, Variant::MdIsvd, RandomOrthonormalInit{1});
  EXPECT_EQ(m.d, VectorXd::Ones(4));
  EXPECT_EQ(m.R.rows(), 0);
  EXPECT_EQ(m.R.cols(), 4);
  const auto rep = check_invariants(m);
  EXPECT_LE(rep.orthonormality, 1e-12);
  EXPECT_LE(rep.onesColumn, 1e-14);
}

TEST(InitModel, RandomWithColumnsSatisfiesInvariants) {
  for (Variant v : {Variant::Sage, Variant::MdIsvd}) {
    const auto m = init_model<double>(30, 4, v, RandomOrthonormalInit{5, 12});
    EXPECT_EQ(m.R.rows(), 12);
    const auto rep = check_invariants(m);
    EXPECT_LE(rep.orthonormality, 1e-12);
    EXPECT_LE(rep.rbarOrthonormality, 1e-12);
  }
}

TEST(InitModel, RejectsBadShapes) {
  try {
    init_model<double>(3, 4, Variant::Sage, RandomOrthonormalInit{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidDimension);
  }
  EXPECT_THROW(init_model<double>(5, 1, Variant::Sage, RandomOrthonormalInit{}), Error);
}

TEST(InitModel, EmptyColumnUnderMeanFill) {
  MeasurementMatrixd w(5, 3);
  for (Index i = 0; i < 5; ++i) {
    w.set(i, 0, 1.0);
    w.set(i, 2, 2.0);
  }
  try {
    init_model<double>(5, 3, Variant::Sage, ColumnMeanFillInit<double>{w});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyColumn);
  }
}

MatrixXd centered_rank3(std::mt19937_64& rng) {
  MatrixXd w = oracle::low_rank(6, 4, 3, rng);
  w.rowwise() -= w.colwise().mean();
  return w;
}

TEST(InitModel, MeanFillReproducesCompleteMatrix) {
  std::mt19937_64 rng(21);
  const MatrixXd w = centered_rank3(rng);
  for (Variant v : {Variant::Sage, Variant::MdIsvd}) {
    const auto m = init_model<double>(6, 4, v, ColumnMeanFillInit<double>{MeasurementMatrixd::dense(w)});
    EXPECT_LE((reconstruct(m) - w).cwiseAbs().maxCoeff(), 1e-10);
    const auto rep = check_invariants(m);
    EXPECT_LE(rep.orthonormality, 1e-12);
    EXPECT_LE(rep.onesColumn, 1e-14);
    EXPECT_TRUE(rep.nonincreasing);
  }
}

TEST(InitModel, MeanFillMatchesBestApproximationOfFilledMatrix) {
  std::mt19937_64 rng(4);
  const MatrixXd w = oracle::low_rank(12, 8, 5, rng);
  auto obs = oracle::hide_random(w, 0.3, 4, rng);
  MatrixXd filled = obs.values;
  for (Index j = 0; j < w.cols(); ++j) {
    double s = 0;
    Index c = 0;
    for (Index i = 0; i < w.rows(); ++i)
      if (obs.observed(i, j)) s += obs.values(i, j), ++c;
    for (Index i = 0; i < w.rows(); ++i)
      if (!obs.observed(i, j)) filled(i, j) = s / double(c);
  }
  const auto m = init_model<double>(12, 4, Variant::MdIsvd, ColumnMeanFillInit<double>{obs});
  EXPECT_LE((reconstruct(m) - oracle::best_rank_with_ones(filled, 4)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(InitModel, MeanFillWithoutOnesColumn) {
  std::mt19937_64 rng(9);
  const MatrixXd w = oracle::low_rank(7, 5, 3, rng);
  InitOptions opts;
  opts.onesColumn = false;
  const auto m = init_model<double>(7, 3, Variant::MdIsvd, ColumnMeanFillInit<double>{MeasurementMatrixd::dense(w)}, opts);
  EXPECT_LE((reconstruct(m) - w).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(m.bar_rank(), 3);
}

TEST(Reconstruct, BlockAndEntry) {
  std::mt19937_64 rng(2);
  const MatrixXd w = centered_rank3(rng);
  const auto m = init_model<double>(6, 4, Variant::Sage, ColumnMeanFillInit<double>{MeasurementMatrixd::dense(w)});
  const std::vector<Index> rows{4, 0, 2};
  const std::vector<Index> cols{3, 1};
  const MatrixXd block = reconstruct<double>(m, rows, cols);
  ASSERT_EQ(block.rows(), 3);
  ASSERT_EQ(block.cols(), 2);
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < cols.size(); ++b)
      EXPECT_NEAR(block(Index(a), Index(b)), w(rows[a], cols[b]), 1e-10);

  const double direct = m.U.row(5).cwiseProduct(m.d.transpose()).dot(m.R.row(2));
  EXPECT_EQ(reconstruct_entry(m, 5, 2), direct);
}

TEST(Reconstruct, EmptyAndOutOfRange) {
  const auto m = init_model<double>(6, 3, Variant::Sage, RandomOrthonormalInit{1, 4});
  const std::vector<Index> none;
  const std::vector<Index> one{0};
  EXPECT_EQ(reconstruct<double>(m, none, one).size(), 0);
  const std::vector<Index> bad{6};
  try {
    reconstruct<double>(m, bad, one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexError);
  }
  EXPECT_THROW(reconstruct<double>(m, one, std::vector<Index>{4}), Error);
  EXPECT_THROW(reconstruct_entry(m, -1, 0), Error);
}

TEST(FactorModel, TranslationDividesOnesCoefficient) {
  auto m = init_model<double>(9, 3, Variant::Sage, RandomOrthonormalInit{3, 2});
  m.R(1, 2) = 6.0;
  EXPECT_DOUBLE_EQ(m.translation()(1), 2.0);
}

TEST(FactorModel, SinglePrecisionInit) {
  const auto m = init_model<float>(10, 4, Variant::Sage, RandomOrthonormalInit{2, 3});
  EXPECT_LE(check_invariants(m).orthonormality, 1e-5f);
}

}  // namespace
}  // namespace onlinesfm
