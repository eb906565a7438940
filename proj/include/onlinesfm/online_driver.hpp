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
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "onlinesfm/center_svd.hpp"
#include "onlinesfm/factor_model.hpp"
#include "onlinesfm/measurement.hpp"
#include "onlinesfm/meta_update.hpp"
#include "onlinesfm/types.hpp"

namespace onlinesfm {

/// Appends `kappa` rows for newly started tracks. Each row enters with zeros
/// in the bar columns; the ones column is renormalized and the stored
/// translation rescaled so U D R^T is unchanged on the old rows.
template <typename Scalar>
void add_rows(FactorModel<Scalar>& model, Index kappa) {
  if (kappa < 1) throw Error(ErrorCode::InvalidDimension, "add_rows: kappa must be >= 1");
  const Index k = model.rank();
  for (Index step = 0; step < kappa; ++step) {
    const Index n = model.rows();
    model.U.conservativeResize(n + 1, k);
    model.U.row(n).setZero();
    if (model.onesColumn) {
      model.U.col(k - 1).setConstant(Scalar(1) / std::sqrt(Scalar(n + 1)));
      model.R.col(k - 1) *= std::sqrt(Scalar(n + 1) / Scalar(n));
    }
  }
}

namespace detail {

template <typename Scalar>
void erase_row(MatrixX<Scalar>& m, Index row) {
  const Index rows = m.rows();
  if (row < rows - 1) m.middleRows(row, rows - row - 1) = m.bottomRows(rows - row - 1).eval();
  m.conservativeResize(rows - 1, Eigen::NoChange);
}

template <typename Scalar>
bool clamp_singular_values(FactorModel<Scalar>& model, const UpdateConfig& config) {
  const Index kb = model.bar_rank();
  if (kb == 0) return false;
  const Scalar floor = std::max(Scalar(config.residualFloorRel) * std::max(model.d(0), Scalar(1)),
                                Scalar(config.residualFloorAbs));
  bool degenerate = false;
  for (Index j = 0; j < kb; ++j) {
    if (!(model.d(j) > floor)) {
      model.d(j) = floor;
      degenerate = true;
    }
  }
  return degenerate;
}

}  // namespace detail

/// Removes column t's rank-one contribution from an MD-ISVD model in place,
/// leaving row t of Rbar (numerically) zero. The row itself is kept so a
/// revisit can refill it. Returns true when a singular value had to be
/// clamped (the downdate was degenerate).
///
/// With orthonormal Rbar this is the rank-one thin-SVD modification
/// X - (X e_t) e_t^T; otherwise Rbar D is re-factorized with a thin QR.
template <typename Scalar>
bool downdate_column(FactorModel<Scalar>& model, Index t, const UpdateConfig& config = {}) {
  if (model.variant != Variant::MdIsvd) return false;
  const Index kb = model.bar_rank();
  const Index cols = model.cols();
  if (t < 0 || t >= cols) throw Error(ErrorCode::IndexError, "downdate_column: column out of range");

  auto rbar = model.R.leftCols(kb);
  const MatrixX<Scalar> gram = rbar.transpose() * rbar;
  const bool orthonormal =
      cols >= kb && (gram - MatrixX<Scalar>::Identity(kb, kb)).cwiseAbs().maxCoeff() <= Scalar(1e-8);

  if (orthonormal) {
    const VectorX<Scalar> q = rbar.row(t).transpose();
    const VectorX<Scalar> dbar = model.d.head(kb);
    VectorX<Scalar> pb = -(rbar * q);
    pb(t) += Scalar(1);
    const Scalar pb_norm = pb.norm();
    const bool has_pb = pb_norm > Scalar(1e-10);

    const Index m = has_pb ? kb + 1 : kb;
    MatrixX<Scalar> kmat = MatrixX<Scalar>::Zero(m, m);
    kmat.topLeftCorner(kb, kb) =
        dbar.asDiagonal() * (MatrixX<Scalar>::Identity(kb, kb) - q * q.transpose());
    if (has_pb) kmat.topRightCorner(kb, 1) = -(dbar.asDiagonal() * q) * pb_norm;

    const auto svd = jacobi_svd<Scalar>(kmat);
    model.U.leftCols(kb) = (model.U.leftCols(kb) * svd.U.topLeftCorner(kb, kb)).eval();
    MatrixX<Scalar> new_rbar = rbar * svd.V.topLeftCorner(kb, kb);
    if (has_pb) new_rbar += (pb / pb_norm) * svd.V.row(kb).head(kb);
    rbar = new_rbar;
    model.d.head(kb) = svd.sigma.head(kb);
  } else {
    MatrixX<Scalar> b = rbar * model.d.head(kb).asDiagonal();
    b.row(t).setZero();
    Eigen::HouseholderQR<MatrixX<Scalar>> qr(b);
    const Index r = std::min(cols, kb);
    MatrixX<Scalar> q = MatrixX<Scalar>::Identity(cols, kb);
    q = qr.householderQ() * q;
    MatrixX<Scalar> rq = MatrixX<Scalar>::Zero(kb, kb);
    rq.topRows(r) = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
    // b = q rq, rq = P S Y^T  =>  X = Ubar Y S (q P)^T
    const auto svd = jacobi_svd<Scalar>(rq);
    model.U.leftCols(kb) = (model.U.leftCols(kb) * svd.V).eval();
    rbar = q * svd.U;
    model.d.head(kb) = svd.sigma;
  }
  rbar.row(t).setZero();
  return detail::clamp_singular_values(model, config);
}

/// Drops column t: SAGE just removes row t of R; MD-ISVD downdates first.
/// Returns true when the downdate was degenerate.
template <typename Scalar>
bool remove_column_contribution(FactorModel<Scalar>& model, Index t, const UpdateConfig& config = {}) {
  if (t < 0 || t >= model.cols()) throw Error(ErrorCode::IndexError, "remove_column_contribution: bad column");
  const bool degenerate = downdate_column(model, t, config);
  detail::erase_row(model.R, t);
  return degenerate;
}

/// Append-only store of observed columns with per-column visit counters.
/// With a capacity, the oldest columns are evicted and never revisited; their
/// slots remain so indices stay aligned with the rows of R.
template <typename Scalar>
class ColumnStore {
 public:
  explicit ColumnStore(std::optional<Index> capacity = std::nullopt) : capacity_(capacity) {}

  Index push(ObservedColumn<Scalar> col) {
    columns_.push_back(std::move(col));
    visits_.push_back(0);
    evicted_.push_back(false);
    if (capacity_ && retained() > *capacity_) {
      evicted_[static_cast<std::size_t>(first_retained_)] = true;
      columns_[static_cast<std::size_t>(first_retained_)] = ObservedColumn<Scalar>{};
      ++first_retained_;
    }
    return size() - 1;
  }

  Index size() const { return static_cast<Index>(columns_.size()); }
  Index retained() const { return size() - first_retained_; }
  Index first_retained() const { return first_retained_; }
  bool evicted(Index t) const { return evicted_.at(static_cast<std::size_t>(t)); }
  const ObservedColumn<Scalar>& column(Index t) const { return columns_.at(static_cast<std::size_t>(t)); }
  Index visits(Index t) const { return visits_.at(static_cast<std::size_t>(t)); }
  void record_visit(Index t) { ++visits_.at(static_cast<std::size_t>(t)); }
  std::optional<Index> capacity() const { return capacity_; }

 private:
  std::optional<Index> capacity_;
  std::vector<ObservedColumn<Scalar>> columns_;
  std::vector<Index> visits_;
  std::vector<bool> evicted_;
  Index first_retained_ = 0;
};

template <typename Scalar>
struct ProcessResult {
  bool processed = false;  // false: skipped (too few observations)
  bool revisit = false;
  bool downdateDegenerate = false;
  UpdateOutcome<Scalar> outcome;
};

/// Processes stored column t. If R has no row for it yet the column is
/// appended; otherwise it is a revisit: its contribution is removed, the
/// update runs with the scheduled alpha, and the refreshed row lands back at
/// position t. Skipped new columns get a zero row so indices stay aligned.
template <typename Scalar>
ProcessResult<Scalar> process_column(FactorModel<Scalar>& model, ColumnStore<Scalar>& store, Index t,
                                     const UpdateConfig& config) {
  if (t < 0 || t >= store.size()) throw Error(ErrorCode::IndexError, "process_column: unknown column");
  if (store.evicted(t)) throw Error(ErrorCode::IndexError, "process_column: column was evicted");
  if (t > model.cols()) throw Error(ErrorCode::IndexError, "process_column: columns must be appended in order");
  const auto& col = store.column(t);
  ProcessResult<Scalar> res;
  res.revisit = t < model.cols();
  if (col.size() < config.min_observed(model.rank())) {
    if (!res.revisit) {
      model.R.conservativeResize(model.cols() + 1, model.rank());
      model.R.row(t).setZero();
    }
    return res;
  }
  const Scalar alpha = Scalar(config.alphaSchedule.alpha(store.visits(t)));
  if (res.revisit) res.downdateDegenerate = downdate_column(model, t, config);
  res.outcome = update_column(model, col, alpha, config, t);
  res.processed = true;
  store.record_visit(t);
  return res;
}

/// Root mean square error of U D R^T over the observed entries of the given
/// columns (column t of the store pairs with row t of R).
template <typename Scalar>
double rmse_observed(const FactorModel<Scalar>& model, const ColumnStore<Scalar>& store) {
  double sum = 0.0;
  Index count = 0;
  const MatrixX<Scalar> ud = model.U * model.d.asDiagonal();
  const Index limit = std::min(store.size(), model.cols());
  for (Index t = store.first_retained(); t < limit; ++t) {
    const auto& col = store.column(t);
    for (std::size_t i = 0; i < col.omega.size(); ++i) {
      const double diff = static_cast<double>(ud.row(col.omega[i]).dot(model.R.row(t)) -
                                              col.values(static_cast<Index>(i)));
      sum += diff * diff;
    }
    count += col.size();
  }
  if (count == 0) throw Error(ErrorCode::EmptyObservation, "rmse_observed: no observed entries");
  return std::sqrt(sum / static_cast<double>(count));
}

/// One line of a run log.
struct LogRecord {
  Index index = 0;  // pass (batch) or frame (online)
  double seconds = 0.0;
  double rmse2d = 0.0;
  Index cols = 0;
  Index rows = 0;
};

struct RunLog {
  std::vector<LogRecord> records;
  bool converged = false;

  std::vector<double> rmse() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.rmse2d);
    return out;
  }
};

/// Stops when the error did not drop by more than relDrop over the last
/// `window` passes, or when a pass or time budget runs out.
struct ConvergenceRule {
  double relDrop = 0.01;
  Index window = 10;
  double maxSeconds = 600.0;
  Index maxPasses = 100000;
};

/// True once the best error inside the last `window` passes is not below
/// (1 - relDrop) times the best error before it. Works on noisy sequences;
/// the sequence includes the initial (pass 0) value.
inline bool has_converged(const std::vector<double>& rmse, const ConvergenceRule& rule) {
  const auto size = static_cast<Index>(rmse.size());
  if (rule.window < 1 || size <= rule.window) return false;
  const auto split = rmse.end() - rule.window;
  const double recent = *std::min_element(split, rmse.end());
  const double before = *std::min_element(rmse.begin(), split);
  return !(recent < (1.0 - rule.relDrop) * before);
}

enum class InitKind { Random, ColumnMean };

struct BatchConfig {
  Variant variant = Variant::Sage;
  Index rank = 4;
  bool onesColumn = true;
  InitKind init = InitKind::Random;
  std::uint64_t seed = 0;
  UpdateConfig update;
  ConvergenceRule convergence;
  /// Called after every pass with (pass, model); returning false stops the run.
  std::function<bool(Index, const FactorModel<double>&)> onPass;
};

template <typename Scalar>
struct BatchResult {
  FactorModel<Scalar> model;
  RunLog log;
};

/// Randomized passes over all columns until the convergence rule fires.
/// SAGE100-style scaling comes from config.update.alphaSchedule, keyed on each
/// column's visit count (which equals the pass index in this setting).
inline BatchResult<double> run_batch(const MeasurementMatrixd& w, const BatchConfig& config) {
  using Clock = std::chrono::steady_clock;
  ColumnStore<double> store;
  std::vector<Index> processable;
  const Index min_obs = config.update.min_observed(config.rank);
  for (Index j = 0; j < w.cols(); ++j) {
    auto col = extract_column(w, j);
    if (col.size() >= min_obs) processable.push_back(j);
    store.push(std::move(col));
  }
  if (processable.empty()) throw Error(ErrorCode::DegenerateMatrix, "run_batch: no column can be processed");

  InitOptions opts;
  opts.onesColumn = config.onesColumn;
  BatchResult<double> res;
  if (config.init == InitKind::Random) {
    res.model = init_model<double>(w.rows(), config.rank, config.variant,
                                   RandomOrthonormalInit{config.seed, w.cols()}, opts);
  } else {
    res.model = init_model<double>(w.rows(), config.rank, config.variant, ColumnMeanFillInit<double>{w}, opts);
  }

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> history;
  history.push_back(rmse_observed(res.model, store));
  res.log.records.push_back({0, 0.0, history.back(), res.model.cols(), res.model.rows()});

  double seconds = 0.0;
  for (Index pass = 1; pass <= config.convergence.maxPasses; ++pass) {
    std::shuffle(processable.begin(), processable.end(), rng);
    const auto start = Clock::now();
    for (Index t : processable) process_column(res.model, store, t, config.update);
    seconds += std::chrono::duration<double>(Clock::now() - start).count();

    history.push_back(rmse_observed(res.model, store));
    res.log.records.push_back({pass, seconds, history.back(), res.model.cols(), res.model.rows()});
    if (!std::isfinite(history.back())) {
      throw Error(ErrorCode::NumericalFault, "run_batch: error became non-finite");
    }
    if (config.onPass && !config.onPass(pass, res.model)) break;
    if (has_converged(history, config.convergence)) {
      res.log.converged = true;
      break;
    }
    if (seconds >= config.convergence.maxSeconds) break;
  }
  return res;
}

}  // namespace onlinesfm
