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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "onlinesfm/factor_model.hpp"
#include "onlinesfm/online_driver.hpp"
#include "onlinesfm/types.hpp"

namespace onlinesfm {

struct TrackObservation {
  std::int64_t trackId = 0;
  double u = 0.0;
  double v = 0.0;
};

struct Frame {
  std::int64_t frameId = 0;
  std::vector<TrackObservation> observations;
};

struct OnlineConfig {
  Variant variant = Variant::Sage;
  Index rank = 4;
  bool onesColumn = true;
  /// Revisit updates after each new frame.
  Index iterationsPerFrame = 0;
  std::uint64_t seed = 0;
  UpdateConfig update;
  std::optional<Index> storeCapacity;
  /// A track id that vanished for at least one frame may not come back.
  bool allowTrackReentry = false;
  /// Called after each frame with (frame index, model).
  std::function<void(Index, const FactorModel<double>&)> onFrame;
};

/// Streaming state shared by the simulated and the real-time drivers: track
/// bookkeeping, the column store, the model, and the revisit generator.
class OnlineSession {
 public:
  explicit OnlineSession(OnlineConfig config)
      : config_(std::move(config)), store_(config_.storeCapacity), rng_(config_.seed) {}

  /// Adds rows for new tracks and absorbs the frame's x then y column.
  void ingest(const Frame& frame) {
    if (last_frame_ && frame.frameId <= *last_frame_) {
      throw Error(ErrorCode::StreamError, "frame ids must be strictly increasing");
    }
    std::unordered_set<std::int64_t> seen;
    std::vector<std::int64_t> fresh;
    for (const auto& obs : frame.observations) {
      if (!std::isfinite(obs.u) || !std::isfinite(obs.v)) {
        throw Error(ErrorCode::StreamError, "non-finite coordinate in frame " + std::to_string(frame.frameId));
      }
      if (!seen.insert(obs.trackId).second) {
        throw Error(ErrorCode::StreamError, "track " + std::to_string(obs.trackId) + " repeated in frame");
      }
      auto it = rows_.find(obs.trackId);
      if (it == rows_.end()) {
        fresh.push_back(obs.trackId);
      } else if (!config_.allowTrackReentry && last_seen_[obs.trackId] != frame_count_ - 1) {
        throw Error(ErrorCode::StreamError, "track " + std::to_string(obs.trackId) + " reappeared after a gap");
      }
    }
    for (auto id : fresh) rows_.emplace(id, static_cast<Index>(rows_.size()));
    for (auto id : seen) last_seen_[id] = frame_count_;
    last_frame_ = frame.frameId;

    ObservedColumn<double> xs, ys;
    xs.frameId = ys.frameId = frame.frameId;
    std::vector<std::pair<Index, const TrackObservation*>> sorted;
    sorted.reserve(frame.observations.size());
    for (const auto& obs : frame.observations) sorted.emplace_back(rows_.at(obs.trackId), &obs);
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    xs.values.resize(static_cast<Index>(sorted.size()));
    ys.values.resize(static_cast<Index>(sorted.size()));
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      xs.omega.push_back(sorted[i].first);
      ys.omega.push_back(sorted[i].first);
      xs.values(static_cast<Index>(i)) = sorted[i].second->u;
      ys.values(static_cast<Index>(i)) = sorted[i].second->v;
    }
    xs.columnId = store_.size();
    ys.columnId = store_.size() + 1;
    store_.push(std::move(xs));
    store_.push(std::move(ys));
    ++frame_count_;

    const Index n = static_cast<Index>(rows_.size());
    if (!model_) {
      if (n < config_.rank) return;
      InitOptions opts;
      opts.onesColumn = config_.onesColumn;
      model_ = init_model<double>(n, config_.rank, config_.variant, RandomOrthonormalInit{config_.seed, 0}, opts);
    } else if (n > model_->rows()) {
      add_rows(*model_, n - model_->rows());
    }
    for (Index t = model_->cols(); t < store_.size(); ++t) process_column(*model_, store_, t, config_.update);
  }

  /// One revisit of a uniformly drawn retained column. Returns false when
  /// nothing can be revisited yet.
  bool revisit() {
    if (!model_ || model_->cols() == 0) return false;
    std::uniform_int_distribution<Index> pick(store_.first_retained(), model_->cols() - 1);
    process_column(*model_, store_, pick(rng_), config_.update);
    return true;
  }

  bool initialized() const { return model_.has_value(); }
  const FactorModel<double>& model() const {
    if (!model_) throw Error(ErrorCode::StreamError, "model not initialized: fewer tracks than the rank");
    return *model_;
  }
  const ColumnStore<double>& store() const { return store_; }
  Index frames() const { return frame_count_; }
  Index row_of(std::int64_t trackId) const { return rows_.at(trackId); }
  const std::unordered_map<std::int64_t, Index>& track_rows() const { return rows_; }

  double rmse() const { return model_ ? rmse_observed(*model_, store_) : 0.0; }

 private:
  OnlineConfig config_;
  ColumnStore<double> store_;
  std::mt19937_64 rng_;
  std::optional<FactorModel<double>> model_;
  std::unordered_map<std::int64_t, Index> rows_;
  std::unordered_map<std::int64_t, Index> last_seen_;
  std::optional<std::int64_t> last_frame_;
  Index frame_count_ = 0;
};

struct OnlineResult {
  FactorModel<double> model;
  RunLog log;
  std::unordered_map<std::int64_t, Index> trackRows;
};

/// Simulated streaming: each frame is ingested, then a fixed budget of
/// revisits runs before the next frame arrives.
inline OnlineResult run_online(const std::vector<Frame>& frames, const OnlineConfig& config) {
  using Clock = std::chrono::steady_clock;
  OnlineSession session(config);
  OnlineResult res;
  double seconds = 0.0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto start = Clock::now();
    session.ingest(frames[f]);
    for (Index b = 0; b < config.iterationsPerFrame; ++b) {
      if (!session.revisit()) break;
    }
    seconds += std::chrono::duration<double>(Clock::now() - start).count();
    if (!session.initialized()) continue;
    res.log.records.push_back({static_cast<Index>(f), seconds, session.rmse(), session.model().cols(),
                               session.model().rows()});
    if (config.onFrame) config.onFrame(static_cast<Index>(f), session.model());
  }
  res.model = session.model();
  res.trackRows = session.track_rows();
  return res;
}

/// Single-producer / single-consumer frame queue. Frames are immutable once
/// enqueued.
class FrameQueue {
 public:
  void push(Frame frame) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      frames_.push_back(std::make_shared<const Frame>(std::move(frame)));
    }
    cv_.notify_one();
  }

  void close() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  std::shared_ptr<const Frame> try_pop() {
    std::lock_guard<std::mutex> lock(mutex_);
    if (frames_.empty()) return nullptr;
    auto f = frames_.front();
    frames_.pop_front();
    return f;
  }

  /// Blocks until a frame is available or the queue is closed and drained.
  std::shared_ptr<const Frame> wait_pop() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return !frames_.empty() || closed_; });
    if (frames_.empty()) return nullptr;
    auto f = frames_.front();
    frames_.pop_front();
    return f;
  }

  bool closed_and_empty() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return closed_ && frames_.empty();
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::shared_ptr<const Frame>> frames_;
  bool closed_ = false;
};

struct RealtimeResult {
  OnlineResult result;
  std::vector<Index> revisitsPerFrame;
};

/// Updater side of the real-time contract: drains the queue, spending idle
/// time on revisits, until the producer closes the queue. Owns the model.
inline RealtimeResult run_realtime(FrameQueue& queue, const OnlineConfig& config) {
  using Clock = std::chrono::steady_clock;
  OnlineSession session(config);
  RealtimeResult out;
  const auto start = Clock::now();
  Index revisits = 0;
  bool any = false;
  while (true) {
    std::shared_ptr<const Frame> frame = queue.try_pop();
    if (!frame) {
      if (queue.closed_and_empty()) break;
      if (session.initialized() && session.revisit()) {
        ++revisits;
        continue;
      }
      frame = queue.wait_pop();
      if (!frame) break;
    }
    if (any) out.revisitsPerFrame.push_back(revisits);
    revisits = 0;
    any = true;
    session.ingest(*frame);
    if (session.initialized()) {
      const double sec = std::chrono::duration<double>(Clock::now() - start).count();
      out.result.log.records.push_back({session.frames() - 1, sec, session.rmse(), session.model().cols(),
                                        session.model().rows()});
    }
  }
  if (any) out.revisitsPerFrame.push_back(revisits);
  out.result.model = session.model();
  out.result.trackRows = session.track_rows();
  return out;
}

}  // namespace onlinesfm
