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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace onlinesfm {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Index = Eigen::Index;

enum class ErrorCode {
  InvalidDimension,
  EmptyColumn,
  EmptyObservation,
  ColumnSkipped,
  NumericalFault,
  IndexError,
  WrongRank,
  DegenerateAlignment,
  DegenerateMatrix,
  OcclusionInfeasible,
  StreamError,
  ParseError,
  DuplicateEntry,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::EmptyColumn: return "EmptyColumn";
    case ErrorCode::EmptyObservation: return "EmptyObservation";
    case ErrorCode::ColumnSkipped: return "ColumnSkipped";
    case ErrorCode::NumericalFault: return "NumericalFault";
    case ErrorCode::IndexError: return "IndexError";
    case ErrorCode::WrongRank: return "WrongRank";
    case ErrorCode::DegenerateAlignment: return "DegenerateAlignment";
    case ErrorCode::DegenerateMatrix: return "DegenerateMatrix";
    case ErrorCode::OcclusionInfeasible: return "OcclusionInfeasible";
    case ErrorCode::StreamError: return "StreamError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateEntry: return "DuplicateEntry";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// All library failures are reported through this one exception type; the code
// says which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// RSAGE is SAGE driven by the l1 weight solver, so it is not a variant here.
enum class Variant { Sage, MdIsvd };

inline const char* to_string(Variant v) {
  return v == Variant::Sage ? "sage" : "md-isvd";
}

}  // namespace onlinesfm
