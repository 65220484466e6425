// Copyright 2026 The Authors.
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

#ifndef RDFAIR_ERRORS_HPP_
#define RDFAIR_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace rdfair {

enum class ErrorCode {
  // linalg
  kNotSPD,
  kAsymmetric,
  kNoConvergence,
  // shapes and partitions
  kShapeMismatch,
  kDimMismatch,
  kPartitionMismatch,
  kNumericalFailure,
  // nn
  kStaleTrace,
  // training
  kEmptyDataset,
  kEmptyStage,
  kStaleStore,
  kPlanMismatch,
  kSamplerFailure,
  // exemplar selection
  kEmptySubset,
  kDegenerateClass,
  // metrics
  kMissingGroup,
  kSingleGroup,
  kEmpty,
  // data
  kInvalidSpec,
  kBadMagic,
  kTruncated,
  kUnsupportedDtype,
  kParseError,
  kMissingColumn,
  kIo,
  // cli
  kInvalidConfig,
  kMissingTelemetry,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotSPD: return "NotSPD";
    case ErrorCode::kAsymmetric: return "Asymmetric";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kPartitionMismatch: return "PartitionMismatch";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kStaleTrace: return "StaleTrace";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kEmptyStage: return "EmptyStage";
    case ErrorCode::kStaleStore: return "StaleStore";
    case ErrorCode::kPlanMismatch: return "PlanMismatch";
    case ErrorCode::kSamplerFailure: return "SamplerFailure";
    case ErrorCode::kEmptySubset: return "EmptySubset";
    case ErrorCode::kDegenerateClass: return "DegenerateClass";
    case ErrorCode::kMissingGroup: return "MissingGroup";
    case ErrorCode::kSingleGroup: return "SingleGroup";
    case ErrorCode::kEmpty: return "Empty";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncated: return "Truncated";
    case ErrorCode::kUnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kMissingTelemetry: return "MissingTelemetry";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above so the
// CLI can map it to a machine-readable error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace rdfair

#endif  // RDFAIR_ERRORS_HPP_
