// Copyright 2026 The vistruct Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ==============================================================================

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vistruct {

enum class ErrorCode {
  kInvalidArgument,
  kMalformedLine,
  kDanglingParent,
  kUnknownSymbol,
  kSyntaxError,
  kMaskNotFilled,
  kInvalidRecord,
  kStageInapplicable,
  kAlignmentError,
  kHeadNotFound,
  kNoEmbedding,
  kInvalidPlan,
  kIo,
  kSchema,
  kVocabulary,
  kDuplicateGold,
  kMissingField,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kDanglingParent: return "DanglingParent";
    case ErrorCode::kUnknownSymbol: return "UnknownSymbol";
    case ErrorCode::kSyntaxError: return "SyntaxError";
    case ErrorCode::kMaskNotFilled: return "MaskNotFilled";
    case ErrorCode::kInvalidRecord: return "InvalidRecord";
    case ErrorCode::kStageInapplicable: return "StageInapplicable";
    case ErrorCode::kAlignmentError: return "AlignmentError";
    case ErrorCode::kHeadNotFound: return "HeadNotFound";
    case ErrorCode::kNoEmbedding: return "NoEmbedding";
    case ErrorCode::kInvalidPlan: return "InvalidPlan";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kSchema: return "Schema";
    case ErrorCode::kVocabulary: return "Vocabulary";
    case ErrorCode::kDuplicateGold: return "DuplicateGold";
    case ErrorCode::kMissingField: return "MissingField";
  }
  return "Unknown";
}

// Every failure in the library surfaces as an Error. `position` carries a
// token index (codec) or a 1-based line number (file loaders) when known.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> position = std::nullopt)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        position_(position) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> position() const noexcept { return position_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> position_;
};

}  // namespace vistruct
