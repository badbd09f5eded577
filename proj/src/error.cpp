// Copyright 2026 The sotif-fm Authors
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

#include "sotif/error.hpp"

namespace sotif
{

std::string_view to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::kConfigInvalid: return "CONFIG_INVALID";
    case ErrorCode::kEpisodeInvalid: return "EPISODE_INVALID";
    case ErrorCode::kInvalidSpec: return "INVALID_SPEC";
    case ErrorCode::kOrdering: return "ORDERING";
    case ErrorCode::kMalformedLog: return "MALFORMED_LOG";
    case ErrorCode::kIncompleteTrace: return "INCOMPLETE_TRACE";
    case ErrorCode::kMismatchedInputs: return "MISMATCHED_INPUTS";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kValidationError: return "VALIDATION_ERROR";
    case ErrorCode::kEmptyInput: return "EMPTY_INPUT";
    case ErrorCode::kLengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::kEmptyContingency: return "EMPTY_CONTINGENCY";
  }
  return "UNKNOWN";
}

}  // namespace sotif
