// Copyright 2026 The Screentime Authors.
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

#ifndef SCREENTIME_ERROR_HPP_
#define SCREENTIME_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace screentime {

enum class ErrorCode {
  // usage / configuration
  InvalidArgument,
  MissingPrerequisite,
  // data
  Unreadable,
  EmptyManifest,
  DuplicateId,
  TooManyPeriods,
  MalformedTemplate,
  OutOfBounds,
  NonPositiveBox,
  InvalidGender,
  NegativeTimestamp,
  MalformedRecord,
  CorruptInput,
  InsufficientPool,
  InsufficientData,
  NonIdentifiable,
  UnknownPeriod,
  NoFaces,
  NoCovariate,
  TooFewGenres,
  EmptyGender,
  DegenerateTable,
  LengthMismatch,
  ZeroVariance,
  UnknownTask,
  InvalidEnum,
  // external processes
  DetectorFailed,
  ProtocolViolation,
  ExternalCommandFailed,
};

std::string_view to_string(ErrorCode code);

// Coarse classes that map onto process exit codes.
enum class ErrorClass { Usage, Data, External };

ErrorClass classify(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace screentime

#endif  // SCREENTIME_ERROR_HPP_
