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

#include "screentime/error.hpp"

namespace screentime {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingPrerequisite: return "MissingPrerequisite";
    case ErrorCode::Unreadable: return "Unreadable";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::TooManyPeriods: return "TooManyPeriods";
    case ErrorCode::MalformedTemplate: return "MalformedTemplate";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::NonPositiveBox: return "NonPositiveBox";
    case ErrorCode::InvalidGender: return "InvalidGender";
    case ErrorCode::NegativeTimestamp: return "NegativeTimestamp";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::CorruptInput: return "CorruptInput";
    case ErrorCode::InsufficientPool: return "InsufficientPool";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NonIdentifiable: return "NonIdentifiable";
    case ErrorCode::UnknownPeriod: return "UnknownPeriod";
    case ErrorCode::NoFaces: return "NoFaces";
    case ErrorCode::NoCovariate: return "NoCovariate";
    case ErrorCode::TooFewGenres: return "TooFewGenres";
    case ErrorCode::EmptyGender: return "EmptyGender";
    case ErrorCode::DegenerateTable: return "DegenerateTable";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::InvalidEnum: return "InvalidEnum";
    case ErrorCode::DetectorFailed: return "DetectorFailed";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::ExternalCommandFailed: return "ExternalCommandFailed";
  }
  return "Unknown";
}

ErrorClass classify(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::MissingPrerequisite:
      return ErrorClass::Usage;
    case ErrorCode::DetectorFailed:
    case ErrorCode::ProtocolViolation:
    case ErrorCode::ExternalCommandFailed:
      return ErrorClass::External;
    default:
      return ErrorClass::Data;
  }
}

}  // namespace screentime
