// Copyright 2026 The kwspot Authors. All Rights Reserved.
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

#include "kwspot/error.hpp"

namespace kwspot {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kMalformedWav: return "MalformedWav";
    case ErrorCode::kUnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::kWrongSampleRate: return "WrongSampleRate";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kUnreadableFile: return "UnreadableFile";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kWrongLength: return "WrongLength";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kCorruptArtifact: return "CorruptArtifact";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kEmptyCalibrationSet: return "EmptyCalibrationSet";
    case ErrorCode::kUncalibratedTensor: return "UncalibratedTensor";
    case ErrorCode::kArenaOverflow: return "ArenaOverflow";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kUnknownKeyword: return "UnknownKeyword";
    case ErrorCode::kLabelMismatch: return "LabelMismatch";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kBadAudioFormat: return "BadAudioFormat";
    case ErrorCode::kPortInUse: return "PortInUse";
    case ErrorCode::kClientProtocolError: return "ClientProtocolError";
  }
  return "Unknown";
}

}  // namespace kwspot
