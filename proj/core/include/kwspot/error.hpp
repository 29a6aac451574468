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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kwspot {

/// Failure categories raised across the pipeline. Every throwing API in this
/// library raises kwspot::Error carrying one of these codes.
enum class ErrorCode {
  kInvalidArgument,
  kIo,
  // audio
  kMalformedWav,
  kUnsupportedEncoding,
  kWrongSampleRate,
  kEmptyDataset,
  kUnreadableFile,
  // features / model
  kInvalidConfig,
  kWrongLength,
  kShapeMismatch,
  kEmptyClass,
  kDivergedLoss,
  kCorruptArtifact,
  kVersionMismatch,
  // quant
  kEmptyCalibrationSet,
  kUncalibratedTensor,
  kArenaOverflow,
  kBudgetExceeded,
  // interpreter / eval
  kUnknownKeyword,
  kLabelMismatch,
  kEmptyMatrix,
  // service
  kBadAudioFormat,
  kPortInUse,
  kClientProtocolError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace kwspot
