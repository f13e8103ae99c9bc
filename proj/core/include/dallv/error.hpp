/* Copyright 2026 The dallv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef DALLV_ERROR_HPP_
#define DALLV_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dallv {

enum class ErrorCode {
  // numeric kernels
  kNearZeroNorm,
  kNonPositiveTemperature,
  kLengthMismatch,
  kLabelOutOfRange,
  kNonFiniteValue,
  kDimMismatch,
  // clipspace / adapter
  kEmptyTemplateSubset,
  kIndexOutOfRange,
  kEmptyVideo,
  kDimTooSmall,
  kStaleCache,
  // losses / optimizer
  kAlphaOutOfRange,
  kShapeMismatch,
  kNonFiniteGradient,
  // pseudo-labels
  kPercentileOutOfRange,
  kMisalignedBundle,
  kEmptyAfterFiltering,
  // file formats
  kBadMagic,
  kBadVersion,
  kTruncatedFile,
  kDuplicateVideoId,
  kZeroFrames,
  kNonUnitRow,
  kClassCountMismatch,
  kIdSetMismatch,
  kManifestInvalid,
  // pipeline
  kInvalidConfig,
  kUnlabeledSourceVideo,
  kMissingLabels,
  kConfigParse,
  kUnknownSubcommand,
  // filesystem
  kIo,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Thrown by every validating operation in the library. The code is stable and
// is what callers (and tests) should branch on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Filesystem failures as opposed to malformed or inconsistent input.
  bool is_io() const noexcept { return code_ == ErrorCode::kIo; }

 private:
  ErrorCode code_;
};

}  // namespace dallv

#endif  // DALLV_ERROR_HPP_
