// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dyninit {

enum class ErrorCode {
  PointBehindCamera,
  NonPositiveDepth,
  DegenerateBaseline,
  NonUnitQuaternion,
  NonOrthonormalMatrix,
  MalformedHeader,
  TruncatedPayload,
  BadMagic,
  ConfidenceMissingForID,
  DuplicateObservation,
  OutOfBoundsPixel,
  DimensionMismatch,
  ProviderFailure,
  TooFewPoints,
  DegenerateConfiguration,
  EmptyTrajectory,
  UnderdeterminedSystem,
  IllConditioned,
  DegenerateRotation,
  AllMaskedFrame,
  EmptyMask,
  ImageTooSmall,
  DegenerateVariance,
  MissingInput,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library. `code()` identifies the failure class,
/// `what()` carries a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the error-code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace dyninit
