// Copyright 2026 The dyninit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dyninit/errors.hpp"

namespace dyninit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PointBehindCamera: return "PointBehindCamera";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::DegenerateBaseline: return "DegenerateBaseline";
    case ErrorCode::NonUnitQuaternion: return "NonUnitQuaternion";
    case ErrorCode::NonOrthonormalMatrix: return "NonOrthonormalMatrix";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::ConfidenceMissingForID: return "ConfidenceMissingForID";
    case ErrorCode::DuplicateObservation: return "DuplicateObservation";
    case ErrorCode::OutOfBoundsPixel: return "OutOfBoundsPixel";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ProviderFailure: return "ProviderFailure";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::UnderdeterminedSystem: return "UnderdeterminedSystem";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::DegenerateRotation: return "DegenerateRotation";
    case ErrorCode::AllMaskedFrame: return "AllMaskedFrame";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace dyninit
