// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include "jumprev/errors.hpp"

namespace jumprev {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorKind::IntensityBoundExceeded: return "IntensityBoundExceeded";
    case ErrorKind::ExplosionDetected: return "ExplosionDetected";
    case ErrorKind::NonfiniteState: return "NonfiniteState";
    case ErrorKind::NegativeProbability: return "NegativeProbability";
    case ErrorKind::AbsoluteContinuityViolation: return "AbsoluteContinuityViolation";
    case ErrorKind::QuadratureDivergence: return "QuadratureDivergence";
    case ErrorKind::DriftCorrectionDivergence: return "DriftCorrectionDivergence";
    case ErrorKind::DivergentEntropy: return "DivergentEntropy";
    case ErrorKind::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorKind::BinMismatch: return "BinMismatch";
  }
  return "UnknownError";
}

bool is_mathematical(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Io:
    case ErrorKind::InvalidArgument:
    case ErrorKind::BinMismatch:
    case ErrorKind::EmptyEnsemble:
    case ErrorKind::TimeOutOfRange:
      return false;
    default:
      return true;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace jumprev
