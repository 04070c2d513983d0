// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jumprev {

enum class ErrorKind {
  Config,
  Io,
  InvalidArgument,
  TimeOutOfRange,
  IntensityBoundExceeded,
  ExplosionDetected,
  NonfiniteState,
  NegativeProbability,
  AbsoluteContinuityViolation,
  QuadratureDivergence,
  DriftCorrectionDivergence,
  DivergentEntropy,
  EmptyEnsemble,
  BinMismatch,
};

std::string_view to_string(ErrorKind kind);

/// True for the kinds that signal a violated mathematical precondition
/// rather than a malformed input.
bool is_mathematical(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace jumprev
