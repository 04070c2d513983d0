// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "jumprev/core.hpp"
#include "jumprev/marginals.hpp"
#include "jumprev/trajectory.hpp"

namespace jumprev {

/// MP_delta(p0, b^P, j J^R): the kernel is wrapped as Tilted(base, j); for
/// delta > 0 the drift gains int trunc(xi) (j - 1) J^R(dxi).  A constant
/// unit tilt returns the reference unchanged.  Throws
/// DriftCorrectionDivergence.
ProcessSpec tilt_process(const ProcessSpec& reference, const TiltFunction& tilt);

struct EntropyReport {
  double initial_term = 0.0;
  double running_term = 0.0;
  double total = 0.0;
  double error = 0.0;  // |trapezoid - coarse midpoint|
  bool divergent = false;
};

/// Running term int_0^T sum_x p_t(x) int h(j(t, x, y)) J^R_{t,x}(dy) dt by
/// the trapezoid rule on the marginal grid, which must run from 0 to T with
/// an even number of equal intervals.
EntropyReport relative_entropy(const ProcessSpec& reference, const TiltFunction& tilt,
                               const MarginalFlow& tilted_marginal, double initial_entropy);

/// sum over jumps of log j(t, x-, x) - int_0^T int (j - 1) J^R_{t,X_t}(dy) dt;
/// -inf when the path has a jump where j = 0.  Reference must have finite
/// activity.
double path_log_likelihood(const ProcessSpec& reference, const TiltFunction& tilt, const Trajectory& traj);

/// Discrete relative entropy sum p log(p / q) (+inf if p is not << q).
double discrete_relative_entropy(std::span<const double> p, std::span<const double> q);

}  // namespace jumprev
