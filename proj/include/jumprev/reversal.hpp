// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

// Backward characteristics: the flux equation p(x) J(x->y) = p(y) Jb(y->x)
// for the backward kernel, the backward drift, and closed-form reversals.

#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "jumprev/core.hpp"
#include "jumprev/marginals.hpp"

namespace jumprev {

/// pi(x, y) = p(x) J(x -> y), zero diagonal.
Eigen::MatrixXd flux_matrix(const Eigen::VectorXd& p, const Eigen::MatrixXd& rates);

struct BackwardSlice {
  double t = 0.0;
  /// rates(y, x) = J<-(t, y -> x); empty rows where p(y) = 0.
  Eigen::MatrixXd rates;
  std::vector<bool> empty_rows;
  /// Largest incoming flux into a zero-mass state (0 if none).
  double orphan_inflow = 0.0;
};

/// Solves the flux equation on a finite state set.  Throws
/// AbsoluteContinuityViolation when the incoming flux into a zero-mass
/// state exceeds `tolerance`; the message names the state and the mass.
BackwardSlice solve_flux_equation(const Eigen::VectorXd& p, const Eigen::MatrixXd& forward, double t,
                                  double tolerance = 1e-12);
/// Same, reading p_t from a probability-vector marginal (t must be a grid
/// time) and J-> from the chain.
BackwardSlice solve_flux_equation(const MarginalFlow& marginal, const FiniteChain& chain, double t,
                                  double tolerance = 1e-12);

/// b<-(t, x) = -b->(t, x) + int trunc(y - x) (J-> + J<-)_{t,x}(dy); exactly
/// -b-> when delta = 0.  Throws QuadratureDivergence.
Point backward_drift(const DriftField& forward_drift, const JumpKernel& forward_kernel,
                     const JumpKernel& backward_kernel, TruncationDelta delta, double t, const Point& x);

/// Finite-chain form of the same formula at every state.
std::vector<Point> backward_drift_on_states(const PointLocator& states, const std::vector<Point>& forward_drift,
                                            const Eigen::MatrixXd& forward, const Eigen::MatrixXd& backward,
                                            TruncationDelta delta);

/// (b, Lambda) -> (-b, eta#Lambda) with eta(xi) = -xi.
std::pair<Point, LevyMeasure> levy_reverse(const Point& b, const LevyMeasure& levy);

struct ReversibilityReport {
  bool is_reversible = false;
  double max_flux_asymmetry = 0.0;  // sup |pi~/pi - 1| over entries with pi > floor
  double max_flux_difference = 0.0; // sup |pi - pi~|
};

ReversibilityReport reversibility_check(const Eigen::VectorXd& p, const Eigen::MatrixXd& rates,
                                        double tolerance = 1e-10, double floor = 1e-300);

struct AbsoluteContinuityReport {
  double t = 0.0;
  double orphan_mass = 0.0;  // I_{p sigma} mass on zero-mass states
  std::vector<std::pair<std::size_t, double>> offenders;
  bool pass = true;
};

/// sigma(x, y) = 1 ^ |y - x|^2 over the embedded points.
AbsoluteContinuityReport check_absolute_continuity(const Eigen::VectorXd& p, const Eigen::MatrixXd& rates,
                                                   const PointLocator& states, double tolerance = 1e-12,
                                                   double t = 0.0);

/// Backward characteristics on a finite chain, one slice per marginal grid
/// time; a step function in t between slices.
struct BackwardCharacteristics {
  std::shared_ptr<const PointLocator> states;
  std::vector<double> times;
  std::vector<BackwardSlice> slices;
  std::vector<std::vector<Point>> drift;  // [slice][state]
  TruncationDelta delta;
  std::vector<AbsoluteContinuityReport> validity;

  std::size_t slice_index(double t) const;
  JumpKernel kernel() const;
  DriftField drift_field() const;
};

/// Assembles backward characteristics; throws AbsoluteContinuityViolation
/// when a slice fails.
BackwardCharacteristics reverse_finite(const ProcessSpec& spec, const FiniteChain& chain,
                                       const MarginalFlow& marginal, double tolerance = 1e-12);

/// Bin-level flux equation on a histogram marginal (continuous spaces).
struct BinnedReversal {
  double t = 0.0;
  Eigen::VectorXd masses;
  Eigen::MatrixXd forward;   // (a, b): rate from bin a into bin b
  Eigen::MatrixXd backward;  // (b, a)
  double orphan_mass = 0.0;
  double total_flux = 0.0;
  double max_shift_ratio = 0.0;  // sup of m(y - xi) / m(y) over the xi-grid
  bool pass = true;
};

BinnedReversal solve_flux_binned(const MarginalFlow& marginal, std::size_t slice, const ProcessSpec& spec,
                                 double epsilon, double orphan_tolerance);

}  // namespace jumprev
