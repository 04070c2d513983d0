// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>

#include "jumprev/core.hpp"
#include "jumprev/trajectory.hpp"

namespace jumprev {

struct SimulationOptions {
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;         // small-jump cutoff for infinite-activity kernels
  int ode_steps = 1000;         // drift flow step = T / ode_steps
  std::size_t max_jumps = 1'000'000;
  double box_margin = -1.0;     // < 0: one box diagonal
  int threads = 0;              // 0: hardware concurrency
  double window_fraction = 0.1; // thinning look-ahead window, fraction of T
  double bound_safety = 1.5;
};

/// Effective drift between simulated jumps:
///   b_eff = b^delta - sum_{atoms, |xi| <= delta} rate xi
///                   - int_{eps < |xi| <= delta} xi k_{t,x}(xi) dxi
/// (atoms are never discarded; only density mass at |xi| <= eps is).  A
/// compensator drift of a finite-activity kernel gives b_eff = 0.
DriftField effective_drift(const ProcessSpec& spec, double epsilon);

/// The kernel actually simulated: the configured kernel with density mass at
/// |xi| <= epsilon removed.
LocalKernel simulated_kernel(const ProcessSpec& spec, double epsilon, double t, const Point& x);

/// Total intensity of `simulated_kernel`.
double total_intensity(const LocalKernel& kernel, double epsilon);

PathEnsemble simulate_forward(const ProcessSpec& spec, const SimulationOptions& options);

struct EnsembleSummary {
  std::size_t n_paths = 0;
  double mean_jumps = 0.0;
  double var_jumps = 0.0;
  std::size_t max_jumps = 0;
  Point mean_terminal;
  Point var_terminal;
};

EnsembleSummary summarize(const PathEnsemble& ensemble);

/// Worker count: explicit value if > 0, else JUMPREV_THREADS, else the
/// hardware concurrency.
int resolve_threads(int requested);

}  // namespace jumprev
