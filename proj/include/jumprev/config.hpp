// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

// Configuration documents (JSON) describing processes and runs.
// The schema is documented in README.md.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jumprev/core.hpp"
#include "jumprev/expr.hpp"

namespace jumprev {

struct VerifyOptions {
  /// Edges of the time bins, in the reversed clock s = T - t.  Empty means
  /// `time_bins` equal bins.
  std::vector<double> time_edges;
  int time_bins = 10;
  /// Drop bins whose forward-time image touches t = 0.
  bool exclude_t0 = true;
  /// Multiplier applied to the theoretical backward rates (1 = honest).
  double theory_scale = 1.0;
  double min_expected = 10.0;
  double pass_within_4sigma = 0.99;
  double pass_within_3sigma = 0.95;
};

struct Tolerances {
  double absolute_continuity = 1e-12;  // absolute, finite/lattice spaces
  double binned_orphan = 1e-2;         // relative to total flux, binned spaces
  double flux = 1e-10;
  double reversible = 1e-10;
};

struct EntropyOptions {
  double initial_term = 0.0;
  int grid_intervals = 100;  // even
  std::size_t mc_paths = 0;  // 0: no pathwise oracle
};

struct RunConfig {
  ProcessSpec spec;
  ExprParams params;

  std::size_t n_paths = 0;
  std::optional<std::uint64_t> seed;
  double epsilon = 0.0;
  int ode_steps = 1000;
  std::size_t max_jumps = 1'000'000;
  double box_margin = -1.0;  // < 0: one box diagonal
  std::optional<double> drift_bound;

  /// Marginal time grid.  Empty means T*i/grid_points, i = 1..grid_points.
  std::vector<double> time_grid;
  int grid_points = 10;

  /// Spatial bins per dimension for continuous spaces (0: automatic).
  std::vector<int> bins_per_dim;
  bool smooth = false;

  std::optional<std::string> tilt;
  Tolerances tolerances;
  VerifyOptions verify;
  EntropyOptions entropy;
  int threads = 0;
  std::vector<std::string> pipeline;
  std::string name;

  /// The marginal grid, resolved against the horizon.
  std::vector<double> resolved_time_grid() const;
};

/// Parses a configuration document.  Throws Error(Config).
RunConfig parse_config(std::string_view text, std::string name = "config");
RunConfig load_config_file(const std::string& path);
RunConfig load_demo(std::string_view name);

/// Compiles a tilt expression j(t, x, y) (with xi = y - x).
TiltFunction parse_tilt(std::string_view expression, const ExprParams& params, int dimension);

std::vector<std::string> demo_names();
std::optional<std::string_view> demo_document(std::string_view name);

}  // namespace jumprev
