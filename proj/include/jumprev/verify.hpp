// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "jumprev/config.hpp"
#include "jumprev/core.hpp"
#include "jumprev/marginals.hpp"
#include "jumprev/reversal.hpp"
#include "jumprev/trajectory.hpp"

namespace jumprev {

/// Jump counts and occupation times per (time bin, from cell, to cell).
/// Time bins are in the clock of the paths being counted.
struct IntensityEstimate {
  std::vector<double> time_edges;
  Binning cells;
  std::size_t n_paths = 0;
  /// counts[k](a, b), occupation[k](a)
  std::vector<Eigen::MatrixXd> counts;
  std::vector<Eigen::VectorXd> occupation;

  std::size_t time_bins() const { return time_edges.size() - 1; }
  double rate(std::size_t k, std::size_t a, std::size_t b) const;
  /// sqrt(count) / occupation (Poisson approximation).
  double standard_error(std::size_t k, std::size_t a, std::size_t b) const;
};

/// Counts the jumps of the given paths as they are (no reversal).
IntensityEstimate estimate_intensity(const PathEnsemble& ensemble, const std::vector<double>& time_edges,
                                     const Binning& cells, int threads = 1);

/// Reverses every path, then estimates.  Time bins refer to the reversed
/// clock s = T - t.
IntensityEstimate estimate_backward_intensity(const PathEnsemble& forward, const std::vector<double>& time_edges,
                                              const Binning& cells, int threads = 1);

/// Rate of from -> to jumps at the midpoint of the time bin [lo, hi], in the
/// clock of the given paths.  Jumps and occupation are weighted by the local
/// quadratic kernel K(u) = (3/8)(3 - 5u^2), u in [-1, 1] across the bin,
/// which removes the curvature bias of the plain count / occupation ratio.
struct PointRateEstimate {
  double rate = 0.0;
  double standard_error = 0.0;  // sqrt(sum K(u_i)^2) / weighted occupation
  double count = 0.0;           // unweighted jumps in the bin
  double weighted_occupation = 0.0;
};

PointRateEstimate local_quadratic_rate(const PathEnsemble& ensemble, double lo, double hi, const Binning& cells,
                                       std::size_t from, std::size_t to);

struct CellComparison {
  std::size_t time_bin = 0;
  std::size_t from = 0, to = 0;
  double forward_time = 0.0;  // T - s at the bin midpoint
  double empirical = 0.0;
  double theoretical = 0.0;
  double standard_error = 0.0;
  double z = 0.0;
  double count = 0.0, expected = 0.0, occupation = 0.0;
  bool usable = false;
};

struct ReversalReport {
  std::vector<CellComparison> cells;
  std::size_t usable = 0;
  double within_3sigma = 0.0;  // fractions of usable cells
  double within_4sigma = 0.0;
  std::optional<CellComparison> worst;
  bool pass = false;
};

/// Theoretical backward rate at forward time t between cells.
using BackwardRate = std::function<double(double t, std::size_t from, std::size_t to)>;

/// z = (empirical - theory) / SE per cell, with SE = sqrt(max(count,
/// expected)) / occupation.  Cells are usable when expected >= min_expected
/// or count >= min_expected; time bins touching forward t = 0 are skipped
/// when options.exclude_t0.
ReversalReport compare_reversal(const IntensityEstimate& estimate, double horizon, const BackwardRate& theory,
                                const VerifyOptions& options);

/// Theory from backward characteristics solved at the forward bin
/// midpoints.  Throws BinMismatch if the state sets differ.
ReversalReport compare_reversal(const IntensityEstimate& estimate, double horizon,
                                const BackwardCharacteristics& backward, const VerifyOptions& options);

/// Backward characteristics at the forward midpoints of the estimate's time
/// bins (oracle marginals).
BackwardCharacteristics backward_at_bin_midpoints(const ProcessSpec& spec, const std::vector<double>& reversed_edges,
                                                  double tolerance = 1e-12);

/// Resolved reversed-clock edges for the options.
std::vector<double> verify_time_edges(const VerifyOptions& options, double horizon);

// ---------------------------------------------------------------------------

/// A test function with an optional exact gradient.
struct TestFunction {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;  // empty: central differences

  double operator()(const Point& x) const { return value(x); }
  Point grad(const Point& x) const;
};

TestFunction test_function_from_expression(const std::string& expression, const ExprParams& params = {});

/// Gamma(u, v)(x) = int [u(x+xi) - u(x)][v(x+xi) - v(x)] K(dxi).
double carre_du_champ(const LocalKernel& kernel, const Point& x, const TestFunction& u, const TestFunction& v);

/// b . grad u(x) + int [u(x+xi) - u(x) - grad u(x) . trunc(xi)] K(dxi).
/// The gradient is only evaluated when b != 0 or delta > 0.
double apply_generator(const Point& drift, const LocalKernel& kernel, TruncationDelta delta, const TestFunction& u,
                       const Point& x);

enum class Direction { Forward, Backward };

double apply_generator(const ProcessSpec& spec, const BackwardCharacteristics* backward, Direction direction,
                       const TestFunction& u, double t, const Point& x);

struct IbpResult {
  double residual = 0.0;
  double error_bar = 0.0;
};

/// sum_x p_t(x) [(L-> u + L<- u)(x) v(x) + Gamma(u, v)(x)] with exact
/// summation over the chain (error bar 0).
IbpResult ibp_residual(const ProcessSpec& spec, const BackwardCharacteristics& backward,
                       const MarginalFlow& marginal, double t, const TestFunction& u, const TestFunction& v);

/// Monte Carlo form over sampled states X_t (error bar 3 SE).
IbpResult ibp_residual_mc(const ProcessSpec& spec, const BackwardCharacteristics& backward,
                          const std::vector<Point>& samples, double t, const TestFunction& u, const TestFunction& v);

}  // namespace jumprev
