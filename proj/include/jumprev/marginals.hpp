// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "jumprev/core.hpp"
#include "jumprev/trajectory.hpp"

namespace jumprev {

/// A finite-state restriction of a process on a finite or lattice space:
/// off-diagonal rates J(t, i -> j) between the discrete points.  Atoms that
/// land outside the point set are dropped.
struct FiniteChain {
  std::shared_ptr<const PointLocator> states;
  std::function<Eigen::MatrixXd(double t)> rates;
  bool time_homogeneous = false;

  std::size_t size() const { return states->size(); }
  /// Generator Q(t): rates off the diagonal, minus the row sums on it.
  Eigen::MatrixXd generator(double t) const;
};

/// Throws Config for continuous spaces, density kernels, or a nonzero
/// effective drift (a chain cannot move between jumps).
FiniteChain finite_chain(const ProcessSpec& spec);

/// Spatial cells of a histogram: either the points of a discrete space or a
/// regular grid over a box.
class Binning {
 public:
  static Binning states(std::shared_ptr<const PointLocator> points);
  static Binning regular(const Box& box, std::vector<int> per_dim);
  /// Regular grid sized for about 20 expected paths per occupied cell.
  static Binning automatic(const Box& box, std::size_t n_paths);

  std::size_t size() const;
  int dimension() const;
  bool is_states() const { return static_cast<bool>(points_); }
  /// Cell index of x, or -1 if x is outside every cell.
  long cell_of(const Point& x) const;
  Point center(std::size_t cell) const;
  double cell_volume() const;  // 1 for state cells
  const Box& box() const { return box_; }
  const std::vector<int>& per_dim() const { return per_dim_; }
  const std::shared_ptr<const PointLocator>& points() const { return points_; }

  bool operator==(const Binning& other) const;

 private:
  std::shared_ptr<const PointLocator> points_;
  Box box_;
  std::vector<int> per_dim_;
};

struct MarginalFlow {
  enum class Kind { ProbabilityVectors, Histogram, Density };

  Kind kind = Kind::ProbabilityVectors;
  std::vector<double> times;
  Binning cells;
  /// One vector per time: probabilities, raw counts, or density values.
  std::vector<Eigen::VectorXd> slices;
  std::size_t n_paths = 0;
  /// |sum - 1| before renormalisation, per slice (probability vectors).
  std::vector<double> renormalization;
  /// Smoothing bandwidth per dimension (Density only).
  std::vector<double> bandwidth;
  /// Cells raised to the positivity floor (Density only).
  std::size_t floored_cells = 0;

  /// Probability mass per cell at slice i (counts / n_paths for histograms,
  /// density * volume for densities).
  Eigen::VectorXd masses(std::size_t i) const;
  /// Index of the slice at time t (exact match required).
  std::size_t slice_at(double t) const;
};

/// Probability vectors solving dp/dt = p^T Q(t).  Homogeneous chains use the
/// matrix exponential, others an adaptive Dormand-Prince integration.
MarginalFlow master_equation_marginals(const ProcessSpec& spec, std::span<const double> time_grid);
MarginalFlow master_equation_marginals(const FiniteChain& chain, const Eigen::VectorXd& p0,
                                       std::span<const double> time_grid);

struct EmpiricalOptions {
  bool smooth = false;
  double floor = 1e-12;
};

MarginalFlow empirical_marginals(const PathEnsemble& ensemble, std::span<const double> time_grid,
                                 const Binning& binning, const EmpiricalOptions& options = {});

/// CSV with columns t, x0..x{d-1}, mass.  Probability vectors round-trip
/// bit-exactly through write/read.
void write_marginals_csv(const MarginalFlow& flow, const std::string& path);
MarginalFlow read_marginals_csv(const std::string& path);

}  // namespace jumprev
