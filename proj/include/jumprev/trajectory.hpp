// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "jumprev/core.hpp"

namespace jumprev {

/// Deterministic flow of dx/dt = b(t, x): maps (t0, x0) to the state at
/// t1 >= t0.  Classical RK4 with n = ceil((t1 - t0) / step) equal steps.
class DriftFlow {
 public:
  DriftFlow() = default;
  DriftFlow(DriftField drift, double step);

  Point operator()(double t0, const Point& x0, double t1) const;
  bool is_trivial() const { return drift_.is_zero(); }
  const DriftField& drift() const { return drift_; }

 private:
  DriftField drift_;
  double step_ = 1e-3;
};

/// A cadlag path on [0, T]: initial state, jump events with their pre- and
/// post-jump states, and the drift flow in between.  Storage is flat; a
/// reversed trajectory shares the data and flips an orientation flag, so
/// reversal is an exact involution.
class Trajectory {
 public:
  struct Event {
    double t = 0.0;
    Point pre;   // left limit at t
    Point post;  // value at t
    Point jump() const { return post - pre; }
  };

  Trajectory() = default;
  Trajectory(const Point& initial, double horizon, std::shared_ptr<const DriftFlow> flow);

  /// Appends a jump at time t > last event time (forward orientation only).
  void add_event(double t, const Point& pre, const Point& post);
  /// Stores the state at T (forward orientation only).
  void finish(const Point& terminal);

  double horizon() const { return horizon_; }
  int dimension() const { return dim_; }
  std::size_t size() const { return times_.size(); }
  bool reversed() const { return reversed_; }

  /// Event i in the orientation of this trajectory.
  Event event(std::size_t i) const;
  std::vector<Event> events() const;
  Point initial_state() const;
  Point terminal_state() const;

  /// Cadlag evaluation.  Throws TimeOutOfRange unless 0 <= t <= T.
  Point state_at(double t) const;

  /// The path of X*_s = X_{(T - s)-}, with X*_0 = X_T.
  Trajectory reversed_path() const;

  const std::shared_ptr<const DriftFlow>& flow() const { return flow_; }
  bool has_drift() const { return flow_ && !flow_->is_trivial(); }

  bool operator==(const Trajectory& other) const;

 private:
  Point stored(std::size_t slot) const;  // slot 0 = x0, 2i+1 = pre_i, 2i+2 = post_i, last = x_T

  int dim_ = 1;
  double horizon_ = 1.0;
  bool reversed_ = false;
  bool finished_ = false;
  std::vector<double> times_;
  std::vector<double> states_;
  std::shared_ptr<const DriftFlow> flow_;
};

Trajectory reverse_path(const Trajectory& traj);
Point state_at(const Trajectory& traj, double t);

struct PathEnsemble {
  enum class Direction { Forward, Reversed };

  std::string spec_fingerprint;
  std::uint64_t seed = 0;
  Direction direction = Direction::Forward;
  double horizon = 1.0;
  std::vector<Trajectory> paths;

  PathEnsemble reversed() const;
};

/// JSON-lines export: a header object, then one object per trajectory with
/// "x0", "events" ([t, pre..., post...] rows) and "xT".
void write_ensemble_jsonl(const PathEnsemble& ensemble, const std::string& path);

struct ReadResult {
  PathEnsemble ensemble;
  std::vector<std::string> warnings;
};

/// Imports an ensemble.  When `expected_fingerprint` is nonempty and differs
/// from the file's, a warning is recorded.  `flow` drives state_at between
/// events (nullptr: piecewise constant).
ReadResult read_ensemble_jsonl(const std::string& path, const std::string& expected_fingerprint,
                               std::shared_ptr<const DriftFlow> flow);

}  // namespace jumprev
