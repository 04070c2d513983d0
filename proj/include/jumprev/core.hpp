// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

// Domain types for Markov jump processes in R^n (and finite state spaces):
// state spaces, drift fields, jump kernels, initial laws and the full
// martingale-problem data bundled as a ProcessSpec.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace jumprev {

constexpr int kMaxDimension = 8;

/// A point of the state space (or a jump vector).  Stack allocated.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDimension, 1>;

Point make_point(std::initializer_list<double> coords);
inline std::span<const double> coords(const Point& p) {
  return {p.data(), static_cast<std::size_t>(p.size())};
}

class PhiloxStream;

// ---------------------------------------------------------------------------
// Entropy functions

/// h(a) = a log a - a + 1 for a > 0, 1 at a = 0 and +inf for a < 0.
double entropy_h(double a);

/// theta(a) = h(|a| + 1) = (|a|+1) log(|a|+1) - |a|.
double young_theta(double a);

// ---------------------------------------------------------------------------
// Truncation

class TruncationDelta {
 public:
  TruncationDelta() = default;
  explicit TruncationDelta(double delta);

  double value() const { return delta_; }
  bool is_zero() const { return delta_ == 0.0; }

  /// Returns xi if |xi| <= delta, else 0.  Always 0 when delta = 0.
  Point apply(const Point& xi) const;

 private:
  double delta_ = 0.0;
};

Point truncate_jump(const Point& xi, TruncationDelta delta);

// ---------------------------------------------------------------------------
// State spaces

struct Box {
  Point lo;
  Point hi;

  int dimension() const { return static_cast<int>(lo.size()); }
  double volume() const;
  bool contains(const Point& x, double margin = 0.0) const;
};

/// Maps points of a discrete set back to their index.
class PointLocator {
 public:
  PointLocator() = default;
  explicit PointLocator(std::vector<Point> points);

  std::size_t size() const { return points_.size(); }
  const std::vector<Point>& points() const { return points_; }
  const Point& operator[](std::size_t i) const { return points_[i]; }

  /// Index of the stored point equal to x up to 1e-9, or -1.
  int find(const Point& x) const;

 private:
  std::vector<std::int64_t> key(const Point& x) const;

  std::vector<Point> points_;
  std::map<std::vector<std::int64_t>, int> index_;
};

struct FiniteSpace {
  std::size_t n_states = 0;
  std::shared_ptr<const PointLocator> embedding;
};

struct LatticeSpace {
  int dimension = 1;
  double step = 1.0;
  Box box;
};

struct ContinuousSpace {
  int dimension = 1;
  Box box;
};

class StateSpace {
 public:
  using Variant = std::variant<FiniteSpace, LatticeSpace, ContinuousSpace>;

  StateSpace() = default;

  /// States 0..n-1 embedded on the real line unless an embedding is given.
  static StateSpace finite(std::size_t n_states, std::vector<Point> embedding = {});
  static StateSpace lattice(int dimension, double step, Box box);
  static StateSpace continuous(Box box);

  int dimension() const;
  bool is_finite() const { return std::holds_alternative<FiniteSpace>(v_); }
  bool is_lattice() const { return std::holds_alternative<LatticeSpace>(v_); }
  bool is_continuous() const { return std::holds_alternative<ContinuousSpace>(v_); }
  bool is_discrete() const { return !is_continuous(); }

  const Variant& variant() const { return v_; }

  /// Bounding box; for finite spaces the hull of the embedding.
  Box box() const;

  /// Points of a discrete space: the embedding, or the lattice points inside
  /// the box.  Throws for continuous spaces.
  std::shared_ptr<const PointLocator> discrete_points() const;

  bool contains(const Point& x) const;

 private:
  explicit StateSpace(Variant v) : v_(std::move(v)) {}
  Variant v_{FiniteSpace{}};
  std::shared_ptr<const PointLocator> lattice_points_;
};

// ---------------------------------------------------------------------------
// Drift

struct DriftHints {
  bool is_zero = false;
  bool is_constant = false;
  std::optional<double> bound;  // sup-norm bound, when known
  /// b^delta(t, x) is exactly int trunc_delta(xi) K_{t,x}(dxi) of the
  /// finite-activity kernel it was built from (pure-jump motion).
  bool compensator = false;
};

class DriftField {
 public:
  using Fn = std::function<Point(double t, const Point& x)>;
  using Hints = DriftHints;

  DriftField() = default;
  DriftField(int dimension, Fn fn, Hints hints = {});

  static DriftField zero(int dimension);
  static DriftField constant(const Point& b);

  Point operator()(double t, const Point& x) const;

  int dimension() const { return dimension_; }
  const Hints& hints() const { return hints_; }
  bool is_zero() const { return hints_.is_zero; }

 private:
  int dimension_ = 1;
  Fn fn_;
  Hints hints_{true, true, 0.0};
};

// ---------------------------------------------------------------------------
// Tilts

/// Nonnegative density j(t, x, y) multiplying a reference jump kernel.
class TiltFunction {
 public:
  using Fn = std::function<double(double t, const Point& x, const Point& y)>;

  TiltFunction() = default;
  TiltFunction(Fn fn, std::string source, bool constant = false);

  static TiltFunction constant(double value);

  double operator()(double t, const Point& x, const Point& y) const { return fn_(t, x, y); }
  const std::string& source() const { return source_; }
  bool is_constant() const { return constant_; }
  bool time_dependent() const { return time_dependent_; }
  bool state_dependent() const { return state_dependent_; }
  void set_dependence(bool time_dependent, bool state_dependent) {
    time_dependent_ = time_dependent;
    state_dependent_ = state_dependent;
  }

 private:
  Fn fn_ = [](double, const Point&, const Point&) { return 1.0; };
  std::string source_ = "1";
  bool constant_ = true;
  bool time_dependent_ = false;
  bool state_dependent_ = false;
};

// ---------------------------------------------------------------------------
// Jump kernels

/// One atom of a kernel evaluated at (t, x): a jump `jump` with intensity
/// `rate`.  `target` is the index of x + jump on a finite chain, else -1.
struct JumpAtom {
  Point jump;
  double rate = 0.0;
  int target = -1;
};

/// Jump-size density on the real line (one-dimensional jumps only), with
/// compact support [lo, hi].
struct JumpDensity {
  std::function<double(double xi)> density;
  double lo = 0.0;
  double hi = 0.0;
};

/// The kernel K_{t,x}(dxi) frozen at one (t, x).  Atoms keep a stable order
/// across (t, x) for a given kernel.
struct LocalKernel {
  std::vector<JumpAtom> atoms;
  std::optional<JumpDensity> density;

  double atom_mass() const;
};

struct RateMatrixKernel {
  std::size_t n_states = 0;
  std::function<double(double t, std::size_t from, std::size_t to)> rate;
  std::shared_ptr<const PointLocator> states;
};

struct AtomicKernel {
  struct Atom {
    Point jump;
    std::function<double(double t, const Point& x)> rate;
  };
  std::vector<Atom> atoms;
};

struct DensityKernel {
  std::function<double(double t, const Point& x, double xi)> density;
  double lo = 0.0;
  double hi = 0.0;
};

struct LevyAtom {
  Point jump;
  double weight = 0.0;
};

struct LevyDensity {
  std::function<double(double xi)> density;
  double lo = 0.0;
  double hi = 0.0;
  std::string source;  // expression in xi, when built from config
  bool mirrored = false;  // density is source evaluated at -xi
};

/// State- and time-independent jump measure of a Levy process.
struct LevyMeasure {
  std::vector<LevyAtom> atoms;
  std::optional<LevyDensity> density;
};

class JumpKernel;

struct TiltedKernel {
  std::shared_ptr<const JumpKernel> base;
  TiltFunction tilt;
};

struct KernelHints {
  bool time_homogeneous = false;
  bool state_independent = false;
};

class JumpKernel {
 public:
  using Variant =
      std::variant<RateMatrixKernel, AtomicKernel, DensityKernel, LevyMeasure, TiltedKernel>;
  using Hints = KernelHints;

  JumpKernel() : JumpKernel(LevyMeasure{}) {}
  explicit JumpKernel(Variant v, Hints hints = {});

  static JumpKernel tilted(std::shared_ptr<const JumpKernel> base, TiltFunction tilt);
  /// Time-homogeneous rate matrix with zero diagonal.
  static JumpKernel rate_matrix(const Eigen::MatrixXd& rates,
                                std::shared_ptr<const PointLocator> states);

  LocalKernel at(double t, const Point& x) const;

  const Variant& variant() const { return v_; }
  const Hints& hints() const { return hints_; }
  bool finite_activity() const;
  bool is_levy() const { return std::holds_alternative<LevyMeasure>(v_); }

 private:
  Variant v_;
  Hints hints_;
};

// ---------------------------------------------------------------------------
// Initial laws

class InitialLaw {
 public:
  struct PointMass {
    Point x;
  };
  struct Discrete {
    std::vector<Point> points;
    std::vector<double> probabilities;
  };
  struct Density {
    std::function<double(const Point&)> density;
    Box box;
    double envelope = 0.0;  // sup of the density over the box (with slack)
  };
  using Variant = std::variant<PointMass, Discrete, Density>;

  InitialLaw() = default;
  explicit InitialLaw(Variant v);

  static InitialLaw point_mass(const Point& x) { return InitialLaw(PointMass{x}); }
  static InitialLaw discrete(std::vector<Point> points, std::vector<double> probabilities);
  static InitialLaw density(std::function<double(const Point&)> density, const Box& box);

  Point sample(PhiloxStream& rng) const;

  /// Probabilities over a discrete set of points.  Throws if some mass falls
  /// outside the set.
  Eigen::VectorXd on_points(const PointLocator& points) const;

  const Variant& variant() const { return v_; }

 private:
  Variant v_{PointMass{Point::Zero(1)}};
  std::vector<double> cumulative_;
};

// ---------------------------------------------------------------------------
// Process definition

/// Martingale-problem data MP_delta(p0, b^delta, K) on [0, T].
struct ProcessSpec {
  StateSpace space;
  DriftField drift;
  JumpKernel kernel;
  TruncationDelta delta;
  InitialLaw initial_law;
  double horizon = 1.0;
  /// Canonical configuration document this process was built from ("" if
  /// constructed programmatically).
  std::string document;

  /// Throws Error(Config) when an invariant is violated.
  void validate() const;

  /// FNV-1a hash of the configuration document, as 16 hex digits.
  std::string fingerprint() const;
};

// ---------------------------------------------------------------------------
// Hypothesis probes

struct ProbePoint {
  double t = 0.0;
  Point x;
};

struct ProbeEntry {
  double t = 0.0;
  Point x;
  double quadratic = 0.0;          // int (|xi|^2 ^ 1) K(dxi)
  double bounded_variation = 0.0;  // int 1{|xi|<=1} |xi| K(dxi)
  double jump_range = 0.0;         // dyadic estimate of the jump range
  double large_jump_mass = 0.0;    // K({|xi| >= 1})
  bool quadratic_divergent = false;
  bool bv_divergent = false;
  bool drift_finite = true;
};

struct HypothesisReport {
  std::vector<ProbeEntry> entries;
  bool delta_zero_admissible = true;
  bool quadratic_finite = true;
  bool drift_finite = true;
};

HypothesisReport probe_hypotheses(const ProcessSpec& spec, std::span<const ProbePoint> grid);

/// Probe points at t in {0, T/2, T} over the discrete states (capped) or the
/// box corners and centre.
std::vector<ProbePoint> default_probe_grid(const ProcessSpec& spec);

}  // namespace jumprev
