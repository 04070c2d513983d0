// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include "jumprev/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "jumprev/errors.hpp"
#include "jumprev/quadrature.hpp"
#include "jumprev/rng.hpp"

namespace jumprev {

Point make_point(std::initializer_list<double> c) {
  Point p(static_cast<Eigen::Index>(c.size()));
  Eigen::Index i = 0;
  for (double v : c) p[i++] = v;
  return p;
}

double entropy_h(double a) {
  if (a > 0.0) return a * std::log(a) - a + 1.0;
  if (a == 0.0) return 1.0;
  return std::numeric_limits<double>::infinity();
}

double young_theta(double a) { return entropy_h(std::abs(a) + 1.0); }

TruncationDelta::TruncationDelta(double delta) : delta_(delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw Error(ErrorKind::InvalidArgument, "truncation delta must be finite and >= 0");
  }
}

Point TruncationDelta::apply(const Point& xi) const {
  if (delta_ > 0.0 && xi.norm() <= delta_) return xi;
  return Point::Zero(xi.size());
}

Point truncate_jump(const Point& xi, TruncationDelta delta) { return delta.apply(xi); }

// ---------------------------------------------------------------------------

double Box::volume() const {
  double v = 1.0;
  for (int i = 0; i < dimension(); ++i) v *= hi[i] - lo[i];
  return v;
}

bool Box::contains(const Point& x, double margin) const {
  if (x.size() != lo.size()) return false;
  for (int i = 0; i < dimension(); ++i) {
    if (!(x[i] >= lo[i] - margin && x[i] <= hi[i] + margin)) return false;
  }
  return true;
}

PointLocator::PointLocator(std::vector<Point> points) : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    auto [it, inserted] = index_.emplace(key(points_[i]), static_cast<int>(i));
    if (!inserted) {
      throw Error(ErrorKind::Config, "duplicate point in discrete state set at index " +
                                         std::to_string(i));
    }
  }
}

std::vector<std::int64_t> PointLocator::key(const Point& x) const {
  std::vector<std::int64_t> k(static_cast<std::size_t>(x.size()));
  for (int i = 0; i < x.size(); ++i) {
    k[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::llround(x[i] * 1e6));
  }
  return k;
}

int PointLocator::find(const Point& x) const {
  if (points_.empty() || x.size() != points_.front().size() || !x.allFinite()) return -1;
  auto it = index_.find(key(x));
  if (it == index_.end()) return -1;
  if ((points_[static_cast<std::size_t>(it->second)] - x).cwiseAbs().maxCoeff() > 1e-9) return -1;
  return it->second;
}

StateSpace StateSpace::finite(std::size_t n_states, std::vector<Point> embedding) {
  if (n_states < 1) throw Error(ErrorKind::Config, "finite state space needs n_states >= 1");
  if (embedding.empty()) {
    embedding.reserve(n_states);
    for (std::size_t i = 0; i < n_states; ++i) {
      embedding.push_back(make_point({static_cast<double>(i)}));
    }
  }
  if (embedding.size() != n_states) {
    throw Error(ErrorKind::Config, "embedding must list one point per state");
  }
  const auto dim = embedding.front().size();
  for (const auto& p : embedding) {
    if (p.size() != dim) throw Error(ErrorKind::Config, "embedding points differ in dimension");
  }
  return StateSpace(FiniteSpace{n_states, std::make_shared<PointLocator>(std::move(embedding))});
}

namespace {

void check_box(const Box& box, int dimension) {
  if (dimension < 1 || dimension > kMaxDimension) {
    throw Error(ErrorKind::Config, "dimension must be in 1.." + std::to_string(kMaxDimension));
  }
  if (box.lo.size() != dimension || box.hi.size() != dimension) {
    throw Error(ErrorKind::Config, "bounding box dimension mismatch");
  }
  if (!(box.volume() > 0.0)) throw Error(ErrorKind::Config, "bounding box must have positive volume");
}

}  // namespace

StateSpace StateSpace::lattice(int dimension, double step, Box box) {
  check_box(box, dimension);
  if (!(step > 0.0)) throw Error(ErrorKind::Config, "lattice step must be positive");

  // Enumerate the lattice points step * k inside the box.
  std::vector<long> first(static_cast<std::size_t>(dimension));
  std::vector<long> count(static_cast<std::size_t>(dimension));
  double total = 1.0;
  for (int d = 0; d < dimension; ++d) {
    const long a = static_cast<long>(std::ceil(box.lo[d] / step - 1e-9));
    const long b = static_cast<long>(std::floor(box.hi[d] / step + 1e-9));
    first[static_cast<std::size_t>(d)] = a;
    count[static_cast<std::size_t>(d)] = std::max(0L, b - a + 1);
    total *= static_cast<double>(count[static_cast<std::size_t>(d)]);
  }
  StateSpace s(LatticeSpace{dimension, step, box});
  if (total >= 1.0 && total <= 1e6) {
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(total));
    std::vector<long> k(first);
    for (;;) {
      Point p(dimension);
      for (int d = 0; d < dimension; ++d) p[d] = step * static_cast<double>(k[static_cast<std::size_t>(d)]);
      pts.push_back(p);
      int d = 0;
      for (; d < dimension; ++d) {
        auto ud = static_cast<std::size_t>(d);
        if (++k[ud] < first[ud] + count[ud]) break;
        k[ud] = first[ud];
      }
      if (d == dimension) break;
    }
    s.lattice_points_ = std::make_shared<PointLocator>(std::move(pts));
  }
  return s;
}

StateSpace StateSpace::continuous(Box box) {
  const int dimension = box.dimension();
  check_box(box, dimension);
  return StateSpace(ContinuousSpace{dimension, std::move(box)});
}

int StateSpace::dimension() const {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FiniteSpace>) {
          return s.embedding ? static_cast<int>(s.embedding->points().front().size()) : 1;
        } else {
          return s.dimension;
        }
      },
      v_);
}

Box StateSpace::box() const {
  if (const auto* f = std::get_if<FiniteSpace>(&v_)) {
    const auto& pts = f->embedding->points();
    Box b{pts.front(), pts.front()};
    for (const auto& p : pts) {
      b.lo = b.lo.cwiseMin(p);
      b.hi = b.hi.cwiseMax(p);
    }
    return b;
  }
  if (const auto* l = std::get_if<LatticeSpace>(&v_)) return l->box;
  return std::get<ContinuousSpace>(v_).box;
}

std::shared_ptr<const PointLocator> StateSpace::discrete_points() const {
  if (const auto* f = std::get_if<FiniteSpace>(&v_)) return f->embedding;
  if (is_lattice()) {
    if (!lattice_points_) throw Error(ErrorKind::Config, "lattice box is too large to enumerate");
    return lattice_points_;
  }
  throw Error(ErrorKind::InvalidArgument, "continuous state space has no discrete points");
}

bool StateSpace::contains(const Point& x) const {
  if (x.size() != dimension()) return false;
  if (is_continuous()) return std::get<ContinuousSpace>(v_).box.contains(x);
  if (is_finite()) return std::get<FiniteSpace>(v_).embedding->find(x) >= 0;
  const auto& l = std::get<LatticeSpace>(v_);
  for (int d = 0; d < x.size(); ++d) {
    const double k = x[d] / l.step;
    if (std::abs(k - std::round(k)) > 1e-9) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

DriftField::DriftField(int dimension, Fn fn, Hints hints)
    : dimension_(dimension), fn_(std::move(fn)), hints_(hints) {}

DriftField DriftField::zero(int dimension) {
  DriftField d;
  d.dimension_ = dimension;
  d.hints_ = Hints{true, true, 0.0};
  return d;
}

DriftField DriftField::constant(const Point& b) {
  const bool zero = b.isZero(0.0);
  return DriftField(static_cast<int>(b.size()), [b](double, const Point&) { return b; },
                    Hints{zero, true, b.lpNorm<Eigen::Infinity>()});
}

Point DriftField::operator()(double t, const Point& x) const {
  if (hints_.is_zero || !fn_) return Point::Zero(dimension_);
  return fn_(t, x);
}

TiltFunction::TiltFunction(Fn fn, std::string source, bool constant)
    : fn_(std::move(fn)), source_(std::move(source)), constant_(constant),
      time_dependent_(!constant), state_dependent_(!constant) {}

TiltFunction TiltFunction::constant(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return TiltFunction([value](double, const Point&, const Point&) { return value; }, buf, true);
}

// ---------------------------------------------------------------------------

double LocalKernel::atom_mass() const {
  double m = 0.0;
  for (const auto& a : atoms) m += a.rate;
  return m;
}

JumpKernel::JumpKernel(Variant v, Hints hints) : v_(std::move(v)), hints_(hints) {
  if (std::holds_alternative<LevyMeasure>(v_)) {
    hints_.time_homogeneous = true;
    hints_.state_independent = true;
  }
}

JumpKernel JumpKernel::tilted(std::shared_ptr<const JumpKernel> base, TiltFunction tilt) {
  Hints h;
  h.time_homogeneous = base->hints().time_homogeneous && !tilt.time_dependent();
  h.state_independent = base->hints().state_independent && !tilt.state_dependent();
  return JumpKernel(TiltedKernel{std::move(base), std::move(tilt)}, h);
}

JumpKernel JumpKernel::rate_matrix(const Eigen::MatrixXd& rates,
                                   std::shared_ptr<const PointLocator> states) {
  if (rates.rows() != rates.cols() || static_cast<std::size_t>(rates.rows()) != states->size()) {
    throw Error(ErrorKind::InvalidArgument, "rate matrix must be square and match the state set");
  }
  RateMatrixKernel k;
  k.n_states = states->size();
  k.states = std::move(states);
  k.rate = [rates](double, std::size_t i, std::size_t j) {
    return i == j ? 0.0 : rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  };
  return JumpKernel(std::move(k), Hints{true, false});
}

LocalKernel JumpKernel::at(double t, const Point& x) const {
  LocalKernel out;
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, RateMatrixKernel>) {
          const int i = k.states->find(x);
          if (i < 0) return;  // off the chain: no jumps
          out.atoms.reserve(k.n_states - 1);
          for (std::size_t j = 0; j < k.n_states; ++j) {
            if (j == static_cast<std::size_t>(i)) continue;
            out.atoms.push_back(JumpAtom{(*k.states)[j] - x, k.rate(t, static_cast<std::size_t>(i), j),
                                         static_cast<int>(j)});
          }
        } else if constexpr (std::is_same_v<T, AtomicKernel>) {
          out.atoms.reserve(k.atoms.size());
          for (const auto& a : k.atoms) out.atoms.push_back(JumpAtom{a.jump, a.rate(t, x), -1});
        } else if constexpr (std::is_same_v<T, DensityKernel>) {
          auto f = k.density;
          out.density = JumpDensity{[f, t, x](double xi) { return f(t, x, xi); }, k.lo, k.hi};
        } else if constexpr (std::is_same_v<T, LevyMeasure>) {
          out.atoms.reserve(k.atoms.size());
          for (const auto& a : k.atoms) out.atoms.push_back(JumpAtom{a.jump, a.weight, -1});
          if (k.density) out.density = JumpDensity{k.density->density, k.density->lo, k.density->hi};
        } else {
          out = k.base->at(t, x);
          for (auto& a : out.atoms) a.rate *= k.tilt(t, x, x + a.jump);
          if (out.density) {
            auto base_density = out.density->density;
            auto tilt = k.tilt;
            out.density->density = [base_density, tilt, t, x](double xi) {
              Point y = x;
              y[0] += xi;
              return tilt(t, x, y) * base_density(xi);
            };
          }
        }
      },
      v_);
  return out;
}

bool JumpKernel::finite_activity() const {
  return std::visit(
      [](const auto& k) -> bool {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, DensityKernel>) {
          return false;
        } else if constexpr (std::is_same_v<T, LevyMeasure>) {
          return !k.density.has_value();
        } else if constexpr (std::is_same_v<T, TiltedKernel>) {
          return k.base->finite_activity();
        } else {
          return true;
        }
      },
      v_);
}

// ---------------------------------------------------------------------------

InitialLaw::InitialLaw(Variant v) : v_(std::move(v)) {
  if (auto* d = std::get_if<Discrete>(&v_)) {
    if (d->points.size() != d->probabilities.size() || d->points.empty()) {
      throw Error(ErrorKind::Config, "discrete initial law needs one probability per point");
    }
    double total = 0.0;
    for (double p : d->probabilities) {
      if (!(p >= 0.0)) throw Error(ErrorKind::Config, "initial probabilities must be >= 0");
      total += p;
    }
    if (!(total > 0.0)) throw Error(ErrorKind::Config, "initial probabilities sum to zero");
    for (double& p : d->probabilities) p /= total;
    cumulative_.resize(d->probabilities.size());
    std::partial_sum(d->probabilities.begin(), d->probabilities.end(), cumulative_.begin());
    cumulative_.back() = 1.0;
  }
}

InitialLaw InitialLaw::discrete(std::vector<Point> points, std::vector<double> probabilities) {
  return InitialLaw(Discrete{std::move(points), std::move(probabilities)});
}

InitialLaw InitialLaw::density(std::function<double(const Point&)> density, const Box& box) {
  // Envelope for rejection sampling from a grid scan of the box.
  const int dim = box.dimension();
  const int per_dim = dim == 1 ? 2001 : (dim == 2 ? 201 : 21);
  double sup = 0.0;
  std::vector<int> k(static_cast<std::size_t>(dim), 0);
  for (;;) {
    Point x(dim);
    for (int d = 0; d < dim; ++d) {
      x[d] = box.lo[d] + (box.hi[d] - box.lo[d]) * k[static_cast<std::size_t>(d)] / (per_dim - 1);
    }
    const double v = density(x);
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::Config, "initial density must be finite and nonnegative on its box");
    }
    sup = std::max(sup, v);
    int d = 0;
    for (; d < dim; ++d) {
      auto ud = static_cast<std::size_t>(d);
      if (++k[ud] < per_dim) break;
      k[ud] = 0;
    }
    if (d == dim) break;
  }
  if (!(sup > 0.0)) throw Error(ErrorKind::Config, "initial density vanishes on its box");
  return InitialLaw(Density{std::move(density), box, 1.25 * sup});
}

Point InitialLaw::sample(PhiloxStream& rng) const {
  return std::visit(
      [&](const auto& law) -> Point {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return law.x;
        } else if constexpr (std::is_same_v<T, Discrete>) {
          const double u = rng.uniform();
          auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
          auto idx = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
          return law.points[std::min(idx, law.points.size() - 1)];
        } else {
          const int dim = law.box.dimension();
          for (int attempt = 0; attempt < 1'000'000; ++attempt) {
            Point x(dim);
            for (int d = 0; d < dim; ++d) {
              x[d] = law.box.lo[d] + (law.box.hi[d] - law.box.lo[d]) * rng.uniform();
            }
            const double v = law.density(x);
            if (v > law.envelope) {
              throw Error(ErrorKind::IntensityBoundExceeded,
                          "initial density exceeds its rejection envelope");
            }
            if (rng.uniform() * law.envelope < v) return x;
          }
          throw Error(ErrorKind::InvalidArgument, "initial density rejection sampler stalled");
        }
      },
      v_);
}

Eigen::VectorXd InitialLaw::on_points(const PointLocator& points) const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(points.size()));
  std::visit(
      [&](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          const int i = points.find(law.x);
          if (i < 0) throw Error(ErrorKind::Config, "initial point is not a state of the chain");
          p[i] = 1.0;
        } else if constexpr (std::is_same_v<T, Discrete>) {
          for (std::size_t k = 0; k < law.points.size(); ++k) {
            const int i = points.find(law.points[k]);
            if (i < 0) throw Error(ErrorKind::Config, "initial law charges a point outside the chain");
            p[i] += law.probabilities[k];
          }
        } else {
          throw Error(ErrorKind::Config, "a density initial law has no discrete marginal");
        }
      },
      v_);
  return p;
}

// ---------------------------------------------------------------------------

std::string ProcessSpec::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : document) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ProcessSpec::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorKind::Config, "horizon must be positive and finite");
  }
  const int dim = space.dimension();
  if (drift.dimension() != dim) throw Error(ErrorKind::Config, "drift dimension mismatch");

  std::visit(
      [&](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, InitialLaw::PointMass>) {
          if (!space.contains(law.x)) throw Error(ErrorKind::Config, "initial point outside the state space");
        } else if constexpr (std::is_same_v<T, InitialLaw::Discrete>) {
          for (std::size_t i = 0; i < law.points.size(); ++i) {
            if (law.probabilities[i] > 0.0 && !space.contains(law.points[i])) {
              throw Error(ErrorKind::Config, "initial law charges a point outside the state space");
            }
          }
        } else {
          const Box b = space.box();
          if (!b.contains(law.box.lo, 1e-12) || !b.contains(law.box.hi, 1e-12)) {
            throw Error(ErrorKind::Config, "initial density box exceeds the state space box");
          }
        }
      },
      initial_law.variant());

  if (!kernel.finite_activity() && dim != 1) {
    throw Error(ErrorKind::Config, "density jump kernels are supported in dimension 1 only");
  }

  const auto grid = default_probe_grid(*this);
  const auto report = probe_hypotheses(*this, grid);
  if (!report.drift_finite) throw Error(ErrorKind::Config, "drift is not finite on the probe grid");
  if (!report.quadratic_finite) {
    throw Error(ErrorKind::Config, "jump kernel fails the int(|xi|^2 ^ 1) K(dxi) < inf probe");
  }
  if (delta.is_zero() && !report.delta_zero_admissible) {
    throw Error(ErrorKind::Config,
                "delta = 0 requires bounded-variation jumps (int 1{|xi|<=1}|xi| K(dxi) < inf)");
  }
}

// ---------------------------------------------------------------------------

std::vector<ProbePoint> default_probe_grid(const ProcessSpec& spec) {
  std::vector<Point> xs;
  if (spec.space.is_discrete()) {
    const auto pts = spec.space.discrete_points();
    const std::size_t n = pts->size();
    const std::size_t stride = std::max<std::size_t>(1, n / 64);
    for (std::size_t i = 0; i < n; i += stride) xs.push_back((*pts)[i]);
    xs.push_back(pts->points().back());
  } else {
    const Box b = spec.space.box();
    xs.push_back((b.lo + b.hi) / 2.0);
    xs.push_back(b.lo);
    xs.push_back(b.hi);
  }
  std::vector<ProbePoint> grid;
  for (double t : {0.0, spec.horizon / 2.0, spec.horizon}) {
    for (const auto& x : xs) grid.push_back(ProbePoint{t, x});
  }
  return grid;
}

HypothesisReport probe_hypotheses(const ProcessSpec& spec, std::span<const ProbePoint> grid) {
  if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "probe grid is empty");
  HypothesisReport report;
  const bool finite_activity = spec.kernel.finite_activity();
  for (const auto& probe : grid) {
    ProbeEntry e;
    e.t = probe.t;
    e.x = probe.x;
    const LocalKernel k = spec.kernel.at(probe.t, probe.x);

    const Integral quad =
        integrate_kernel(k, [](const Point& xi) { return std::min(xi.squaredNorm(), 1.0); });
    const Integral bv = integrate_kernel(k, [](const Point& xi) {
      const double r = xi.norm();
      return r <= 1.0 ? r : 0.0;
    });
    const Integral large = integrate_kernel(k, [](const Point& xi) { return xi.norm() >= 1.0 ? 1.0 : 0.0; });

    e.quadratic = quad.value;
    e.quadratic_divergent = quad.divergent;
    e.bounded_variation = bv.value;
    e.bv_divergent = bv.divergent;
    e.large_jump_mass = large.value;
    e.jump_range = dyadic_jump_range(k);
    e.drift_finite = spec.drift(probe.t, probe.x).allFinite();

    for (const auto& a : k.atoms) {
      if (!(a.rate >= 0.0) || !std::isfinite(a.rate)) e.quadratic_divergent = true;
    }

    report.quadratic_finite = report.quadratic_finite && !e.quadratic_divergent;
    report.drift_finite = report.drift_finite && e.drift_finite;
    if (!finite_activity && e.bv_divergent) report.delta_zero_admissible = false;
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace jumprev
