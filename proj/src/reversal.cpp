// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include "jumprev/reversal.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "jumprev/csv.hpp"
#include "jumprev/errors.hpp"
#include "jumprev/quadrature.hpp"

namespace jumprev {

Eigen::MatrixXd flux_matrix(const Eigen::VectorXd& p, const Eigen::MatrixXd& rates) {
  Eigen::MatrixXd pi = p.asDiagonal() * rates;
  pi.diagonal().setZero();
  return pi;
}

BackwardSlice solve_flux_equation(const Eigen::VectorXd& p, const Eigen::MatrixXd& forward, double t,
                                  double tolerance) {
  const Eigen::Index n = p.size();
  if (forward.rows() != n || forward.cols() != n) {
    throw Error(ErrorKind::InvalidArgument, "rate matrix does not match the marginal");
  }
  BackwardSlice s;
  s.t = t;
  s.rates = Eigen::MatrixXd::Zero(n, n);
  s.empty_rows.assign(static_cast<std::size_t>(n), false);
  for (Eigen::Index y = 0; y < n; ++y) {
    if (p[y] > 0.0) {
      for (Eigen::Index x = 0; x < n; ++x) {
        if (x != y) s.rates(y, x) = p[x] * forward(x, y) / p[y];
      }
      continue;
    }
    s.empty_rows[static_cast<std::size_t>(y)] = true;
    double inflow = 0.0;
    for (Eigen::Index x = 0; x < n; ++x) {
      if (x != y) inflow += p[x] * forward(x, y);
    }
    s.orphan_inflow = std::max(s.orphan_inflow, inflow);
    if (inflow > tolerance) {
      throw Error(ErrorKind::AbsoluteContinuityViolation,
                  "flux equation at t=" + format_number(t) + ": state " + std::to_string(y) +
                      " has zero mass but receives flux " + format_number(inflow));
    }
  }
  return s;
}

BackwardSlice solve_flux_equation(const MarginalFlow& marginal, const FiniteChain& chain, double t,
                                  double tolerance) {
  if (marginal.kind != MarginalFlow::Kind::ProbabilityVectors) {
    throw Error(ErrorKind::InvalidArgument, "finite flux solver needs probability vectors");
  }
  return solve_flux_equation(marginal.slices[marginal.slice_at(t)], chain.rates(t), t, tolerance);
}

Point backward_drift(const DriftField& forward_drift, const JumpKernel& forward_kernel,
                     const JumpKernel& backward_kernel, TruncationDelta delta, double t, const Point& x) {
  const Point b = forward_drift(t, x);
  if (delta.is_zero()) return -b;
  const int dim = static_cast<int>(x.size());
  auto trunc = [delta](const Point& xi) { return delta.apply(xi); };
  const auto f = integrate_kernel_vector(forward_kernel.at(t, x), dim, trunc);
  const auto g = integrate_kernel_vector(backward_kernel.at(t, x), dim, trunc);
  if (f.divergent || g.divergent) {
    throw Error(ErrorKind::QuadratureDivergence, "truncated first moment of the kernel diverges");
  }
  return -b + (f.value + g.value);
}

std::vector<Point> backward_drift_on_states(const PointLocator& states, const std::vector<Point>& forward_drift,
                                            const Eigen::MatrixXd& forward, const Eigen::MatrixXd& backward,
                                            TruncationDelta delta) {
  const std::size_t n = states.size();
  std::vector<Point> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point& b = forward_drift[i];
    if (delta.is_zero()) {
      out[i] = -b;
      continue;
    }
    Point m = Point::Zero(b.size());
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      const double r = forward(ii, jj) + backward(ii, jj);
      if (r != 0.0) m += r * delta.apply(states[j] - states[i]);
    }
    out[i] = -b + m;
  }
  return out;
}

std::pair<Point, LevyMeasure> levy_reverse(const Point& b, const LevyMeasure& levy) {
  LevyMeasure out;
  out.atoms.reserve(levy.atoms.size());
  for (const auto& a : levy.atoms) out.atoms.push_back(LevyAtom{-a.jump, a.weight});
  if (levy.density) {
    LevyDensity d = *levy.density;
    auto k = levy.density->density;
    d.density = [k](double xi) { return k(-xi); };
    d.lo = -levy.density->hi;
    d.hi = -levy.density->lo;
    d.mirrored = !levy.density->mirrored;
    out.density = std::move(d);
  }
  return {-b, std::move(out)};
}

ReversibilityReport reversibility_check(const Eigen::VectorXd& p, const Eigen::MatrixXd& rates,
                                        double tolerance, double floor) {
  const Eigen::MatrixXd pi = flux_matrix(p, rates);
  const Eigen::MatrixXd pt = pi.transpose();
  ReversibilityReport r;
  r.max_flux_difference = (pi - pt).cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < pi.rows(); ++i) {
    for (Eigen::Index j = 0; j < pi.cols(); ++j) {
      if (i != j && pi(i, j) > floor) {
        r.max_flux_asymmetry = std::max(r.max_flux_asymmetry, std::abs(pt(i, j) / pi(i, j) - 1.0));
      }
    }
  }
  r.is_reversible = r.max_flux_difference <= tolerance;
  return r;
}

AbsoluteContinuityReport check_absolute_continuity(const Eigen::VectorXd& p, const Eigen::MatrixXd& rates,
                                                   const PointLocator& states, double tolerance, double t) {
  AbsoluteContinuityReport r;
  r.t = t;
  const Eigen::Index n = p.size();
  for (Eigen::Index y = 0; y < n; ++y) {
    if (p[y] > 0.0) continue;
    double mass = 0.0;
    for (Eigen::Index x = 0; x < n; ++x) {
      if (x == y || rates(x, y) == 0.0) continue;
      const double d2 = (states[static_cast<std::size_t>(y)] - states[static_cast<std::size_t>(x)]).squaredNorm();
      mass += p[x] * rates(x, y) * std::min(1.0, d2);
    }
    if (mass > 0.0) r.offenders.emplace_back(static_cast<std::size_t>(y), mass);
    r.orphan_mass += mass;
  }
  r.pass = r.orphan_mass <= tolerance;
  return r;
}

// ---------------------------------------------------------------------------

std::size_t BackwardCharacteristics::slice_index(double t) const {
  if (times.empty()) throw Error(ErrorKind::InvalidArgument, "no backward slices");
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  return static_cast<std::size_t>(it - times.begin()) - 1;
}

JumpKernel BackwardCharacteristics::kernel() const {
  auto self = std::make_shared<const BackwardCharacteristics>(*this);
  RateMatrixKernel k;
  k.n_states = states->size();
  k.states = states;
  k.rate = [self](double t, std::size_t i, std::size_t j) {
    return self->slices[self->slice_index(t)].rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  };
  return JumpKernel(std::move(k));
}

DriftField BackwardCharacteristics::drift_field() const {
  auto self = std::make_shared<const BackwardCharacteristics>(*this);
  const int dim = static_cast<int>(states->points().front().size());
  return DriftField(dim, [self, dim](double t, const Point& x) -> Point {
    const int i = self->states->find(x);
    if (i < 0) return Point::Zero(dim);
    return self->drift[self->slice_index(t)][static_cast<std::size_t>(i)];
  });
}

BackwardCharacteristics reverse_finite(const ProcessSpec& spec, const FiniteChain& chain,
                                       const MarginalFlow& marginal, double tolerance) {
  if (marginal.kind != MarginalFlow::Kind::ProbabilityVectors) {
    throw Error(ErrorKind::InvalidArgument, "finite reversal needs probability vectors");
  }
  BackwardCharacteristics bc;
  bc.states = chain.states;
  bc.times = marginal.times;
  bc.delta = spec.delta;
  for (std::size_t i = 0; i < marginal.times.size(); ++i) {
    const double t = marginal.times[i];
    const Eigen::MatrixXd fwd = chain.rates(t);
    auto report = check_absolute_continuity(marginal.slices[i], fwd, *chain.states, tolerance, t);
    bc.validity.push_back(report);
    BackwardSlice s = solve_flux_equation(marginal.slices[i], fwd, t, tolerance);
    std::vector<Point> b;
    b.reserve(chain.size());
    for (const auto& x : chain.states->points()) b.push_back(spec.drift(t, x));
    bc.drift.push_back(backward_drift_on_states(*chain.states, b, fwd, s.rates, spec.delta));
    bc.slices.push_back(std::move(s));
  }
  return bc;
}

// ---------------------------------------------------------------------------

BinnedReversal solve_flux_binned(const MarginalFlow& marginal, std::size_t slice, const ProcessSpec& spec,
                                 double epsilon, double orphan_tolerance) {
  const Binning& cells = marginal.cells;
  if (cells.is_states()) throw Error(ErrorKind::InvalidArgument, "binned solver needs regular bins");
  BinnedReversal r;
  r.t = marginal.times.at(slice);
  r.masses = marginal.masses(slice);
  const auto n = static_cast<Eigen::Index>(cells.size());
  r.forward = Eigen::MatrixXd::Zero(n, n);
  r.backward = Eigen::MatrixXd::Zero(n, n);
  const int dim = cells.dimension();

  for (Eigen::Index a = 0; a < n; ++a) {
    if (!(r.masses[a] > 0.0)) continue;
    const Point xa = cells.center(static_cast<std::size_t>(a));
    const LocalKernel k = spec.kernel.at(r.t, xa);
    for (const auto& atom : k.atoms) {
      const long b = cells.cell_of(xa + atom.jump);
      if (b >= 0 && b != a) r.forward(a, b) += atom.rate;
    }
    if (k.density) {
      if (dim != 1) throw Error(ErrorKind::InvalidArgument, "density kernels are one-dimensional");
      const auto& d = *k.density;
      const double w = (cells.box().hi[0] - cells.box().lo[0]) / cells.per_dim()[0];
      for (Eigen::Index b = 0; b < n; ++b) {
        if (b == a) continue;
        // xi-range landing in bin b, minus the discarded |xi| <= eps.
        const double lo = cells.box().lo[0] + static_cast<double>(b) * w - xa[0];
        const double hi = lo + w;
        double mass = 0.0;
        auto piece = [&](double s, double e) {
          s = std::max(s, d.lo);
          e = std::min(e, d.hi);
          if (e > s) mass += boost::math::quadrature::gauss<double, 20>::integrate(d.density, s, e);
        };
        if (hi <= -epsilon || lo >= epsilon) {
          piece(lo, hi);
        } else {
          piece(lo, -epsilon);
          piece(epsilon, hi);
        }
        r.forward(a, b) += mass;
      }
    }
  }

  for (Eigen::Index b = 0; b < n; ++b) {
    double inflow = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (a == b) continue;
      const double flux = r.masses[a] * r.forward(a, b);
      r.total_flux += flux;
      if (r.masses[b] > 0.0) {
        r.backward(b, a) = flux / r.masses[b];
        if (flux > 0.0) r.max_shift_ratio = std::max(r.max_shift_ratio, r.masses[a] / r.masses[b]);
      } else {
        inflow += flux;
      }
    }
    r.orphan_mass += inflow;
  }
  r.pass = r.orphan_mass <= orphan_tolerance * std::max(r.total_flux, 1e-300);
  return r;
}

}  // namespace jumprev
