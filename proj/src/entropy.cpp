// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include "jumprev/entropy.hpp"

#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>

#include "jumprev/csv.hpp"
#include "jumprev/errors.hpp"
#include "jumprev/quadrature.hpp"

namespace jumprev {

namespace {

constexpr double kDivergentEntropy = 1e12;

void check_tilt(const ProcessSpec& spec, const TiltFunction& tilt) {
  for (const auto& probe : default_probe_grid(spec)) {
    const LocalKernel k = spec.kernel.at(probe.t, probe.x);
    for (const auto& a : k.atoms) {
      const double j = tilt(probe.t, probe.x, probe.x + a.jump);
      if (!(j >= 0.0) || !std::isfinite(j)) {
        throw Error(ErrorKind::Config, "tilt '" + tilt.source() + "' is negative or not finite at t=" +
                                           format_number(probe.t));
      }
    }
  }
}

}  // namespace

ProcessSpec tilt_process(const ProcessSpec& reference, const TiltFunction& tilt) {
  if (tilt.is_constant()) {
    const Point x = reference.space.box().lo;
    if (tilt(0.0, x, x) == 1.0) return reference;
  }
  check_tilt(reference, tilt);

  ProcessSpec p = reference;
  auto base = std::make_shared<const JumpKernel>(reference.kernel);
  p.kernel = JumpKernel::tilted(base, tilt);
  p.document = reference.document + "\ntilt: " + tilt.source();

  if (!reference.delta.is_zero()) {
    const TruncationDelta delta = reference.delta;
    const int dim = reference.space.dimension();
    auto correction = [base, tilt, delta, dim](double t, const Point& x) {
      const auto v = integrate_kernel_vector(base->at(t, x), dim, [&](const Point& xi) -> Point {
        return (tilt(t, x, x + xi) - 1.0) * delta.apply(xi);
      });
      if (v.divergent) {
        throw Error(ErrorKind::DriftCorrectionDivergence,
                    "int trunc(xi) (j - 1) K(dxi) diverges at t=" + format_number(t));
      }
      return v.value;
    };
    for (const auto& probe : default_probe_grid(reference)) correction(probe.t, probe.x);

    const DriftField b = reference.drift;
    DriftField::Hints hints;
    hints.compensator = b.hints().compensator;
    p.drift = DriftField(dim, [b, correction](double t, const Point& x) { return Point(b(t, x) + correction(t, x)); },
                         hints);
  }
  return p;
}

EntropyReport relative_entropy(const ProcessSpec& reference, const TiltFunction& tilt,
                               const MarginalFlow& marginal, double initial_entropy) {
  const auto& times = marginal.times;
  const std::size_t n = times.size();
  if (n < 3 || (n - 1) % 2 != 0) {
    throw Error(ErrorKind::InvalidArgument, "entropy grid needs an even number (>= 2) of intervals");
  }
  if (times.front() != 0.0 || std::abs(times.back() - reference.horizon) > 1e-12 * reference.horizon) {
    throw Error(ErrorKind::InvalidArgument, "entropy grid must run from 0 to T");
  }
  const double h = (times.back() - times.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(times[i] - times[i - 1] - h) > 1e-9 * h) {
      throw Error(ErrorKind::InvalidArgument, "entropy grid must be equally spaced");
    }
  }
  check_tilt(reference, tilt);

  EntropyReport r;
  r.initial_term = initial_entropy;
  std::vector<double> f(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = times[i];
    const Eigen::VectorXd m = marginal.masses(i);
    double acc = 0.0;
    for (Eigen::Index c = 0; c < m.size(); ++c) {
      if (m[c] == 0.0) continue;
      const Point x = marginal.cells.center(static_cast<std::size_t>(c));
      const Integral part = integrate_kernel(reference.kernel.at(t, x), [&](const Point& xi) {
        return entropy_h(tilt(t, x, x + xi));
      });
      if (part.divergent || !std::isfinite(part.value)) {
        r.divergent = true;
        break;
      }
      acc += m[c] * part.value;
    }
    f[i] = acc;
  }

  if (!r.divergent) {
    double trap = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < n; ++i) trap += f[i];
    trap *= h;
    double mid = 0.0;
    for (std::size_t i = 1; i < n; i += 2) mid += f[i];
    mid *= 2.0 * h;
    r.running_term = trap;
    r.error = std::abs(trap - mid);
    if (trap > kDivergentEntropy) r.divergent = true;
  }
  if (r.divergent) {
    r.running_term = std::numeric_limits<double>::infinity();
    r.error = 0.0;
  }
  r.total = r.initial_term + r.running_term;
  return r;
}

double path_log_likelihood(const ProcessSpec& reference, const TiltFunction& tilt, const Trajectory& traj) {
  if (!reference.kernel.finite_activity()) {
    throw Error(ErrorKind::InvalidArgument, "pathwise likelihood needs a finite-activity reference");
  }
  double jumps = 0.0;
  std::vector<double> knots{0.0};
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto ev = traj.event(i);
    const double j = tilt(ev.t, ev.pre, ev.post);
    if (!(j > 0.0)) return -std::numeric_limits<double>::infinity();
    jumps += std::log(j);
    knots.push_back(ev.t);
  }
  knots.push_back(traj.horizon());

  auto rate = [&](double t, const Point& x) {
    double g = 0.0;
    for (const auto& a : reference.kernel.at(t, x).atoms) {
      if (a.rate != 0.0) g += (tilt(t, x, x + a.jump) - 1.0) * a.rate;
    }
    return g;
  };
  const bool constant_in_segment =
      reference.kernel.hints().time_homogeneous && !tilt.time_dependent() && !traj.has_drift();

  double compensator = 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double a = knots[k], b = knots[k + 1];
    if (!(b > a)) continue;
    if (constant_in_segment) {
      compensator += rate(a, traj.state_at(a)) * (b - a);
    } else {
      compensator += boost::math::quadrature::gauss<double, 20>::integrate(
          [&](double s) { return rate(s, traj.state_at(s)); }, a, b);
    }
  }
  return jumps - compensator;
}

double discrete_relative_entropy(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorKind::InvalidArgument, "size mismatch");
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (!(q[i] > 0.0)) return std::numeric_limits<double>::infinity();
    h += p[i] * std::log(p[i] / q[i]);
  }
  return h;
}

}  // namespace jumprev
