// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include "jumprev/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include <boost/math/quadrature/gauss.hpp>

#include "jumprev/errors.hpp"
#include "jumprev/quadrature.hpp"
#include "jumprev/rng.hpp"

namespace jumprev {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("JUMPREV_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

Point atom_compensator(const LocalKernel& k, TruncationDelta delta, int dim) {
  Point c = Point::Zero(dim);
  for (const auto& a : k.atoms) {
    if (a.rate == 0.0) continue;
    c += a.rate * delta.apply(a.jump);
  }
  return c;
}

}  // namespace

DriftField effective_drift(const ProcessSpec& spec, double epsilon) {
  const TruncationDelta delta = spec.delta;
  const int dim = spec.space.dimension();
  if (delta.is_zero()) return spec.drift;
  if (spec.drift.hints().compensator && spec.kernel.finite_activity()) return DriftField::zero(dim);

  auto kernel = std::make_shared<const JumpKernel>(spec.kernel);
  const DriftField b = spec.drift;
  auto fn = [kernel, b, delta, epsilon, dim](double t, const Point& x) {
    const LocalKernel k = kernel->at(t, x);
    Point out = b(t, x) - atom_compensator(k, delta, dim);
    if (k.density) {
      LocalKernel dens;
      dens.density = k.density;
      const auto part = integrate_kernel_vector(
          dens, dim, [delta](const Point& xi) { return delta.apply(xi); }, epsilon);
      if (part.divergent) {
        throw Error(ErrorKind::QuadratureDivergence,
                    "compensator int_{eps<|xi|<=delta} xi K(dxi) diverges");
      }
      out -= part.value;
    }
    return out;
  };

  const auto& kh = spec.kernel.hints();
  DriftField::Hints hints;
  if (b.hints().is_constant && kh.time_homogeneous && kh.state_independent) {
    const Point c = fn(0.0, spec.space.box().lo);
    return DriftField::constant(c);
  }
  hints.bound = b.hints().bound;
  return DriftField(dim, fn, hints);
}

LocalKernel simulated_kernel(const ProcessSpec& spec, double epsilon, double t, const Point& x) {
  LocalKernel k = spec.kernel.at(t, x);
  if (k.density && epsilon > 0.0) {
    // Restrict the density to |xi| > eps.
    auto d = k.density->density;
    k.density->density = [d, epsilon](double xi) { return std::abs(xi) > epsilon ? d(xi) : 0.0; };
  }
  return k;
}

double total_intensity(const LocalKernel& kernel, double epsilon) {
  double total = kernel.atom_mass();
  if (kernel.density) {
    const auto& d = *kernel.density;
    const Integral mass = integrate_shells(d.density, d.lo, d.hi, epsilon);
    if (mass.divergent) {
      throw Error(ErrorKind::Config,
                  "jump density has infinite mass above the cutoff; set run.epsilon > 0");
    }
    total += mass.value;
  }
  if (!std::isfinite(total) || total < 0.0) {
    throw Error(ErrorKind::NonfiniteState, "jump intensity is negative or not finite");
  }
  return total;
}

namespace {

// Dyadic shells of a one-dimensional jump density above the cutoff, with
// their masses, for exact rejection sampling of the jump size.
struct ShellTable {
  struct Shell {
    double a, b, mass;
  };
  std::vector<Shell> shells;
  double total = 0.0;
};

void add_radial_shells(ShellTable& table, const std::function<double(double)>& f, double sign,
                       double rmin, double rmax) {
  if (!(rmax > rmin)) return;
  auto add = [&](double a, double b) {
    a = std::max(a, rmin);
    b = std::min(b, rmax);
    if (!(b > a)) return;
    const double m = boost::math::quadrature::gauss<double, 20>::integrate(
        [&](double r) { return f(sign * r); }, a, b);
    if (m > 0.0) {
      table.shells.push_back(sign > 0 ? ShellTable::Shell{a, b, m} : ShellTable::Shell{-b, -a, m});
      table.total += m;
    }
  };
  for (double lo = 1.0; lo < rmax; lo *= 2.0) add(lo, 2.0 * lo);
  for (int m = 1; m <= 40; ++m) {
    const double hi = std::ldexp(1.0, -m + 1);
    if (hi <= rmin) break;
    add(std::ldexp(1.0, -m), hi);
  }
}

ShellTable build_shells(const JumpDensity& d, double epsilon) {
  ShellTable t;
  if (d.hi > 0.0) add_radial_shells(t, d.density, 1.0, std::max({d.lo, 0.0, epsilon}), d.hi);
  if (d.lo < 0.0) add_radial_shells(t, d.density, -1.0, std::max({-d.hi, 0.0, epsilon}), -d.lo);
  return t;
}

double sample_from_shells(const ShellTable& table, const JumpDensity& d, PhiloxStream& rng,
                          double safety) {
  double u = rng.uniform() * table.total;
  const ShellTable::Shell* shell = &table.shells.back();
  for (const auto& s : table.shells) {
    if (u < s.mass) {
      shell = &s;
      break;
    }
    u -= s.mass;
  }
  double sup = 0.0;
  constexpr int kScan = 32;
  for (int i = 0; i <= kScan; ++i) {
    const double xi = shell->a + (shell->b - shell->a) * i / kScan;
    const double v = d.density(xi);
    if (std::isfinite(v)) sup = std::max(sup, v);
  }
  // The open endpoint nearest 0 may be singular; use the scan just inside.
  const double envelope = safety * sup;
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double xi = shell->a + (shell->b - shell->a) * rng.uniform_pos();
    const double v = d.density(xi);
    if (!(v <= envelope)) {
      throw Error(ErrorKind::IntensityBoundExceeded, "jump-size density exceeds its shell envelope");
    }
    if (rng.uniform() * envelope < v) return xi;
  }
  throw Error(ErrorKind::IntensityBoundExceeded, "jump-size rejection sampler stalled");
}

struct PathContext {
  const ProcessSpec& spec;
  const SimulationOptions& opt;
  std::shared_ptr<const DriftFlow> flow;
  const DriftField& drift;  // effective drift
  bool exact_rate;          // time-homogeneous and state-independent kernel
  double exact_total = 0.0;
  std::optional<ShellTable> exact_shells{};
  Box box{};
  double margin = 0.0;
  std::shared_ptr<const PointLocator> discrete{};
};

std::vector<Point> neighbourhood(const PathContext& c, const Point& x, double radius) {
  std::vector<Point> pts{x};
  const int dim = static_cast<int>(x.size());
  if (c.discrete && c.spec.space.is_finite()) {
    for (const auto& p : c.discrete->points()) {
      if ((p - x).norm() <= radius && p != x) pts.push_back(p);
    }
    return pts;
  }
  if (c.spec.space.is_lattice()) {
    const double step = std::get<LatticeSpace>(c.spec.space.variant()).step;
    const int reach = std::min(4, static_cast<int>(std::ceil(radius / step)));
    if (reach == 0) return pts;
    std::vector<int> k(static_cast<std::size_t>(dim), -reach);
    for (;;) {
      Point p = x;
      bool centre = true;
      for (int d = 0; d < dim; ++d) {
        p[d] += step * k[static_cast<std::size_t>(d)];
        centre = centre && k[static_cast<std::size_t>(d)] == 0;
      }
      if (!centre && (p - x).norm() <= radius + 1e-12) pts.push_back(p);
      int d = 0;
      for (; d < dim; ++d) {
        auto ud = static_cast<std::size_t>(d);
        if (++k[ud] <= reach) break;
        k[ud] = -reach;
      }
      if (d == dim || pts.size() > 4096) break;
    }
    return pts;
  }
  if (radius > 0.0) {
    for (int d = 0; d < dim; ++d) {
      for (double f : {-1.0, -0.5, 0.5, 1.0}) {
        Point p = x;
        p[d] += f * radius;
        pts.push_back(p);
      }
    }
  }
  return pts;
}

Trajectory simulate_path(const PathContext& c, std::size_t index) {
  PhiloxStream rng(c.opt.seed, index);
  const double T = c.spec.horizon;
  const double eps = c.opt.epsilon;
  const Point x0 = c.spec.initial_law.sample(rng);
  Trajectory traj(x0, T, c.flow);

  double t_knot = 0.0;
  Point x_knot = x0;
  auto state = [&](double t) {
    Point x = c.flow->is_trivial() ? x_knot : (*c.flow)(t_knot, x_knot, t);
    if (!x.allFinite() || !c.box.contains(x, c.margin)) {
      throw Error(ErrorKind::NonfiniteState,
                  "drift flow left the bounding box (path " + std::to_string(index) + ")");
    }
    return x;
  };

  double t = 0.0;
  Point x = x0;
  double bound = 0.0, window_end = T, radius = std::numeric_limits<double>::infinity();
  Point anchor = x0;
  bool refresh = true;
  const double window = c.opt.window_fraction * T;

  auto compute_bound = [&]() {
    anchor = x;
    if (c.exact_rate) {
      bound = c.exact_total;
      window_end = T;
      radius = std::numeric_limits<double>::infinity();
      return;
    }
    window_end = std::min(T, t + window);
    double drift_bound = 0.0;
    if (!c.flow->is_trivial()) {
      if (c.drift.hints().bound) {
        drift_bound = *c.drift.hints().bound;
      } else {
        for (int i = 0; i <= 4; ++i) {
          const double s = t + (window_end - t) * i / 4.0;
          drift_bound = std::max(drift_bound, c.drift(s, x).norm());
        }
        drift_bound *= c.opt.bound_safety;
      }
    }
    const double range = dyadic_jump_range(simulated_kernel(c.spec, eps, t, x));
    radius = (window_end - t) * drift_bound + range;
    const auto probes = neighbourhood(c, x, radius);
    double sup = 0.0;
    for (int i = 0; i <= 4; ++i) {
      const double s = t + (window_end - t) * i / 4.0;
      for (const auto& p : probes) {
        sup = std::max(sup, total_intensity(simulated_kernel(c.spec, eps, s, p), eps));
      }
    }
    bound = c.opt.bound_safety * sup;
  };

  std::size_t jumps = 0;
  for (;;) {
    if (refresh) {
      compute_bound();
      refresh = false;
    }
    const double tau = bound > 0.0 ? t + rng.exponential(bound) : std::numeric_limits<double>::infinity();
    if (tau >= window_end) {
      if (window_end >= T) break;
      t = window_end;
      x = state(t);
      refresh = true;
      continue;
    }
    const Point xt = state(tau);
    t = tau;
    x = xt;
    const LocalKernel k = c.exact_rate ? LocalKernel{} : simulated_kernel(c.spec, eps, tau, xt);
    const double rate = c.exact_rate ? c.exact_total : total_intensity(k, eps);
    if (rate > bound * (1.0 + 1e-12)) {
      throw Error(ErrorKind::IntensityBoundExceeded,
                  "intensity " + std::to_string(rate) + " exceeds the thinning bound " +
                      std::to_string(bound) + " at t=" + std::to_string(tau) + " (path " +
                      std::to_string(index) + ")");
    }
    if (rng.uniform() * bound < rate) {
      const LocalKernel kk = c.exact_rate ? simulated_kernel(c.spec, eps, tau, xt) : k;
      double u = rng.uniform() * rate;
      Point post;
      bool chosen = false;
      for (const auto& a : kk.atoms) {
        if (u < a.rate) {
          post = (a.target >= 0 && c.discrete) ? (*c.discrete)[static_cast<std::size_t>(a.target)]
                                               : Point(xt + a.jump);
          chosen = true;
          break;
        }
        u -= a.rate;
      }
      if (!chosen) {
        if (!kk.density) {
          // Round-off at the end of the atom list.
          const auto& a = kk.atoms.back();
          post = (a.target >= 0 && c.discrete) ? (*c.discrete)[static_cast<std::size_t>(a.target)]
                                               : Point(xt + a.jump);
        } else {
          const ShellTable shells = c.exact_shells ? *c.exact_shells : build_shells(*kk.density, eps);
          post = xt;
          post[0] += sample_from_shells(shells, *kk.density, rng, c.opt.bound_safety);
        }
      }
      traj.add_event(tau, xt, post);
      if (++jumps > c.opt.max_jumps) {
        throw Error(ErrorKind::ExplosionDetected, "more than " + std::to_string(c.opt.max_jumps) +
                                                      " jumps on path " + std::to_string(index));
      }
      t_knot = tau;
      x_knot = post;
      x = post;
      if (!c.exact_rate) refresh = true;
    } else if ((x - anchor).norm() > radius) {
      refresh = true;
    }
  }
  traj.finish(state(T));
  return traj;
}

}  // namespace

PathEnsemble simulate_forward(const ProcessSpec& spec, const SimulationOptions& opt) {
  if (opt.n_paths == 0) throw Error(ErrorKind::Config, "n_paths must be positive");
  if (!(opt.epsilon >= 0.0)) throw Error(ErrorKind::Config, "epsilon must be >= 0");
  if (opt.ode_steps < 1) throw Error(ErrorKind::Config, "ode_steps must be >= 1");

  const DriftField drift = effective_drift(spec, opt.epsilon);
  auto flow = std::make_shared<const DriftFlow>(drift, spec.horizon / opt.ode_steps);

  const auto& kh = spec.kernel.hints();
  PathContext ctx{spec, opt, flow, flow->drift(), kh.time_homogeneous && kh.state_independent};
  ctx.box = spec.space.box();
  ctx.margin = opt.box_margin >= 0.0 ? opt.box_margin : (ctx.box.hi - ctx.box.lo).norm();
  if (spec.space.is_discrete()) {
    try {
      ctx.discrete = spec.space.discrete_points();
    } catch (const Error&) {
      ctx.discrete = nullptr;
    }
  }
  if (ctx.exact_rate) {
    const Point probe = spec.space.box().lo;
    const LocalKernel k = simulated_kernel(spec, opt.epsilon, 0.0, probe);
    ctx.exact_total = total_intensity(k, opt.epsilon);
    if (k.density) ctx.exact_shells = build_shells(*k.density, opt.epsilon);
  }
  // Finite chains use the chain's own targets; a rate-matrix kernel is never
  // state-independent, so only atomic/Levy kernels reach the exact branch.

  PathEnsemble ensemble;
  ensemble.spec_fingerprint = spec.fingerprint();
  ensemble.seed = opt.seed;
  ensemble.horizon = spec.horizon;
  ensemble.paths.resize(opt.n_paths);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::map<std::size_t, std::exception_ptr> errors;

  auto worker = [&]() {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= opt.n_paths) return;
      try {
        ensemble.paths[i] = simulate_path(ctx, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        errors.emplace(i, std::current_exception());
        stop.store(true);
      }
    }
  };

  const int n_threads =
      static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(resolve_threads(opt.threads)), opt.n_paths));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  // Every index below the first failure was completed, so the reported
  // error does not depend on scheduling.
  if (!errors.empty()) std::rethrow_exception(errors.begin()->second);
  return ensemble;
}

EnsembleSummary summarize(const PathEnsemble& e) {
  if (e.paths.empty()) throw Error(ErrorKind::EmptyEnsemble, "ensemble is empty");
  EnsembleSummary s;
  s.n_paths = e.paths.size();
  const int dim = e.paths.front().dimension();
  s.mean_terminal = Point::Zero(dim);
  s.var_terminal = Point::Zero(dim);
  double sum = 0.0;
  for (const auto& p : e.paths) {
    sum += static_cast<double>(p.size());
    s.max_jumps = std::max(s.max_jumps, p.size());
    s.mean_terminal += p.terminal_state();
  }
  const auto n = static_cast<double>(s.n_paths);
  s.mean_jumps = sum / n;
  s.mean_terminal /= n;
  double ss = 0.0;
  for (const auto& p : e.paths) {
    const double d = static_cast<double>(p.size()) - s.mean_jumps;
    ss += d * d;
    s.var_terminal += (p.terminal_state() - s.mean_terminal).cwiseAbs2();
  }
  if (s.n_paths > 1) {
    s.var_jumps = ss / (n - 1.0);
    s.var_terminal /= (n - 1.0);
  }
  return s;
}

}  // namespace jumprev
