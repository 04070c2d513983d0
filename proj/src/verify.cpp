// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include "jumprev/verify.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "jumprev/errors.hpp"
#include "jumprev/expr.hpp"
#include "jumprev/quadrature.hpp"
#include "jumprev/simulate.hpp"

namespace jumprev {

double IntensityEstimate::rate(std::size_t k, std::size_t a, std::size_t b) const {
  const double occ = occupation[k][static_cast<Eigen::Index>(a)];
  return occ > 0.0 ? counts[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) / occ : 0.0;
}

double IntensityEstimate::standard_error(std::size_t k, std::size_t a, std::size_t b) const {
  const double occ = occupation[k][static_cast<Eigen::Index>(a)];
  return occ > 0.0 ? std::sqrt(counts[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))) / occ : 0.0;
}

namespace {

constexpr std::size_t kChunk = 4096;

struct Accumulator {
  std::vector<Eigen::MatrixXd> counts;
  std::vector<Eigen::VectorXd> occupation;

  Accumulator(std::size_t bins, Eigen::Index cells)
      : counts(bins, Eigen::MatrixXd::Zero(cells, cells)), occupation(bins, Eigen::VectorXd::Zero(cells)) {}
};

long bin_of(const std::vector<double>& edges, double s) {
  if (s < edges.front() || s > edges.back()) return -1;
  if (s == edges.back()) return static_cast<long>(edges.size()) - 2;
  return static_cast<long>(std::upper_bound(edges.begin(), edges.end(), s) - edges.begin()) - 1;
}

void add_occupation(Accumulator& acc, const std::vector<double>& edges, long cell, double a, double b) {
  if (cell < 0 || !(b > a)) return;
  a = std::max(a, edges.front());
  b = std::min(b, edges.back());
  if (!(b > a)) return;
  long k = bin_of(edges, a);
  for (; k >= 0 && k + 1 < static_cast<long>(edges.size()); ++k) {
    const double lo = std::max(a, edges[static_cast<std::size_t>(k)]);
    const double hi = std::min(b, edges[static_cast<std::size_t>(k) + 1]);
    if (hi > lo) acc.occupation[static_cast<std::size_t>(k)][cell] += hi - lo;
    if (edges[static_cast<std::size_t>(k) + 1] >= b) break;
  }
}

void accumulate_path(Accumulator& acc, const Trajectory& path, const std::vector<double>& edges,
                     const Binning& cells) {
  const double T = path.horizon();
  const std::size_t n = path.size();
  double s0 = 0.0;
  Point x = path.initial_state();
  const bool drift = path.has_drift();
  auto occupy = [&](double a, double b, const Point& start) {
    if (!drift) {
      add_occupation(acc, edges, cells.cell_of(start), a, b);
      return;
    }
    // Moving state: midpoint sub-steps of at most T/1000.
    const auto m = std::max<long>(1, static_cast<long>(std::ceil((b - a) / (T / 1000.0))));
    const double h = (b - a) / static_cast<double>(m);
    for (long i = 0; i < m; ++i) {
      const double lo = a + h * static_cast<double>(i);
      add_occupation(acc, edges, cells.cell_of(path.state_at(lo + h / 2)), lo, lo + h);
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto ev = path.event(i);
    occupy(s0, ev.t, x);
    const long k = bin_of(edges, ev.t);
    if (k >= 0) {
      const long from = cells.cell_of(ev.pre), to = cells.cell_of(ev.post);
      if (from >= 0 && to >= 0) acc.counts[static_cast<std::size_t>(k)](from, to) += 1.0;
    }
    s0 = ev.t;
    x = ev.post;
  }
  occupy(s0, T, x);
}

IntensityEstimate estimate_paths(const std::vector<Trajectory>& paths, const std::vector<double>& edges,
                                 const Binning& cells, int threads) {
  if (paths.empty()) throw Error(ErrorKind::EmptyEnsemble, "ensemble is empty");
  if (edges.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least one time bin");
  const std::size_t bins = edges.size() - 1;
  const auto ncell = static_cast<Eigen::Index>(cells.size());
  const std::size_t chunks = (paths.size() + kChunk - 1) / kChunk;
  std::vector<Accumulator> partial(chunks, Accumulator(bins, ncell));

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      const std::size_t end = std::min(paths.size(), (c + 1) * kChunk);
      for (std::size_t i = c * kChunk; i < end; ++i) accumulate_path(partial[c], paths[i], edges, cells);
    }
  };
  const auto nt = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), chunks);
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Fixed-size chunks reduced in order: independent of the thread count.
  IntensityEstimate est;
  est.time_edges = edges;
  est.cells = cells;
  est.n_paths = paths.size();
  est.counts.assign(bins, Eigen::MatrixXd::Zero(ncell, ncell));
  est.occupation.assign(bins, Eigen::VectorXd::Zero(ncell));
  for (const auto& p : partial) {
    for (std::size_t k = 0; k < bins; ++k) {
      est.counts[k] += p.counts[k];
      est.occupation[k] += p.occupation[k];
    }
  }
  return est;
}

}  // namespace

IntensityEstimate estimate_intensity(const PathEnsemble& ensemble, const std::vector<double>& time_edges,
                                     const Binning& cells, int threads) {
  return estimate_paths(ensemble.paths, time_edges, cells, threads);
}

IntensityEstimate estimate_backward_intensity(const PathEnsemble& forward, const std::vector<double>& time_edges,
                                              const Binning& cells, int threads) {
  if (forward.paths.empty()) throw Error(ErrorKind::EmptyEnsemble, "ensemble is empty");
  return estimate_intensity(forward.reversed(), time_edges, cells, threads);
}

PointRateEstimate local_quadratic_rate(const PathEnsemble& ensemble, double lo, double hi, const Binning& cells,
                                       std::size_t from, std::size_t to) {
  if (ensemble.paths.empty()) throw Error(ErrorKind::EmptyEnsemble, "ensemble is empty");
  if (!(hi > lo)) throw Error(ErrorKind::InvalidArgument, "empty time bin");
  const double mid = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
  auto kernel = [](double u) { return 0.375 * (3.0 - 5.0 * u * u); };
  // Antiderivative of K in u.
  auto primitive = [](double u) { return 0.375 * (3.0 * u - 5.0 * u * u * u / 3.0); };
  auto weight = [&](double a, double b) {
    a = std::max(a, lo);
    b = std::min(b, hi);
    if (!(b > a)) return 0.0;
    return hw * (primitive((b - mid) / hw) - primitive((a - mid) / hw));
  };
  const auto src = static_cast<long>(from), dst = static_cast<long>(to);
  double num = 0.0, num2 = 0.0, occ = 0.0, count = 0.0;
  for (const auto& path : ensemble.paths) {
    const double T = path.horizon();
    double s0 = 0.0;
    Point x = path.initial_state();
    auto occupy = [&](double a, double b, const Point& start) {
      if (!(b > lo) || !(a < hi)) return;
      if (!path.has_drift()) {
        if (cells.cell_of(start) == src) occ += weight(a, b);
        return;
      }
      const auto m = std::max<long>(1, static_cast<long>(std::ceil((b - a) / (T / 1000.0))));
      const double h = (b - a) / static_cast<double>(m);
      for (long i = 0; i < m; ++i) {
        const double l = a + h * static_cast<double>(i);
        if (cells.cell_of(path.state_at(l + h / 2)) == src) occ += weight(l, l + h);
      }
    };
    for (std::size_t i = 0; i < path.size(); ++i) {
      const auto ev = path.event(i);
      occupy(s0, ev.t, x);
      if (ev.t >= lo && ev.t <= hi && cells.cell_of(ev.pre) == src && cells.cell_of(ev.post) == dst) {
        const double k = kernel((ev.t - mid) / hw);
        num += k;
        num2 += k * k;
        count += 1.0;
      }
      s0 = ev.t;
      x = ev.post;
    }
    occupy(s0, T, x);
  }
  PointRateEstimate r;
  r.count = count;
  r.weighted_occupation = occ;
  if (occ > 0.0) {
    r.rate = num / occ;
    r.standard_error = std::sqrt(num2) / occ;
  }
  return r;
}

std::vector<double> verify_time_edges(const VerifyOptions& options, double horizon) {
  if (!options.time_edges.empty()) return options.time_edges;
  std::vector<double> e(static_cast<std::size_t>(options.time_bins) + 1);
  for (int i = 0; i <= options.time_bins; ++i) e[static_cast<std::size_t>(i)] = horizon * i / options.time_bins;
  e.back() = horizon;
  return e;
}

namespace {

double forward_midpoint(const std::vector<double>& edges, std::size_t k, double horizon) {
  return horizon - 0.5 * (edges[k] + edges[k + 1]);
}

}  // namespace

ReversalReport compare_reversal(const IntensityEstimate& est, double horizon, const BackwardRate& theory,
                                const VerifyOptions& options) {
  ReversalReport r;
  const auto n = est.cells.size();
  std::size_t in3 = 0, in4 = 0;
  for (std::size_t k = 0; k < est.time_bins(); ++k) {
    const bool touches_t0 = est.time_edges[k + 1] >= horizon;
    if (options.exclude_t0 && touches_t0) continue;
    const double t = forward_midpoint(est.time_edges, k, horizon);
    for (std::size_t a = 0; a < n; ++a) {
      const double occ = est.occupation[k][static_cast<Eigen::Index>(a)];
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        CellComparison c;
        c.time_bin = k;
        c.from = a;
        c.to = b;
        c.forward_time = t;
        c.occupation = occ;
        c.count = est.counts[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        c.theoretical = options.theory_scale * theory(t, a, b);
        c.expected = c.theoretical * occ;
        c.empirical = occ > 0.0 ? c.count / occ : 0.0;
        c.standard_error = occ > 0.0 ? std::sqrt(std::max(c.count, c.expected)) / occ : 0.0;
        c.usable = occ > 0.0 && (c.expected >= options.min_expected || c.count >= options.min_expected);
        if (c.standard_error > 0.0) c.z = (c.empirical - c.theoretical) / c.standard_error;
        if (c.usable) {
          ++r.usable;
          if (std::abs(c.z) <= 3.0) ++in3;
          if (std::abs(c.z) <= 4.0) ++in4;
          if (!r.worst || std::abs(c.z) > std::abs(r.worst->z)) r.worst = c;
        }
        r.cells.push_back(c);
      }
    }
  }
  if (r.usable > 0) {
    r.within_3sigma = static_cast<double>(in3) / static_cast<double>(r.usable);
    r.within_4sigma = static_cast<double>(in4) / static_cast<double>(r.usable);
  }
  r.pass = r.usable > 0 && r.within_4sigma >= options.pass_within_4sigma &&
           r.within_3sigma >= options.pass_within_3sigma;
  return r;
}

ReversalReport compare_reversal(const IntensityEstimate& est, double horizon, const BackwardCharacteristics& bc,
                                const VerifyOptions& options) {
  if (!est.cells.is_states() || est.cells.points()->points() != bc.states->points()) {
    throw Error(ErrorKind::BinMismatch, "estimate cells do not match the backward kernel's states");
  }
  for (std::size_t k = 0; k < est.time_bins(); ++k) {
    const double t = forward_midpoint(est.time_edges, k, horizon);
    const bool touches_t0 = est.time_edges[k + 1] >= horizon;
    if (options.exclude_t0 && touches_t0) continue;
    if (std::find(bc.times.begin(), bc.times.end(), t) == bc.times.end()) {
      throw Error(ErrorKind::BinMismatch, "no backward slice at the forward bin midpoint t=" + std::to_string(t));
    }
  }
  return compare_reversal(est, horizon, [&bc](double t, std::size_t a, std::size_t b) {
    return bc.slices[bc.slice_index(t)].rates(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }, options);
}

BackwardCharacteristics backward_at_bin_midpoints(const ProcessSpec& spec, const std::vector<double>& edges,
                                                  double tolerance) {
  std::vector<double> times;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) times.push_back(forward_midpoint(edges, k, spec.horizon));
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  const FiniteChain chain = finite_chain(spec);
  const MarginalFlow marginal = master_equation_marginals(spec, times);
  return reverse_finite(spec, chain, marginal, tolerance);
}

// ---------------------------------------------------------------------------

Point TestFunction::grad(const Point& x) const {
  if (gradient) return gradient(x);
  constexpr double h = 1e-5;
  Point g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Point a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (value(a) - value(b)) / (2 * h);
  }
  return g;
}

TestFunction test_function_from_expression(const std::string& expression, const ExprParams& params) {
  const Expr e = Expr::parse(expression, params);
  return TestFunction{[e](const Point& x) { return e(0.0, coords(x)); }, {}};
}

double carre_du_champ(const LocalKernel& kernel, const Point& x, const TestFunction& u, const TestFunction& v) {
  const double ux = u(x), vx = v(x);
  double g = 0.0;
  for (const auto& a : kernel.atoms) {
    if (a.rate == 0.0) continue;
    const Point y = x + a.jump;
    g += a.rate * ((u(y) - ux) * (v(y) - vx));
  }
  if (kernel.density) {
    const auto& d = *kernel.density;
    const Integral part = integrate_shells([&](double xi) {
      Point y = x;
      y[0] += xi;
      return ((u(y) - ux) * (v(y) - vx)) * d.density(xi);
    }, d.lo, d.hi);
    if (part.divergent) throw Error(ErrorKind::QuadratureDivergence, "carre du champ integral diverges");
    g += part.value;
  }
  return g;
}

double apply_generator(const Point& drift, const LocalKernel& kernel, TruncationDelta delta, const TestFunction& u,
                       const Point& x) {
  const double ux = u(x);
  const bool need_grad = !drift.isZero(0.0) || !delta.is_zero();
  const Point g = need_grad ? u.grad(x) : Point::Zero(x.size());
  double out = need_grad ? drift.dot(g) : 0.0;
  for (const auto& a : kernel.atoms) {
    if (a.rate == 0.0) continue;
    double inc = u(x + a.jump) - ux;
    if (!delta.is_zero()) inc -= g.dot(delta.apply(a.jump));
    out += a.rate * inc;
  }
  if (kernel.density) {
    const auto& d = *kernel.density;
    const Integral part = integrate_shells([&](double xi) {
      Point y = x;
      y[0] += xi;
      Point j = Point::Zero(x.size());
      j[0] = xi;
      double inc = u(y) - ux;
      if (!delta.is_zero()) inc -= g.dot(delta.apply(j));
      return inc * d.density(xi);
    }, d.lo, d.hi);
    if (part.divergent) throw Error(ErrorKind::QuadratureDivergence, "generator integral diverges");
    out += part.value;
  }
  return out;
}

double apply_generator(const ProcessSpec& spec, const BackwardCharacteristics* backward, Direction direction,
                       const TestFunction& u, double t, const Point& x) {
  if (direction == Direction::Forward) {
    return apply_generator(spec.drift(t, x), spec.kernel.at(t, x), spec.delta, u, x);
  }
  if (backward == nullptr) throw Error(ErrorKind::InvalidArgument, "backward generator needs characteristics");
  return apply_generator(backward->drift_field()(t, x), backward->kernel().at(t, x), backward->delta, u, x);
}

namespace {

LocalKernel row_kernel(const PointLocator& states, const Eigen::MatrixXd& rates, std::size_t i) {
  LocalKernel k;
  const auto ii = static_cast<Eigen::Index>(i);
  for (std::size_t j = 0; j < states.size(); ++j) {
    if (j == i) continue;
    const double r = rates(ii, static_cast<Eigen::Index>(j));
    if (r != 0.0) k.atoms.push_back(JumpAtom{states[j] - states[i], r, static_cast<int>(j)});
  }
  return k;
}

struct IbpTerms {
  const ProcessSpec& spec;
  const BackwardCharacteristics& bc;
  std::size_t slice;
  Eigen::MatrixXd forward;
  double t;

  double at_state(std::size_t i, const TestFunction& u, const TestFunction& v) const {
    const PointLocator& states = *bc.states;
    const Point& x = states[i];
    const LocalKernel kf = row_kernel(states, forward, i);
    const LocalKernel kb = row_kernel(states, bc.slices[slice].rates, i);
    const double lf = apply_generator(spec.drift(t, x), kf, spec.delta, u, x);
    const double lb = apply_generator(bc.drift[slice][i], kb, bc.delta, u, x);
    return (lf + lb) * v(x) + carre_du_champ(kf, x, u, v);
  }
};

IbpTerms make_terms(const ProcessSpec& spec, const BackwardCharacteristics& bc, double t) {
  const std::size_t s = bc.slice_index(t);
  if (bc.times[s] != t) throw Error(ErrorKind::InvalidArgument, "no backward slice at the requested time");
  const FiniteChain chain = finite_chain(spec);
  return IbpTerms{spec, bc, s, chain.rates(t), t};
}

}  // namespace

IbpResult ibp_residual(const ProcessSpec& spec, const BackwardCharacteristics& bc, const MarginalFlow& marginal,
                       double t, const TestFunction& u, const TestFunction& v) {
  const IbpTerms terms = make_terms(spec, bc, t);
  const Eigen::VectorXd p = marginal.masses(marginal.slice_at(t));
  if (static_cast<std::size_t>(p.size()) != bc.states->size()) {
    throw Error(ErrorKind::BinMismatch, "marginal and backward kernel have different state sets");
  }
  IbpResult r;
  for (std::size_t i = 0; i < bc.states->size(); ++i) {
    const double pi = p[static_cast<Eigen::Index>(i)];
    if (pi == 0.0) continue;
    r.residual += pi * terms.at_state(i, u, v);
  }
  return r;
}

IbpResult ibp_residual_mc(const ProcessSpec& spec, const BackwardCharacteristics& bc, const std::vector<Point>& samples,
                          double t, const TestFunction& u, const TestFunction& v) {
  if (samples.empty()) throw Error(ErrorKind::EmptyEnsemble, "no samples");
  const IbpTerms terms = make_terms(spec, bc, t);
  double sum = 0.0, sum2 = 0.0;
  for (const auto& x : samples) {
    const int i = bc.states->find(x);
    if (i < 0) throw Error(ErrorKind::InvalidArgument, "sample is not a state of the chain");
    const double f = terms.at_state(static_cast<std::size_t>(i), u, v);
    sum += f;
    sum2 += f * f;
  }
  const auto n = static_cast<double>(samples.size());
  IbpResult r;
  r.residual = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum2 - n * r.residual * r.residual) / (n - 1)) : 0.0;
  r.error_bar = 3.0 * std::sqrt(var / n);
  return r;
}

}  // namespace jumprev
