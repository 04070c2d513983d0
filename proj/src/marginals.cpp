// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include "jumprev/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "jumprev/csv.hpp"
#include "jumprev/errors.hpp"
#include "jumprev/simulate.hpp"

namespace jumprev {

Eigen::MatrixXd FiniteChain::generator(double t) const {
  Eigen::MatrixXd q = rates(t);
  q.diagonal().setZero();
  q.diagonal() = -q.rowwise().sum();
  return q;
}

FiniteChain finite_chain(const ProcessSpec& spec) {
  if (!spec.space.is_discrete()) {
    throw Error(ErrorKind::Config, "a finite chain needs a finite or lattice state space");
  }
  auto states = spec.space.discrete_points();
  const auto kernel = std::make_shared<const JumpKernel>(spec.kernel);
  if (!kernel->finite_activity()) {
    throw Error(ErrorKind::Config, "density kernels have no finite-chain restriction");
  }

  const DriftField eff = effective_drift(spec, 0.0);
  if (!eff.is_zero()) {
    for (const auto& x : states->points()) {
      for (double t : {0.0, spec.horizon / 2, spec.horizon}) {
        if (eff(t, x).lpNorm<Eigen::Infinity>() > 1e-12) {
          throw Error(ErrorKind::Config,
                      "discrete state space with a nonzero effective drift: paths leave the lattice");
        }
      }
    }
  }

  FiniteChain chain;
  chain.states = states;
  chain.time_homogeneous = kernel->hints().time_homogeneous;
  chain.rates = [states, kernel](double t) {
    const auto n = static_cast<Eigen::Index>(states->size());
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Point& x = (*states)[static_cast<std::size_t>(i)];
      const LocalKernel k = kernel->at(t, x);
      for (const auto& a : k.atoms) {
        if (a.rate == 0.0) continue;
        if (!(a.rate > 0.0) || !std::isfinite(a.rate)) {
          throw Error(ErrorKind::InvalidArgument, "jump rate is negative or not finite");
        }
        const int j = a.target >= 0 ? a.target : states->find(x + a.jump);
        if (j < 0 || j == i) continue;
        r(i, j) += a.rate;
      }
    }
    return r;
  };
  return chain;
}

// ---------------------------------------------------------------------------

Binning Binning::states(std::shared_ptr<const PointLocator> points) {
  Binning b;
  b.points_ = std::move(points);
  const auto& pts = b.points_->points();
  b.box_ = Box{pts.front(), pts.front()};
  for (const auto& p : pts) {
    b.box_.lo = b.box_.lo.cwiseMin(p);
    b.box_.hi = b.box_.hi.cwiseMax(p);
  }
  return b;
}

Binning Binning::regular(const Box& box, std::vector<int> per_dim) {
  if (static_cast<int>(per_dim.size()) != box.dimension()) {
    throw Error(ErrorKind::InvalidArgument, "one bin count per dimension expected");
  }
  for (int n : per_dim) {
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "bin counts must be >= 1");
  }
  Binning b;
  b.box_ = box;
  b.per_dim_ = std::move(per_dim);
  return b;
}

Binning Binning::automatic(const Box& box, std::size_t n_paths) {
  const int d = box.dimension();
  const double per = std::pow(static_cast<double>(std::max<std::size_t>(n_paths, 1)) / 2000.0, 1.0 / d);
  const int n = std::clamp(static_cast<int>(std::floor(per)), 2, 50);
  return regular(box, std::vector<int>(static_cast<std::size_t>(d), n));
}

std::size_t Binning::size() const {
  if (points_) return points_->size();
  std::size_t n = 1;
  for (int k : per_dim_) n *= static_cast<std::size_t>(k);
  return n;
}

int Binning::dimension() const { return box_.dimension(); }

long Binning::cell_of(const Point& x) const {
  if (points_) return points_->find(x);
  if (x.size() != box_.lo.size()) return -1;
  long index = 0, stride = 1;
  for (int d = 0; d < x.size(); ++d) {
    const double lo = box_.lo[d], hi = box_.hi[d];
    if (!(x[d] >= lo && x[d] <= hi)) return -1;
    const int n = per_dim_[static_cast<std::size_t>(d)];
    long k = static_cast<long>(std::floor((x[d] - lo) / (hi - lo) * n));
    k = std::clamp(k, 0L, static_cast<long>(n - 1));
    index += k * stride;
    stride *= n;
  }
  return index;
}

Point Binning::center(std::size_t cell) const {
  if (points_) return (*points_)[cell];
  Point c(box_.dimension());
  for (int d = 0; d < c.size(); ++d) {
    const int n = per_dim_[static_cast<std::size_t>(d)];
    const auto k = static_cast<int>(cell % static_cast<std::size_t>(n));
    cell /= static_cast<std::size_t>(n);
    const double w = (box_.hi[d] - box_.lo[d]) / n;
    c[d] = box_.lo[d] + (k + 0.5) * w;
  }
  return c;
}

double Binning::cell_volume() const {
  if (points_) return 1.0;
  double v = 1.0;
  for (int d = 0; d < box_.dimension(); ++d) {
    v *= (box_.hi[d] - box_.lo[d]) / per_dim_[static_cast<std::size_t>(d)];
  }
  return v;
}

bool Binning::operator==(const Binning& o) const {
  if (is_states() != o.is_states()) return false;
  if (is_states()) return points_ == o.points_ || points_->points() == o.points_->points();
  return per_dim_ == o.per_dim_ && box_.lo == o.box_.lo && box_.hi == o.box_.hi;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd MarginalFlow::masses(std::size_t i) const {
  switch (kind) {
    case Kind::ProbabilityVectors: return slices[i];
    case Kind::Histogram: return slices[i] / static_cast<double>(std::max<std::size_t>(n_paths, 1));
    case Kind::Density: return slices[i] * cells.cell_volume();
  }
  return slices[i];
}

std::size_t MarginalFlow::slice_at(double t) const {
  const auto it = std::find(times.begin(), times.end(), t);
  if (it == times.end()) {
    throw Error(ErrorKind::TimeOutOfRange, "no marginal slice at t=" + format_number(t));
  }
  return static_cast<std::size_t>(it - times.begin());
}

namespace {

void check_grid(std::span<const double> grid, double horizon) {
  if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "time grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0 || grid[i] > horizon || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw Error(ErrorKind::InvalidArgument, "time grid must be strictly increasing within [0, T]");
    }
  }
}

Eigen::VectorXd renormalize(Eigen::VectorXd p, double t, double& drift) {
  const double min = p.minCoeff();
  if (min < -1e-9 || !p.allFinite()) {
    throw Error(ErrorKind::NegativeProbability,
                "master equation produced p=" + format_number(min) + " at t=" + format_number(t));
  }
  p = p.cwiseMax(0.0);
  const double s = p.sum();
  drift = std::abs(s - 1.0);
  return p / s;
}

}  // namespace

MarginalFlow master_equation_marginals(const FiniteChain& chain, const Eigen::VectorXd& p0,
                                       std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "time grid is empty");
  MarginalFlow flow;
  flow.kind = MarginalFlow::Kind::ProbabilityVectors;
  flow.cells = Binning::states(chain.states);
  flow.times.assign(grid.begin(), grid.end());
  const auto n = static_cast<Eigen::Index>(chain.size());
  if (p0.size() != n) throw Error(ErrorKind::InvalidArgument, "initial vector size mismatch");

  if (chain.time_homogeneous) {
    const Eigen::MatrixXd q = chain.generator(0.0);
    for (double t : grid) {
      Eigen::VectorXd p = p0;
      if (t > 0.0) {
        const Eigen::MatrixXd e = (q * t).exp();
        p = e.transpose() * p0;
      }
      double drift = 0.0;
      flow.slices.push_back(renormalize(p, t, drift));
      flow.renormalization.push_back(drift);
    }
    return flow;
  }

  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  auto rhs = [&chain, n](const State& p, State& dp, double t) {
    const Eigen::MatrixXd q = chain.generator(t);
    Eigen::Map<const Eigen::VectorXd> pv(p.data(), n);
    Eigen::Map<Eigen::VectorXd> dv(dp.data(), n);
    dv = q.transpose() * pv;
  };
  State p(p0.data(), p0.data() + n);
  double t = 0.0;
  auto stepper = ode::make_controlled(1e-13, 1e-10, ode::runge_kutta_dopri5<State>());
  for (double target : grid) {
    if (target > t) {
      ode::integrate_adaptive(stepper, rhs, p, t, target, (target - t) / 16);
      t = target;
    }
    double drift = 0.0;
    flow.slices.push_back(renormalize(Eigen::Map<const Eigen::VectorXd>(p.data(), n), t, drift));
    flow.renormalization.push_back(drift);
  }
  return flow;
}

MarginalFlow master_equation_marginals(const ProcessSpec& spec, std::span<const double> grid) {
  check_grid(grid, spec.horizon);
  const FiniteChain chain = finite_chain(spec);
  const Eigen::VectorXd p0 = spec.initial_law.on_points(*chain.states);
  return master_equation_marginals(chain, p0, grid);
}

MarginalFlow empirical_marginals(const PathEnsemble& ensemble, std::span<const double> grid,
                                 const Binning& binning, const EmpiricalOptions& options) {
  if (ensemble.paths.empty()) throw Error(ErrorKind::EmptyEnsemble, "ensemble is empty");
  check_grid(grid, ensemble.horizon);
  MarginalFlow flow;
  flow.kind = options.smooth ? MarginalFlow::Kind::Density : MarginalFlow::Kind::Histogram;
  flow.times.assign(grid.begin(), grid.end());
  flow.cells = binning;
  flow.n_paths = ensemble.paths.size();
  const auto cells = static_cast<Eigen::Index>(binning.size());
  const int dim = binning.dimension();

  for (double t : grid) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(cells);
    std::vector<Point> samples;
    if (options.smooth) samples.reserve(ensemble.paths.size());
    for (const auto& path : ensemble.paths) {
      const Point x = path.state_at(t);
      const long c = binning.cell_of(x);
      if (c < 0) {
        throw Error(ErrorKind::InvalidArgument,
                    "a path state at t=" + format_number(t) + " lies outside the bins");
      }
      counts[c] += 1.0;
      if (options.smooth) samples.push_back(x);
    }
    if (!options.smooth) {
      flow.slices.push_back(counts);
      continue;
    }
    // Product Gaussian kernel, bandwidth 1.06 sigma n^(-1/5) per dimension.
    const auto n = static_cast<double>(samples.size());
    std::vector<double> h(static_cast<std::size_t>(dim));
    for (int d = 0; d < dim; ++d) {
      double mean = 0.0, var = 0.0;
      for (const auto& s : samples) mean += s[d];
      mean /= n;
      for (const auto& s : samples) var += (s[d] - mean) * (s[d] - mean);
      const double sigma = samples.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
      double bw = 1.06 * sigma * std::pow(n, -0.2);
      if (!(bw > 0.0)) {
        bw = binning.is_states() ? 1.0
                                 : (binning.box().hi[d] - binning.box().lo[d]) /
                                       binning.per_dim()[static_cast<std::size_t>(d)];
      }
      h[static_cast<std::size_t>(d)] = bw;
    }
    flow.bandwidth = h;
    Eigen::VectorXd dens(cells);
    const double norm = 1.0 / std::sqrt(2.0 * M_PI);
    // Box cells hold the exact cell average of the kernel so that masses sum
    // to one whatever the bandwidth; state cells hold point values.
    std::vector<double> width(static_cast<std::size_t>(dim), 0.0);
    if (!binning.is_states()) {
      for (int d = 0; d < dim; ++d) {
        width[static_cast<std::size_t>(d)] =
            (binning.box().hi[d] - binning.box().lo[d]) / binning.per_dim()[static_cast<std::size_t>(d)];
      }
    }
    for (Eigen::Index c = 0; c < cells; ++c) {
      const Point centre = binning.center(static_cast<std::size_t>(c));
      double acc = 0.0;
      for (const auto& s : samples) {
        double k = 1.0;
        for (int d = 0; d < dim; ++d) {
          const double hd = h[static_cast<std::size_t>(d)];
          const double w = width[static_cast<std::size_t>(d)];
          if (w > 0.0) {
            const double a = (centre[d] - w / 2 - s[d]) / (hd * M_SQRT2);
            const double b = (centre[d] + w / 2 - s[d]) / (hd * M_SQRT2);
            k *= 0.5 * (std::erf(b) - std::erf(a)) / w;
          } else {
            const double z = (centre[d] - s[d]) / hd;
            k *= norm * std::exp(-0.5 * z * z) / hd;
          }
        }
        acc += k;
      }
      dens[c] = acc / n;
      if (dens[c] < options.floor) {
        dens[c] = options.floor;
        ++flow.floored_cells;
      }
    }
    flow.slices.push_back(dens);
  }
  return flow;
}

// ---------------------------------------------------------------------------

void write_marginals_csv(const MarginalFlow& flow, const std::string& path) {
  CsvWriter out(path);
  std::vector<std::string> header{"t"};
  const int dim = flow.cells.dimension();
  for (int d = 0; d < dim; ++d) header.push_back("x" + std::to_string(d));
  header.push_back("mass");
  out.header(header);
  for (std::size_t i = 0; i < flow.times.size(); ++i) {
    const Eigen::VectorXd m = flow.masses(i);
    for (Eigen::Index c = 0; c < m.size(); ++c) {
      std::vector<double> row{flow.times[i]};
      const Point centre = flow.cells.center(static_cast<std::size_t>(c));
      for (int d = 0; d < dim; ++d) row.push_back(centre[d]);
      row.push_back(m[c]);
      out.row(row);
    }
  }
  out.close();
}

MarginalFlow read_marginals_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() < 3 || table.header.front() != "t" || table.header.back() != "mass") {
    throw Error(ErrorKind::Io, path + ": expected columns t, x0.., mass");
  }
  const std::size_t dim = table.header.size() - 2;
  MarginalFlow flow;
  flow.kind = MarginalFlow::Kind::ProbabilityVectors;
  std::vector<Point> points;
  std::vector<std::vector<double>> masses;
  for (const auto& row : table.rows) {
    const double t = row[0];
    if (flow.times.empty() || flow.times.back() != t) {
      flow.times.push_back(t);
      masses.emplace_back();
    }
    if (flow.times.size() == 1) {
      Point p(static_cast<Eigen::Index>(dim));
      for (std::size_t d = 0; d < dim; ++d) p[static_cast<Eigen::Index>(d)] = row[1 + d];
      points.push_back(p);
    }
    masses.back().push_back(row.back());
  }
  if (points.empty()) throw Error(ErrorKind::Io, path + ": no rows");
  flow.cells = Binning::states(std::make_shared<PointLocator>(points));
  for (const auto& m : masses) {
    if (m.size() != points.size()) throw Error(ErrorKind::Io, path + ": ragged time slices");
    flow.slices.push_back(Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size())));
    flow.renormalization.push_back(0.0);
  }
  return flow;
}

}  // namespace jumprev
