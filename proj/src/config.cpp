// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include "jumprev/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "jumprev/errors.hpp"
#include "jumprev/quadrature.hpp"

namespace jumprev {

using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::Config, what); }

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) bad(where + ": missing field '" + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) bad(where + ": expected a number");
  return v.get<double>();
}

std::string expr_text(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v.get<double>());
    return buf;
  }
  bad(where + ": expected an expression string or a number");
}

Point point(const json& v, const std::string& where) {
  if (v.is_number()) return make_point({v.get<double>()});
  if (!v.is_array() || v.empty() || v.size() > static_cast<std::size_t>(kMaxDimension)) {
    bad(where + ": expected a point (array of 1.." + std::to_string(kMaxDimension) + " numbers)");
  }
  Point p(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p[static_cast<Eigen::Index>(i)] = number(v[i], where);
  return p;
}

Box box_of(const json& v, const std::string& where) {
  Box b{point(require(v, "lo", where), where + ".lo"), point(require(v, "hi", where), where + ".hi")};
  if (b.lo.size() != b.hi.size()) bad(where + ": lo and hi differ in dimension");
  return b;
}

Expr compile(const json& v, const ExprParams& params, const std::string& where, int dimension) {
  Expr e = Expr::parse(expr_text(v, where), params);
  if (e.max_coordinate() >= dimension) {
    bad(where + ": expression references coordinate " + std::to_string(e.max_coordinate()) +
        " in dimension " + std::to_string(dimension));
  }
  return e;
}

// ---------------------------------------------------------------------------

StateSpace parse_space(const json& v) {
  const std::string type = require(v, "type", "space").get<std::string>();
  if (type == "finite") {
    const auto n = require(v, "n_states", "space").get<long>();
    if (n < 1) bad("space: n_states must be >= 1");
    std::vector<Point> embedding;
    if (v.contains("embedding")) {
      for (const auto& p : v.at("embedding")) embedding.push_back(point(p, "space.embedding"));
    }
    return StateSpace::finite(static_cast<std::size_t>(n), std::move(embedding));
  }
  if (type == "lattice") {
    const Box box = box_of(require(v, "box", "space"), "space.box");
    const int dim = v.value("dimension", box.dimension());
    if (dim != box.dimension()) bad("space: dimension does not match the box");
    return StateSpace::lattice(dim, v.value("step", 1.0), box);
  }
  if (type == "continuous") {
    const Box box = box_of(require(v, "box", "space"), "space.box");
    if (v.contains("dimension") && v.at("dimension").get<int>() != box.dimension()) {
      bad("space: dimension does not match the box");
    }
    return StateSpace::continuous(box);
  }
  bad("space: unknown type '" + type + "'");
}

std::pair<double, double> support(const json& v, const std::string& where) {
  const json& s = require(v, "support", where);
  if (!s.is_array() || s.size() != 2) bad(where + ".support: expected [lo, hi]");
  const double lo = number(s[0], where), hi = number(s[1], where);
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) bad(where + ".support: need lo < hi");
  return {lo, hi};
}

JumpKernel parse_kernel(const json& v, const StateSpace& space, const ExprParams& params) {
  const std::string type = require(v, "type", "kernel").get<std::string>();
  const int dim = space.dimension();

  if (type == "rate_matrix") {
    if (!space.is_discrete()) bad("kernel: rate_matrix needs a finite or lattice space");
    const auto states = space.discrete_points();
    const std::size_t n = states->size();
    if (v.contains("rates")) {
      const json& r = v.at("rates");
      if (!r.is_array() || r.size() != n) bad("kernel.rates: expected an n x n matrix");
      Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        if (!r[i].is_array() || r[i].size() != n) bad("kernel.rates: expected an n x n matrix");
        for (std::size_t j = 0; j < n; ++j) {
          const double q = number(r[i][j], "kernel.rates");
          if (i != j && !(q >= 0.0)) bad("kernel.rates: rates must be nonnegative");
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = i == j ? 0.0 : q;
        }
      }
      return JumpKernel::rate_matrix(m, states);
    }
    const Expr rate = compile(require(v, "rate", "kernel"), params, "kernel.rate", dim);
    RateMatrixKernel k;
    k.n_states = n;
    k.states = states;
    k.rate = [rate, states](double t, std::size_t i, std::size_t j) {
      if (i == j) return 0.0;
      return rate(ExprArgs{t, coords((*states)[i]), coords((*states)[j]), {}});
    };
    return JumpKernel(std::move(k), JumpKernel::Hints{!rate.uses_time(), false});
  }

  if (type == "atomic") {
    AtomicKernel k;
    bool homogeneous = true, independent = true;
    for (const auto& a : require(v, "atoms", "kernel")) {
      Point jump = point(require(a, "jump", "kernel.atoms"), "kernel.atoms.jump");
      if (jump.size() != dim) bad("kernel.atoms: jump dimension mismatch");
      if (jump.isZero(0.0)) bad("kernel.atoms: a jump of size 0 is not allowed");
      const Expr rate = compile(require(a, "rate", "kernel.atoms"), params, "kernel.atoms.rate", dim);
      homogeneous = homogeneous && !rate.uses_time();
      independent = independent && !rate.uses_state();
      k.atoms.push_back(AtomicKernel::Atom{
          jump, [rate](double t, const Point& x) { return rate(t, coords(x)); }});
    }
    return JumpKernel(std::move(k), JumpKernel::Hints{homogeneous, independent});
  }

  if (type == "density") {
    if (dim != 1) bad("kernel: density kernels are one-dimensional");
    const Expr density = compile(require(v, "density", "kernel"), params, "kernel.density", dim);
    const auto [lo, hi] = support(v, "kernel");
    DensityKernel k;
    k.lo = lo;
    k.hi = hi;
    k.density = [density](double t, const Point& x, double xi) {
      return density(ExprArgs{t, coords(x), {}, {&xi, 1}});
    };
    return JumpKernel(std::move(k), JumpKernel::Hints{!density.uses_time(), !density.uses_state()});
  }

  if (type == "levy") {
    LevyMeasure m;
    if (v.contains("atoms")) {
      for (const auto& a : v.at("atoms")) {
        Point jump = point(require(a, "jump", "kernel.atoms"), "kernel.atoms.jump");
        if (jump.size() != dim) bad("kernel.atoms: jump dimension mismatch");
        if (jump.isZero(0.0)) bad("kernel.atoms: a jump of size 0 is not allowed");
        const double w = number(require(a, "weight", "kernel.atoms"), "kernel.atoms.weight");
        if (!(w >= 0.0)) bad("kernel.atoms: weights must be nonnegative");
        m.atoms.push_back(LevyAtom{jump, w});
      }
    }
    if (v.contains("density")) {
      if (dim != 1) bad("kernel: Levy densities are one-dimensional");
      const json& d = v.at("density");
      const Expr density = compile(require(d, "expr", "kernel.density"), params, "kernel.density", dim);
      if (density.uses_time() || density.uses_state() || density.uses_target()) {
        bad("kernel.density: a Levy density may depend on xi only");
      }
      const auto [lo, hi] = support(d, "kernel.density");
      m.density = LevyDensity{[density](double xi) { return density(ExprArgs{0.0, {}, {}, {&xi, 1}}); },
                              lo, hi, density.source()};
    }
    return JumpKernel(std::move(m));
  }

  if (type == "tilted") {
    auto base = std::make_shared<const JumpKernel>(parse_kernel(require(v, "base", "kernel"), space, params));
    return JumpKernel::tilted(base, parse_tilt(expr_text(require(v, "tilt", "kernel"), "kernel.tilt"),
                                               params, dim));
  }
  bad("kernel: unknown type '" + type + "'");
}

DriftField parse_drift(const json& v, int dim, const JumpKernel& kernel, TruncationDelta delta,
                       const ExprParams& params, std::optional<double> bound) {
  if (v.is_string() && v.get<std::string>() == "compensator") {
    // b^delta(t, x) = int trunc(xi) K_{t,x}(dxi): the pure-jump choice.
    if (!kernel.finite_activity()) bad("drift: 'compensator' needs a finite-activity kernel");
    if (delta.is_zero()) return DriftField::zero(dim);
    auto k = std::make_shared<const JumpKernel>(kernel);
    return DriftField(dim, [k, delta, dim](double t, const Point& x) {
      return integrate_kernel_vector(k->at(t, x), dim, [delta](const Point& xi) { return delta.apply(xi); })
          .value;
    }, DriftField::Hints{false, false, bound, true});
  }
  std::vector<Expr> comps;
  if (v.is_array()) {
    for (const auto& c : v) comps.push_back(compile(c, params, "drift", dim));
  } else {
    comps.push_back(compile(v, params, "drift", dim));
  }
  if (static_cast<int>(comps.size()) != dim) bad("drift: expected one component per dimension");

  bool constant = true, zero = true;
  for (const auto& c : comps) {
    constant = constant && c.is_constant();
    zero = zero && c.is_constant() && c(0.0, {}) == 0.0;
  }
  if (zero) return DriftField::zero(dim);
  if (constant) {
    Point b(dim);
    for (int i = 0; i < dim; ++i) b[i] = comps[static_cast<std::size_t>(i)](0.0, {});
    return DriftField::constant(b);
  }
  return DriftField(dim, [comps, dim](double t, const Point& x) {
    Point b(dim);
    for (int i = 0; i < dim; ++i) b[i] = comps[static_cast<std::size_t>(i)](t, coords(x));
    return b;
  }, DriftField::Hints{false, false, bound});
}

InitialLaw parse_initial_law(const json& v, const StateSpace& space, const ExprParams& params) {
  const std::string type = require(v, "type", "initial_law").get<std::string>();
  const int dim = space.dimension();
  if (type == "point") {
    Point x = point(require(v, "x", "initial_law"), "initial_law.x");
    if (x.size() != dim) bad("initial_law.x: dimension mismatch");
    return InitialLaw::point_mass(x);
  }
  if (type == "discrete") {
    std::vector<Point> pts;
    std::vector<double> probs;
    for (const auto& p : require(v, "points", "initial_law")) pts.push_back(point(p, "initial_law.points"));
    for (const auto& p : require(v, "probabilities", "initial_law")) {
      probs.push_back(number(p, "initial_law.probabilities"));
    }
    return InitialLaw::discrete(std::move(pts), std::move(probs));
  }
  if (type == "vector" || type == "weights") {
    if (!space.is_discrete()) bad("initial_law: '" + type + "' needs a discrete space");
    const auto states = space.discrete_points();
    std::vector<double> probs;
    if (type == "vector") {
      for (const auto& p : require(v, "probabilities", "initial_law")) {
        probs.push_back(number(p, "initial_law.probabilities"));
      }
      if (probs.size() != states->size()) bad("initial_law: one probability per state expected");
    } else {
      const Expr w = compile(require(v, "expr", "initial_law"), params, "initial_law.expr", dim);
      for (const auto& x : states->points()) probs.push_back(w(0.0, coords(x)));
    }
    return InitialLaw::discrete(states->points(), std::move(probs));
  }
  if (type == "density") {
    const Expr d = compile(require(v, "expr", "initial_law"), params, "initial_law.expr", dim);
    const Box box = v.contains("box") ? box_of(v.at("box"), "initial_law.box") : space.box();
    return InitialLaw::density([d](const Point& x) { return d(0.0, coords(x)); }, box);
  }
  bad("initial_law: unknown type '" + type + "'");
}

void parse_run(const json& r, RunConfig& cfg) {
  if (r.contains("n_paths")) {
    const auto n = r.at("n_paths").get<long long>();
    if (n < 0) bad("run.n_paths must be >= 0");
    cfg.n_paths = static_cast<std::size_t>(n);
  }
  if (r.contains("seed")) cfg.seed = r.at("seed").get<std::uint64_t>();
  cfg.epsilon = r.value("epsilon", 0.0);
  if (!(cfg.epsilon >= 0.0)) bad("run.epsilon must be >= 0");
  cfg.ode_steps = r.value("ode_steps", 1000);
  if (cfg.ode_steps < 1) bad("run.ode_steps must be >= 1");
  cfg.max_jumps = r.value("max_jumps", std::size_t{1'000'000});
  cfg.box_margin = r.value("box_margin", -1.0);
  if (r.contains("drift_bound")) cfg.drift_bound = r.at("drift_bound").get<double>();
  if (r.contains("time_grid")) {
    const json& g = r.at("time_grid");
    if (g.is_number_integer()) {
      cfg.grid_points = g.get<int>();
      if (cfg.grid_points < 1) bad("run.time_grid must be >= 1");
    } else if (g.is_array()) {
      for (const auto& t : g) cfg.time_grid.push_back(number(t, "run.time_grid"));
      for (std::size_t i = 0; i < cfg.time_grid.size(); ++i) {
        if (cfg.time_grid[i] < 0.0 || cfg.time_grid[i] > cfg.spec.horizon ||
            (i > 0 && !(cfg.time_grid[i] > cfg.time_grid[i - 1]))) {
          bad("run.time_grid must be strictly increasing within [0, T]");
        }
      }
      if (cfg.time_grid.empty()) bad("run.time_grid is empty");
    } else {
      bad("run.time_grid: expected a count or an array of times");
    }
  }
  if (r.contains("bins")) {
    const json& b = r.at("bins");
    if (b.is_number_integer()) {
      cfg.bins_per_dim.assign(static_cast<std::size_t>(cfg.spec.space.dimension()), b.get<int>());
    } else {
      cfg.bins_per_dim = b.get<std::vector<int>>();
    }
    if (static_cast<int>(cfg.bins_per_dim.size()) != cfg.spec.space.dimension()) {
      bad("run.bins: one count per dimension expected");
    }
    for (int n : cfg.bins_per_dim) {
      if (n < 1) bad("run.bins must be >= 1");
    }
  }
  cfg.smooth = r.value("smooth", false);
  if (r.contains("tilt")) cfg.tilt = expr_text(r.at("tilt"), "run.tilt");
  cfg.threads = r.value("threads", 0);
  if (r.contains("pipeline")) cfg.pipeline = r.at("pipeline").get<std::vector<std::string>>();

  if (r.contains("tolerances")) {
    const json& t = r.at("tolerances");
    auto& tol = cfg.tolerances;
    tol.absolute_continuity = t.value("absolute_continuity", tol.absolute_continuity);
    tol.binned_orphan = t.value("binned_orphan", tol.binned_orphan);
    tol.flux = t.value("flux", tol.flux);
    tol.reversible = t.value("reversible", tol.reversible);
  }
  if (r.contains("verify")) {
    const json& v = r.at("verify");
    auto& o = cfg.verify;
    if (v.contains("time_bins")) {
      const json& tb = v.at("time_bins");
      if (tb.is_array()) {
        o.time_edges = tb.get<std::vector<double>>();
        if (o.time_edges.size() < 2) bad("run.verify.time_bins: need at least two edges");
        for (std::size_t i = 1; i < o.time_edges.size(); ++i) {
          if (!(o.time_edges[i] > o.time_edges[i - 1])) bad("run.verify.time_bins must increase");
        }
        if (o.time_edges.front() < 0.0 || o.time_edges.back() > cfg.spec.horizon) {
          bad("run.verify.time_bins must lie in [0, T]");
        }
      } else {
        o.time_bins = tb.get<int>();
        if (o.time_bins < 1) bad("run.verify.time_bins must be >= 1");
      }
    }
    o.exclude_t0 = v.value("exclude_t0", o.exclude_t0);
    o.theory_scale = v.value("theory_scale", o.theory_scale);
    o.min_expected = v.value("min_expected", o.min_expected);
  }
  if (r.contains("entropy")) {
    const json& e = r.at("entropy");
    cfg.entropy.initial_term = e.value("initial_term", 0.0);
    cfg.entropy.grid_intervals = e.value("grid_intervals", 100);
    if (cfg.entropy.grid_intervals < 2 || cfg.entropy.grid_intervals % 2 != 0) {
      bad("run.entropy.grid_intervals must be even and >= 2");
    }
    cfg.entropy.mc_paths = e.value("mc_paths", std::size_t{0});
  }
}

}  // namespace

TiltFunction parse_tilt(std::string_view expression, const ExprParams& params, int dimension) {
  const Expr j = Expr::parse(expression, params);
  if (j.max_coordinate() >= dimension) bad("tilt: coordinate index exceeds the dimension");
  TiltFunction tilt(
      [j](double t, const Point& x, const Point& y) { return j(ExprArgs{t, coords(x), coords(y), {}}); },
      j.source(), j.is_constant());
  tilt.set_dependence(j.uses_time(), j.uses_state() || j.uses_target() || j.uses_jump());
  return tilt;
}

std::vector<double> RunConfig::resolved_time_grid() const {
  if (!time_grid.empty()) return time_grid;
  std::vector<double> g(static_cast<std::size_t>(grid_points));
  for (int i = 1; i <= grid_points; ++i) {
    g[static_cast<std::size_t>(i - 1)] = spec.horizon * i / grid_points;
  }
  g.back() = spec.horizon;
  return g;
}

RunConfig parse_config(std::string_view text, std::string name) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    bad(name + ": " + e.what());
  }
  if (!doc.is_object()) bad(name + ": top level must be an object");

  RunConfig cfg;
  cfg.name = std::move(name);
  try {
    if (doc.contains("params")) {
      for (const auto& [k, v] : doc.at("params").items()) cfg.params[k] = number(v, "params." + k);
    }
    ProcessSpec& spec = cfg.spec;
    spec.space = parse_space(require(doc, "space", "config"));
    spec.horizon = number(require(doc, "horizon", "config"), "horizon");
    spec.delta = TruncationDelta(number(require(doc, "delta", "config"), "delta"));
    spec.kernel = parse_kernel(require(doc, "kernel", "config"), spec.space, cfg.params);
    if (doc.contains("run") && doc.at("run").contains("drift_bound")) {
      cfg.drift_bound = doc.at("run").at("drift_bound").get<double>();
    }
    spec.drift = parse_drift(require(doc, "drift", "config"), spec.space.dimension(), spec.kernel,
                             spec.delta, cfg.params, cfg.drift_bound);
    spec.initial_law = parse_initial_law(require(doc, "initial_law", "config"), spec.space, cfg.params);

    json spec_doc = doc;
    spec_doc.erase("run");
    spec.document = spec_doc.dump();

    if (doc.contains("run")) parse_run(doc.at("run"), cfg);
  } catch (const json::exception& e) {
    bad(cfg.name + ": " + e.what());
  }
  cfg.spec.validate();
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

RunConfig load_demo(std::string_view name) {
  const auto text = demo_document(name);
  if (!text) {
    std::string known;
    for (const auto& n : demo_names()) known += (known.empty() ? "" : ", ") + n;
    bad("unknown demo '" + std::string(name) + "' (known: " + known + ")");
  }
  return parse_config(*text, std::string(name));
}

}  // namespace jumprev
