// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "jumprev/config.hpp"
#include "jumprev/entropy.hpp"
#include "jumprev/errors.hpp"
#include "jumprev/marginals.hpp"
#include "jumprev/simulate.hpp"
#include "support.hpp"

using namespace jumprev;

namespace {

std::vector<double> grid(double T, int n) {
  std::vector<double> g(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) g[static_cast<std::size_t>(i)] = T * i / n;
  return g;
}

EntropyReport entropy_of(const RunConfig& cfg, const std::string& tilt_expr, int intervals = 100) {
  const TiltFunction tilt = parse_tilt(tilt_expr, cfg.params, cfg.spec.space.dimension());
  const ProcessSpec tilted = tilt_process(cfg.spec, tilt);
  return relative_entropy(cfg.spec, tilt, master_equation_marginals(tilted, grid(cfg.spec.horizon, intervals)), 0.0);
}

Trajectory poisson_path(const std::vector<double>& times) {
  Trajectory tr(make_point({0}), 1.0, nullptr);
  double x = 0;
  for (double t : times) {
    tr.add_event(t, make_point({x}), make_point({x + 1}));
    x += 1;
  }
  tr.finish(make_point({x}));
  return tr;
}

const char* kPmOne = R"j({"space": {"type": "lattice", "box": {"lo": [-20], "hi": [20]}},
  "kernel": {"type": "atomic", "atoms": [{"jump": [1], "rate": "1"}, {"jump": [-1], "rate": "1"}]},
  "drift": "0", "delta": 1, "initial_law": {"type": "point", "x": [0]}, "horizon": 1})j";

}  // namespace

TEST_SUITE("tilt_process") {
  TEST_CASE("unit tilt leaves the process unchanged") {
    const RunConfig cfg = load_demo("lattice_drift");
    const ProcessSpec same = tilt_process(cfg.spec, TiltFunction::constant(1.0));
    for (const auto& probe : default_probe_grid(cfg.spec)) {
      const LocalKernel a = cfg.spec.kernel.at(probe.t, probe.x), b = same.kernel.at(probe.t, probe.x);
      REQUIRE(a.atoms.size() == b.atoms.size());
      for (std::size_t i = 0; i < a.atoms.size(); ++i) CHECK(a.atoms[i].rate == b.atoms[i].rate);
      CHECK(cfg.spec.drift(probe.t, probe.x) == same.drift(probe.t, probe.x));
    }
  }

  TEST_CASE("constant tilt 2 doubles the Poisson rate and keeps the drift") {
    const RunConfig cfg = parse_config(jrtest::poisson_document(1.0));
    const ProcessSpec p = tilt_process(cfg.spec, parse_tilt("2", {}, 1));
    const LocalKernel k = p.kernel.at(0.3, make_point({4}));
    REQUIRE(k.atoms.size() == 1);
    CHECK(k.atoms[0].rate == 2.0);
    CHECK(p.drift(0.3, make_point({4}))[0] == 0.0);
  }

  TEST_CASE("delta = 1 drift correction for atoms +-1") {
    const RunConfig cfg = parse_config(kPmOne);
    const ProcessSpec p = tilt_process(cfg.spec, parse_tilt("if(xi > 0, 2, 0)", {}, 1));
    CHECK(p.drift(0.5, make_point({0}))[0] == doctest::Approx(2.0).epsilon(1e-14));
  }

  TEST_CASE("negative tilts are rejected") {
    const RunConfig cfg = parse_config(jrtest::poisson_document(1.0));
    CHECK_THROWS_AS(tilt_process(cfg.spec, parse_tilt("x - 3", {}, 1)), Error);
  }
}

TEST_SUITE("relative_entropy") {
  TEST_CASE("unit tilt has zero entropy") {
    const EntropyReport r = entropy_of(parse_config(jrtest::poisson_document(1.0)), "1");
    CHECK(r.total == 0.0);
  }

  TEST_CASE("Poisson with tilt 2 gives 2 ln 2 - 1") {
    const EntropyReport r = entropy_of(parse_config(jrtest::poisson_document(1.0)), "2");
    CHECK(r.error <= 1e-6);
    CHECK(std::abs(r.running_term - (2 * std::log(2.0) - 1)) <= std::max(r.error, 1e-12));
  }

  TEST_CASE("killing every jump costs m T") {
    const RunConfig cfg = parse_config(R"j({"space": {"type": "lattice", "box": {"lo": [0], "hi": [50]}},
      "kernel": {"type": "atomic", "atoms": [{"jump": [1], "rate": "1.5"}]}, "drift": "0", "delta": 0,
      "initial_law": {"type": "point", "x": [0]}, "horizon": 2})j");
    const EntropyReport r = entropy_of(cfg, "0");
    CHECK(r.running_term == doctest::Approx(3.0).epsilon(1e-12));
  }

  TEST_CASE("time-dependent tilt: quadrature error bounds the true error and the refinement change") {
    // int_0^1 h(1 + t) dt = 2 ln 2 - 5/4.
    const RunConfig cfg = parse_config(jrtest::poisson_document(1.0));
    const EntropyReport coarse = entropy_of(cfg, "1 + t", 20);
    const EntropyReport fine = entropy_of(cfg, "1 + t", 40);
    const double exact = 2 * std::log(2.0) - 1.25;
    CHECK(std::abs(coarse.running_term - exact) <= coarse.error);
    CHECK(std::abs(fine.running_term - coarse.running_term) <= coarse.error);
    CHECK(fine.error < coarse.error);
  }

  TEST_CASE("entropy is nonnegative for random tilts") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    const RunConfig cfg = load_demo("random5");
    for (int i = 0; i < 10; ++i) {
      char expr[128];
      std::snprintf(expr, sizeof expr, "%.6f + %.6f * t + %.6f * (y > x)", u(rng), u(rng), u(rng));
      CHECK(entropy_of(cfg, expr, 20).total >= 0.0);
    }
  }

  TEST_CASE("grids must be even, equally spaced and span [0, T]") {
    const RunConfig cfg = parse_config(jrtest::poisson_document(1.0));
    const TiltFunction tilt = parse_tilt("2", {}, 1);
    const std::vector<double> odd{0.0, 0.5, 0.75, 1.0};
    CHECK_THROWS_AS(relative_entropy(cfg.spec, tilt, master_equation_marginals(cfg.spec, odd), 0.0), Error);
    const std::vector<double> partial{0.0, 0.25, 0.5};
    CHECK_THROWS_AS(relative_entropy(cfg.spec, tilt, master_equation_marginals(cfg.spec, partial), 0.0), Error);
  }
}

TEST_SUITE("path_log_likelihood") {
  TEST_CASE("unit tilt gives 0 on every path") {
    const RunConfig cfg = parse_config(jrtest::poisson_document(1.0));
    CHECK(path_log_likelihood(cfg.spec, TiltFunction::constant(1.0), poisson_path({0.2, 0.5})) == 0.0);
  }

  TEST_CASE("Poisson with tilt 2: N ln 2 - 1") {
    const RunConfig cfg = parse_config(jrtest::poisson_document(1.0));
    const TiltFunction two = parse_tilt("2", {}, 1);
    for (std::size_t n = 0; n < 5; ++n) {
      std::vector<double> times;
      for (std::size_t i = 0; i < n; ++i) times.push_back(0.1 + 0.15 * static_cast<double>(i));
      CHECK(path_log_likelihood(cfg.spec, two, poisson_path(times)) ==
            doctest::Approx(static_cast<double>(n) * std::log(2.0) - 1).epsilon(1e-14));
    }
  }

  TEST_CASE("a jump where the tilt vanishes has likelihood zero") {
    const RunConfig cfg = parse_config(jrtest::poisson_document(1.0));
    CHECK(path_log_likelihood(cfg.spec, parse_tilt("0", {}, 1), poisson_path({0.5})) ==
          -std::numeric_limits<double>::infinity());
  }

  TEST_CASE("Monte Carlo mean matches the running term on a finite chain") {
    const RunConfig cfg = load_demo("random5");
    const TiltFunction tilt = parse_tilt("0.5 + t * (y > x)", {}, 1);
    const ProcessSpec tilted = tilt_process(cfg.spec, tilt);
    const EntropyReport r =
        relative_entropy(cfg.spec, tilt, master_equation_marginals(tilted, grid(cfg.spec.horizon, 200)), 0.0);
    SimulationOptions o;
    o.n_paths = 50000;
    o.seed = 77;
    o.threads = 1;
    const PathEnsemble ens = simulate_forward(tilted, o);
    double sum = 0.0, sum2 = 0.0;
    for (const auto& p : ens.paths) {
      const double l = path_log_likelihood(cfg.spec, tilt, p);
      sum += l;
      sum2 += l * l;
    }
    const double n = static_cast<double>(o.n_paths), mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / (n - 1));
    CHECK(std::abs(mean - r.running_term) <= 3 * se + r.error);
  }
}

TEST_SUITE("discrete relative entropy") {
  TEST_CASE("values") {
    const std::vector<double> p{0.5, 0.5}, q{0.25, 0.75}, z{1.0, 0.0};
    CHECK(discrete_relative_entropy(p, p) == 0.0);
    CHECK(discrete_relative_entropy(p, q) ==
          doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(0.5 / 0.75)));
    CHECK(discrete_relative_entropy(p, z) == std::numeric_limits<double>::infinity());
  }
}
