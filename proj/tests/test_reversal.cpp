// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <doctest.h>

#include "jumprev/config.hpp"
#include "jumprev/errors.hpp"
#include "jumprev/marginals.hpp"
#include "jumprev/reversal.hpp"
#include "support.hpp"

using namespace jumprev;

namespace {

Eigen::MatrixXd cycle() {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(3, 3);
  q(0, 1) = q(1, 2) = q(2, 0) = 1.0;
  return q;
}

Eigen::VectorXd random_law(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::VectorXd p(n);
  for (int i = 0; i < n; ++i) p[i] = u(rng);
  return p / p.sum();
}

}  // namespace

TEST_SUITE("flux equation") {
  TEST_CASE("uniform 3-cycle reverses to the reversed cycle") {
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(3, 1.0 / 3);
    const BackwardSlice s = solve_flux_equation(p, cycle(), 0.5, 1e-12);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
    expected(0, 2) = expected(2, 1) = expected(1, 0) = 1.0;
    CHECK(s.rates == expected);
  }

  TEST_CASE("symmetric 2-state chain at stationarity is its own reversal") {
    Eigen::MatrixXd q(2, 2);
    q << 0, 1, 1, 0;
    const BackwardSlice s = solve_flux_equation(Eigen::Vector2d(0.5, 0.5), q, 1.0, 1e-12);
    CHECK(s.rates == q);
  }

  TEST_CASE("Poisson backward rate is k/t for every lambda") {
    for (double lambda : {1.0, 2.0, 5.0}) {
      CAPTURE(lambda);
      const RunConfig cfg = parse_config(jrtest::poisson_document(lambda));
      const FiniteChain chain = finite_chain(cfg.spec);
      const std::vector<double> grid{0.25, 0.4, 0.5, 0.6, 1.0};
      const MarginalFlow f = master_equation_marginals(cfg.spec, grid);
      for (double t : grid) {
        const BackwardSlice s = solve_flux_equation(f, chain, t, 1e-12);
        for (int k = 1; k <= 3; ++k) CHECK(std::abs(s.rates(k, k - 1) - k / t) <= 1e-9);
        // Deeper states have tiny marginals; the ratio keeps relative accuracy.
        for (int k = 4; k <= 10; ++k) CHECK(std::abs(s.rates(k, k - 1) * t / k - 1.0) <= 1e-6);
      }
    }
  }

  TEST_CASE("flux identity, outflow consistency and double reversal on random chains") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 2 + trial % 6;
      const Eigen::MatrixXd q = jrtest::random_rates(n, rng, 0.0, 3.0);
      const Eigen::VectorXd p = random_law(n, rng);
      const BackwardSlice b = solve_flux_equation(p, q, 0.0, 1e-12);
      for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
          if (x != y) CHECK(std::abs(p[x] * q(x, y) - p[y] * b.rates(y, x)) <= 1e-10);
        }
      }
      const Eigen::MatrixXd pf = flux_matrix(p, q), pb = flux_matrix(p, b.rates);
      for (int y = 0; y < n; ++y) CHECK(std::abs(pb.row(y).sum() - pf.col(y).sum()) <= 1e-10);
      const BackwardSlice bb = solve_flux_equation(p, b.rates, 0.0, 1e-12);
      CHECK((bb.rates - q).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }

  TEST_CASE("zero-mass targets that receive flux are reported") {
    try {
      solve_flux_equation(Eigen::Vector3d(1, 0, 0), cycle(), 0.0, 1e-12);
      FAIL("expected AbsoluteContinuityViolation");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::AbsoluteContinuityViolation);
    }
    const BackwardSlice s = solve_flux_equation(Eigen::Vector3d(0.5, 0.5, 0), Eigen::MatrixXd::Zero(3, 3), 0.0, 0.0);
    CHECK(s.empty_rows[2]);
    CHECK(s.orphan_inflow == 0.0);
  }
}

TEST_SUITE("backward drift") {
  TEST_CASE("delta = 0 gives exactly -b") {
    const DriftField b = DriftField::constant(make_point({3, -1}));
    const JumpKernel k = JumpKernel(LevyMeasure{{LevyAtom{make_point({1, 0}), 2.0}}, std::nullopt});
    const Point out = backward_drift(b, k, k, TruncationDelta(0.0), 0.2, make_point({0, 0}));
    CHECK(out == make_point({-3, 1}));
  }

  TEST_CASE("symmetric kernel with delta = 1 and b = 0 gives 0") {
    const DriftField b = DriftField::zero(1);
    const JumpKernel k = JumpKernel(
        LevyMeasure{{LevyAtom{make_point({0.5}), 1.5}, LevyAtom{make_point({-0.5}), 1.5}}, std::nullopt});
    CHECK(backward_drift(b, k, k, TruncationDelta(1.0), 0.0, make_point({0}))[0] == 0.0);
  }

  TEST_CASE("aggregate identity on a lattice chain with delta = 1") {
    const RunConfig cfg = load_demo("lattice_drift");
    const FiniteChain chain = finite_chain(cfg.spec);
    const std::vector<double> grid = cfg.resolved_time_grid();
    const MarginalFlow f = master_equation_marginals(cfg.spec, grid);
    const BackwardCharacteristics bc = reverse_finite(cfg.spec, chain, f, 1e-12);
    const PointLocator& states = *chain.states;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Eigen::VectorXd& p = f.slices[i];
      const Eigen::MatrixXd fwd = chain.rates(grid[i]);
      double library = 0.0, direct = 0.0;
      for (std::size_t x = 0; x < states.size(); ++x) {
        const auto xx = static_cast<Eigen::Index>(x);
        const Point bf = cfg.spec.drift(grid[i], states[x]);
        library += p[xx] * (bf[0] + bc.drift[i][x][0]);
        // Direct summation: b_f + b_b = sum_y (J->(x,y) + J<-(x,y)) trunc(y - x), with
        // J<-(x,y) = p(y) J->(y,x) / p(x).
        for (std::size_t y = 0; y < states.size(); ++y) {
          if (x == y) continue;
          const auto yy = static_cast<Eigen::Index>(y);
          const double d = states[y][0] - states[x][0];
          if (std::abs(d) > 1.0) continue;
          direct += (p[xx] * fwd(xx, yy) + p[yy] * fwd(yy, xx)) * d;
        }
      }
      CHECK(std::abs(library) <= 1e-8);
      CHECK(std::abs(direct) <= 1e-8);
      // The compensator drift is nonzero, so the identity is not trivial.
      CHECK(std::abs(cfg.spec.drift(grid[i], states[3])[0]) > 0.5);
    }
  }
}

TEST_SUITE("Levy reversal") {
  TEST_CASE("atom reversal") {
    const LevyMeasure m{{LevyAtom{make_point({1, 0}), 2.0}}, std::nullopt};
    const auto [b, star] = levy_reverse(make_point({1, 0}), m);
    CHECK(b == make_point({-1, 0}));
    REQUIRE(star.atoms.size() == 1);
    CHECK(star.atoms[0].jump == make_point({-1, 0}));
    CHECK(star.atoms[0].weight == 2.0);
  }

  TEST_CASE("symmetric measure is invariant") {
    const LevyMeasure m{{LevyAtom{make_point({1}), 1.0}, LevyAtom{make_point({-1}), 1.0}}, std::nullopt};
    const auto [b, star] = levy_reverse(make_point({0.7}), m);
    CHECK(b == make_point({-0.7}));
    REQUIRE(star.atoms.size() == 2);
    CHECK(star.atoms[0].jump == m.atoms[1].jump);
    CHECK(star.atoms[1].jump == m.atoms[0].jump);
  }

  TEST_CASE("density reversal and involution are exact") {
    LevyMeasure m{{LevyAtom{make_point({2}), 0.5}}, LevyDensity{[](double xi) { return std::exp(xi) + 2 * xi * xi; },
                                                                 -1.0, 3.0, "exp(xi)+2*xi^2", false}};
    const auto [b1, s1] = levy_reverse(make_point({0.25}), m);
    CHECK(s1.density->lo == -3.0);
    CHECK(s1.density->hi == 1.0);
    CHECK(s1.density->mirrored);
    for (double xi : {-2.5, -0.3, 0.0, 0.9}) CHECK(s1.density->density(xi) == m.density->density(-xi));
    const auto [b2, s2] = levy_reverse(b1, s1);
    CHECK(b2 == make_point({0.25}));
    CHECK(s2.atoms[0].jump == m.atoms[0].jump);
    CHECK(s2.atoms[0].weight == m.atoms[0].weight);
    CHECK(s2.density->lo == m.density->lo);
    CHECK(s2.density->hi == m.density->hi);
    CHECK_FALSE(s2.density->mirrored);
    for (double xi : {-0.7, 0.1, 2.9}) CHECK(s2.density->density(xi) == m.density->density(xi));
  }
}

TEST_SUITE("reversibility and absolute continuity") {
  TEST_CASE("e^-V weighted symmetric kernel is reversible and J<- = J->") {
    const RunConfig cfg = load_demo("reversible");
    const FiniteChain chain = finite_chain(cfg.spec);
    const std::vector<double> grid{0.5};
    const Eigen::VectorXd p = master_equation_marginals(cfg.spec, grid).slices[0];
    const Eigen::MatrixXd q = chain.rates(0.5);
    CHECK(reversibility_check(p, q).is_reversible);
    CHECK((solve_flux_equation(p, q, 0.5, 1e-12).rates - q).cwiseAbs().maxCoeff() <= 1e-10);
  }

  TEST_CASE("uniform 3-cycle is not reversible") {
    const ReversibilityReport r = reversibility_check(Eigen::VectorXd::Constant(3, 1.0 / 3), cycle());
    CHECK_FALSE(r.is_reversible);
    CHECK(r.max_flux_difference == doctest::Approx(1.0 / 3));
  }

  TEST_CASE("stationary symmetric kernels are reversible") {
    std::mt19937_64 rng(12);
    for (int n = 2; n <= 6; ++n) {
      Eigen::MatrixXd q = jrtest::random_rates(n, rng);
      q = (q + q.transpose()).eval();
      CHECK(reversibility_check(Eigen::VectorXd::Constant(n, 1.0 / n), q).is_reversible);
    }
  }

  TEST_CASE("absolute continuity") {
    const auto states = StateSpace::finite(3).discrete_points();
    const auto full = check_absolute_continuity(Eigen::VectorXd::Constant(3, 1.0 / 3), cycle(), *states, 1e-12, 0.1);
    CHECK(full.pass);
    CHECK(full.orphan_mass == 0.0);
    Eigen::MatrixXd q = cycle();
    q(0, 1) = 2.5;
    const auto bad = check_absolute_continuity(Eigen::Vector3d(1, 0, 0), q, *states, 1e-12, 0.0);
    CHECK_FALSE(bad.pass);
    CHECK(bad.orphan_mass == doctest::Approx(2.5));
    REQUIRE(bad.offenders.size() == 1);
    CHECK(bad.offenders[0].first == 1);

    const RunConfig poisson = parse_config(jrtest::poisson_document(2.0));
    const std::vector<double> grid{0.1, 0.5, 1.0};
    const MarginalFlow f = master_equation_marginals(poisson.spec, grid);
    const FiniteChain chain = finite_chain(poisson.spec);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(check_absolute_continuity(f.slices[i], chain.rates(grid[i]), *chain.states, 1e-12, grid[i]).pass);
    }
  }
}

TEST_SUITE("binned reversal") {
  TEST_CASE("histogram flux balance on a two-bin toy") {
    const RunConfig cfg = parse_config(R"j({"space": {"type": "continuous", "box": {"lo": [0], "hi": [2]}},
      "kernel": {"type": "levy", "atoms": [{"jump": [1], "weight": 3}]}, "drift": "0", "delta": 0,
      "initial_law": {"type": "point", "x": [0.5]}, "horizon": 1})j");
    MarginalFlow f;
    f.kind = MarginalFlow::Kind::Histogram;
    f.times = {0.5};
    f.cells = Binning::regular(cfg.spec.space.box(), {2});
    f.slices = {Eigen::Vector2d(75, 25)};
    f.n_paths = 100;
    const BinnedReversal r = solve_flux_binned(f, 0, cfg.spec, 0.0, 1e-2);
    CHECK(r.pass);
    CHECK(r.forward(0, 1) == 3.0);
    CHECK(r.backward(1, 0) == doctest::Approx(9.0));
    CHECK(r.max_shift_ratio == doctest::Approx(3.0));
  }
}
