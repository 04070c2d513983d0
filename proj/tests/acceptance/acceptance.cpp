// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if
// every criterion passes.  Seeds are fixed so the run is reproducible.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "jumprev/commands.hpp"
#include "jumprev/config.hpp"
#include "jumprev/core.hpp"
#include "jumprev/entropy.hpp"
#include "jumprev/marginals.hpp"
#include "jumprev/reversal.hpp"
#include "jumprev/simulate.hpp"
#include "jumprev/trajectory.hpp"
#include "jumprev/verify.hpp"

using namespace jumprev;
namespace fs = std::filesystem;

namespace {

// Collects failed checks for one criterion and prints diagnostics.
class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      ++failures_;
      std::cout << "    failed: " << what << '\n';
    }
  }
  void note(const std::string& line) { std::cout << "    " << line << '\n'; }
  bool ok() const { return failures_ == 0; }

 private:
  int failures_ = 0;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

SimulationOptions options(std::size_t n, std::uint64_t seed, int threads) {
  SimulationOptions o;
  o.n_paths = n;
  o.seed = seed;
  o.threads = threads;
  return o;
}

std::string poisson_document(double lambda) {
  std::ostringstream s;
  s << R"j({"params": {"lambda": )j" << lambda
    << R"j(}, "space": {"type": "lattice", "box": {"lo": [0], "hi": [50]}},
      "kernel": {"type": "atomic", "atoms": [{"jump": [1], "rate": "lambda"}]},
      "drift": "0", "delta": 0, "initial_law": {"type": "point", "x": [0]}, "horizon": 1})j";
  return s.str();
}

std::vector<double> uniform_grid(double from, double to, int n) {
  std::vector<double> g;
  for (int i = 0; i <= n; ++i) g.push_back(from + (to - from) * i / n);
  return g;
}

TestFunction random_function(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> values(n);
  for (auto& v : values) v = u(rng);
  return TestFunction{[values](const Point& x) { return values[static_cast<std::size_t>(std::lround(x[0]))]; }, {}};
}

// 1. Poisson backward rate k/t.
bool poisson_backward_rate(Check& c) {
  const int threads = 0;
  for (double lambda : {1.0, 2.0, 5.0}) {
    const auto start = std::chrono::steady_clock::now();
    const RunConfig cfg = parse_config(poisson_document(lambda));
    const PathEnsemble ens = simulate_forward(cfg.spec, options(200000, 1000 + static_cast<int>(lambda), threads));
    const PathEnsemble rev = ens.reversed();
    const Binning cells = Binning::states(cfg.spec.space.discrete_points());
    // Reversed-clock bin [0.4, 0.6] is forward [0.4, 0.6]; the centre is t = 0.5.
    const IntensityEstimate ratio = estimate_intensity(rev, {0.4, 0.6}, cells);
    for (std::size_t k = 1; k <= 3; ++k) {
      const PointRateEstimate r = local_quadratic_rate(rev, 0.4, 0.6, cells, k, k - 1);
      const double expected = static_cast<double>(k) / 0.5;
      const double z = (r.rate - expected) / r.standard_error;
      c.note("lambda=" + fmt(lambda) + " k=" + std::to_string(k) + ": local-quadratic " + fmt(r.rate) + " +- " +
             fmt(r.standard_error) + " (z=" + fmt(z) + "), bin ratio " + fmt(ratio.rate(0, k, k - 1)) + " +- " +
             fmt(ratio.standard_error(0, k, k - 1)) + ", expected " + fmt(expected));
      c.require(std::abs(z) <= 3.0, "empirical rate within 3 sigma at lambda=" + fmt(lambda) + " k=" +
                                        std::to_string(k));
    }

    const std::vector<double> times{0.4, 0.5, 0.6};
    const MarginalFlow f = master_equation_marginals(cfg.spec, times);
    const FiniteChain chain = finite_chain(cfg.spec);
    double worst = 0.0;
    for (double t : times) {
      const BackwardSlice s = solve_flux_equation(f, chain, t, 1e-12);
      for (int k = 1; k <= 3; ++k) worst = std::max(worst, std::abs(s.rates(k, k - 1) - k / t));
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.note("lambda=" + fmt(lambda) + ": flux solver max |J<- - k/t| = " + fmt(worst) + ", " + fmt(seconds) + " s");
    c.require(worst <= 1e-9, "flux solver equals k/t to 1e-9 at lambda=" + fmt(lambda));
  }
  return c.ok();
}

// 2. Flux identity and double reversal on finite chains.
bool finite_state_oracle(Check& c) {
  for (const char* name : {"cycle3", "random5"}) {
    const RunConfig cfg = load_demo(name);
    const FiniteChain chain = finite_chain(cfg.spec);
    std::vector<double> grid;
    for (int i = 1; i <= 50; ++i) grid.push_back(cfg.spec.horizon * i / 50);
    const MarginalFlow f = master_equation_marginals(cfg.spec, grid);
    double flux = 0.0, twice = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Eigen::VectorXd& p = f.slices[i];
      const Eigen::MatrixXd q = chain.rates(grid[i]);
      const BackwardSlice b = solve_flux_equation(p, q, grid[i], 1e-12);
      for (Eigen::Index x = 0; x < q.rows(); ++x) {
        for (Eigen::Index y = 0; y < q.cols(); ++y) {
          if (x != y) flux = std::max(flux, std::abs(p[x] * q(x, y) - p[y] * b.rates(y, x)));
        }
      }
      const BackwardSlice bb = solve_flux_equation(p, b.rates, grid[i], 1e-12);
      twice = std::max(twice, (bb.rates - q).cwiseAbs().maxCoeff());
    }
    c.note(std::string(name) + ": max flux residual " + fmt(flux) + ", double reversal error " + fmt(twice));
    c.require(flux <= 1e-10, std::string(name) + " flux identity to 1e-10");
    c.require(twice <= 1e-9, std::string(name) + " double reversal to 1e-9");
  }
  return c.ok();
}

// 3. e^-V symmetric kernel at stationarity.
bool reversibility(Check& c) {
  const RunConfig cfg = load_demo("reversible");
  const FiniteChain chain = finite_chain(cfg.spec);
  const std::vector<double> grid{0.25, 0.5, 1.0};
  const MarginalFlow f = master_equation_marginals(cfg.spec, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Eigen::MatrixXd q = chain.rates(grid[i]);
    const ReversibilityReport r = reversibility_check(f.slices[i], q);
    const double diff = (solve_flux_equation(f.slices[i], q, grid[i], 1e-12).rates - q).cwiseAbs().maxCoeff();
    c.note("t=" + fmt(grid[i]) + ": reversible=" + (r.is_reversible ? "yes" : "no") + ", max |J<- - J->| = " +
           fmt(diff));
    c.require(r.is_reversible, "reversibility_check passes at t=" + fmt(grid[i]));
    c.require(diff <= 1e-10, "J<- equals J-> to 1e-10 at t=" + fmt(grid[i]));
  }
  return c.ok();
}

bool same_measure(const LevyMeasure& a, const LevyMeasure& b, const std::vector<double>& probes) {
  if (a.atoms.size() != b.atoms.size() || a.density.has_value() != b.density.has_value()) return false;
  for (std::size_t i = 0; i < a.atoms.size(); ++i) {
    if (a.atoms[i].jump != b.atoms[i].jump || a.atoms[i].weight != b.atoms[i].weight) return false;
  }
  if (!a.density) return true;
  if (a.density->lo != b.density->lo || a.density->hi != b.density->hi) return false;
  for (double xi : probes) {
    if (a.density->density(xi) != b.density->density(xi)) return false;
  }
  return true;
}

// 4. Levy reversal (-b, eta#Lambda) with eta(xi) = -xi.
bool levy_reversal(Check& c) {
  const RunConfig cfg = load_demo("levy");
  const LevyMeasure from_demo = std::get<LevyMeasure>(cfg.spec.kernel.variant());
  const LevyMeasure atomic{{LevyAtom{make_point({1.5, -0.5}), 2.0}, LevyAtom{make_point({-3, 0}), 0.25}}, std::nullopt};
  std::vector<double> probes;
  for (int i = 0; i <= 200; ++i) probes.push_back(-1.0 + i / 100.0);

  struct Case {
    const char* name;
    Point b;
    LevyMeasure m;
  };
  for (const Case& k : {Case{"demo (atom + density)", cfg.spec.drift(0.0, make_point({0})), from_demo},
                        Case{"atomic, 2-d", make_point({0.3, -1.25}), atomic}}) {
    const auto [b1, m1] = levy_reverse(k.b, k.m);
    bool exact = b1 == Point(-k.b) && m1.atoms.size() == k.m.atoms.size();
    for (std::size_t i = 0; exact && i < m1.atoms.size(); ++i) {
      exact = m1.atoms[i].jump == Point(-k.m.atoms[i].jump) && m1.atoms[i].weight == k.m.atoms[i].weight;
    }
    if (exact && k.m.density) {
      exact = m1.density && m1.density->lo == -k.m.density->hi && m1.density->hi == -k.m.density->lo;
      for (double xi : probes) exact = exact && m1.density->density(xi) == k.m.density->density(-xi);
    }
    const auto [b2, m2] = levy_reverse(b1, m1);
    const bool involution = b2 == k.b && same_measure(m2, k.m, probes);
    c.note(std::string(k.name) + ": pushforward exact=" + (exact ? "yes" : "no") +
           ", involution exact=" + (involution ? "yes" : "no"));
    c.require(exact, std::string(k.name) + " reversal equals (-b, eta#Lambda)");
    c.require(involution, std::string(k.name) + " involution");
  }
  return c.ok();
}

// 5. Relative entropy of a tilted Poisson process.
bool girsanov_entropy(Check& c) {
  const RunConfig cfg = load_demo("tilt");
  const TiltFunction tilt = parse_tilt(*cfg.tilt, cfg.params, cfg.spec.space.dimension());
  const ProcessSpec tilted = tilt_process(cfg.spec, tilt);
  const MarginalFlow f = master_equation_marginals(tilted, uniform_grid(0.0, cfg.spec.horizon, 100));
  const EntropyReport r = relative_entropy(cfg.spec, tilt, f, 0.0);
  const double exact = 2 * std::log(2.0) - 1;
  c.note("running term " + fmt(r.running_term) + " (exact " + fmt(exact) + ", |diff| " +
         fmt(std::abs(r.running_term - exact)) + ", quadrature error " + fmt(r.error) + ")");
  c.require(r.error <= 1e-6, "quadrature error <= 1e-6");
  c.require(std::abs(r.running_term - exact) <= std::max(r.error, 1e-12) && std::abs(r.running_term - exact) <= 1e-6,
            "running term equals 2 ln 2 - 1 within the quadrature error");

  const PathEnsemble ens = simulate_forward(tilted, options(100000, *cfg.seed, 0));
  double sum = 0.0, sum2 = 0.0;
  for (const auto& p : ens.paths) {
    const double l = path_log_likelihood(cfg.spec, tilt, p);
    sum += l;
    sum2 += l * l;
  }
  const double n = static_cast<double>(ens.paths.size()), mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / (n - 1));
  c.note("Monte Carlo mean " + fmt(mean) + " +- " + fmt(se) + " over " + fmt(n) + " tilted paths (z=" +
         fmt((mean - r.running_term) / se) + ")");
  c.require(std::abs(mean - r.running_term) <= 3 * se, "Monte Carlo mean within 3 standard errors");
  return c.ok();
}

// 6. Integration-by-parts residual of the carre du champ.
bool ibp_residual_check(Check& c) {
  std::mt19937_64 rng(606);
  for (const char* name : {"cycle3", "random5"}) {
    const RunConfig cfg = load_demo(name);
    const FiniteChain chain = finite_chain(cfg.spec);
    const std::vector<double> grid = uniform_grid(cfg.spec.horizon / 10, cfg.spec.horizon, 9);
    const MarginalFlow f = master_equation_marginals(cfg.spec, grid);
    const BackwardCharacteristics bc = reverse_finite(cfg.spec, chain, f, 1e-12);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const TestFunction u = random_function(rng, chain.size()), v = random_function(rng, chain.size());
      const double t = grid[static_cast<std::size_t>(i) % grid.size()];
      worst = std::max(worst, std::abs(ibp_residual(cfg.spec, bc, f, t, u, v).residual));
    }
    c.note(std::string(name) + ": max |residual| over 20 pairs " + fmt(worst));
    c.require(worst <= 1e-10, std::string(name) + " residual <= 1e-10");
  }
  return c.ok();
}

// 7. Backward drift.
bool backward_drift_check(Check& c) {
  // delta = 0: exactly -b, both for a Levy process with drift and on chains.
  const RunConfig levy = load_demo("levy");
  const JumpKernel reversed(levy_reverse(levy.spec.drift(0.0, make_point({0})),
                                         std::get<LevyMeasure>(levy.spec.kernel.variant()))
                                .second);
  bool exact = true;
  for (double x : {-3.0, 0.0, 1.7}) {
    for (double t : {0.0, 0.5, 1.0}) {
      const Point b = levy.spec.drift(t, make_point({x}));
      exact = exact && backward_drift(levy.spec.drift, levy.spec.kernel, reversed, TruncationDelta(0.0), t,
                                      make_point({x})) == Point(-b);
    }
  }
  for (const char* name : {"cycle3", "random5"}) {
    const RunConfig cfg = load_demo(name);
    const FiniteChain chain = finite_chain(cfg.spec);
    const std::vector<double> grid{0.5, 1.0};
    const BackwardCharacteristics bc = reverse_finite(cfg.spec, chain, master_equation_marginals(cfg.spec, grid));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (std::size_t x = 0; x < chain.size(); ++x) {
        exact = exact && bc.drift[i][x] == Point(-cfg.spec.drift(grid[i], (*chain.states)[x]));
      }
    }
  }
  c.note(std::string("delta = 0 returns exactly -b: ") + (exact ? "yes" : "no"));
  c.require(exact, "delta = 0 backward drift is exactly -b");

  // delta = 1 lattice example: aggregate identity.
  const RunConfig cfg = load_demo("lattice_drift");
  const FiniteChain chain = finite_chain(cfg.spec);
  const std::vector<double> grid = cfg.resolved_time_grid();
  const MarginalFlow f = master_equation_marginals(cfg.spec, grid);
  const BackwardCharacteristics bc = reverse_finite(cfg.spec, chain, f, 1e-12);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double aggregate = 0.0;
    for (std::size_t x = 0; x < chain.size(); ++x) {
      aggregate += f.slices[i][static_cast<Eigen::Index>(x)] *
                   (cfg.spec.drift(grid[i], (*chain.states)[x])[0] + bc.drift[i][x][0]);
    }
    worst = std::max(worst, std::abs(aggregate));
  }
  c.note("lattice delta = 1: max |sum p (b-> + b<-)| over " + std::to_string(grid.size()) + " times " + fmt(worst));
  c.require(worst <= 1e-8, "aggregate identity to 1e-8");
  return c.ok();
}

fs::path scratch_root() {
  static const fs::path root = fs::temp_directory_path() / ("jumprev_acceptance_" + std::to_string(::getpid()));
  return root;
}

// 8. Negative controls.
bool negative_controls(Check& c) {
  std::ostringstream log, err;
  RunConfig perturbed = load_demo("poisson_perturbed");
  const int verify_code = run_command("verify", perturbed, (scratch_root() / "perturbed").string(), log, err);
  c.note("perturbed Poisson verify exit code " + std::to_string(verify_code));
  c.require(verify_code == kExitVerifyFail, "perturbed theory fails verify with exit 4");

  std::ostringstream log2, err2;
  const int reverse_code =
      run_command("reverse", load_demo("zero_support"), (scratch_root() / "zero_support").string(), log2, err2);
  std::string message = err2.str();
  while (!message.empty() && message.back() == '\n') message.pop_back();
  c.note("absolute-continuity violation exit code " + std::to_string(reverse_code) + ": " + message);
  c.require(reverse_code == kExitMath, "violation exits with 3");
  c.require(message.find("state 1") != std::string::npos, "offending state reported");
  return c.ok();
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Byte comparison of every file two runs wrote.
bool same_outputs(const fs::path& a, const fs::path& b, std::size_t& files) {
  files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const fs::path other = b / entry.path().filename();
    if (!fs::exists(other) || file_bytes(entry.path()) != file_bytes(other)) return false;
    ++files;
  }
  for (const auto& entry : fs::directory_iterator(b)) {
    if (!fs::exists(a / entry.path().filename())) return false;
  }
  return files > 0;
}

// 9. Property suite.
bool properties(Check& c) {
  // h: nonnegative, convex, h(1) = 0.
  bool h_ok = entropy_h(1.0) == 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double a = i / 400.0, step = 1.0 / 400.0;
    h_ok = h_ok && entropy_h(a) >= 0.0;
    if (i > 0) h_ok = h_ok && entropy_h(a - step) + entropy_h(a + step) - 2 * entropy_h(a) >= -1e-12;
  }
  c.require(h_ok, "h nonnegative, convex, h(1) = 0");

  // reverse_path involution.
  const RunConfig lattice = load_demo("lattice_drift");
  const PathEnsemble ens = simulate_forward(lattice.spec, options(2000, 99, 0));
  bool involution = true;
  for (const auto& p : ens.paths) involution = involution && reverse_path(reverse_path(p)) == p;
  c.require(involution, "reverse_path involution");

  // Gamma symmetry and nonnegativity.
  const RunConfig levy = load_demo("levy");
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> xs(-5.0, 5.0), cs(-2.0, 2.0);
  bool gamma_ok = true;
  for (int i = 0; i < 1000; ++i) {
    const double a = cs(rng), b = cs(rng), d = cs(rng);
    const TestFunction u{[a, b](const Point& p) { return std::sin(a * p[0]) + b * p[0] * p[0]; }, {}};
    const TestFunction v{[d](const Point& p) { return std::exp(0.1 * d * p[0]); }, {}};
    const Point x = make_point({xs(rng)});
    const LocalKernel k = levy.spec.kernel.at(0.0, x);
    gamma_ok = gamma_ok && carre_du_champ(k, x, u, v) == carre_du_champ(k, x, v, u) &&
               carre_du_champ(k, x, u, u) >= 0.0;
  }
  c.require(gamma_ok, "Gamma symmetric and Gamma(u, u) >= 0 on 1000 points");

  // Determinism across repeated runs and thread counts.
  struct Run {
    const char* demo;
    const char* command;
  };
  bool deterministic = true;
  std::size_t compared = 0;
  for (const Run& r : {Run{"poisson", "simulate"}, Run{"poisson", "reverse"}, Run{"poisson", "verify"},
                       Run{"random5", "marginals"}, Run{"levy", "simulate"}, Run{"levy", "marginals"},
                       Run{"levy", "reverse"}, Run{"tilt", "entropy"}}) {
    std::vector<fs::path> dirs;
    for (int threads : {1, 4, 4}) {
      RunConfig cfg = load_demo(r.demo);
      cfg.threads = threads;
      const fs::path dir = scratch_root() / "determinism" /
                           (std::string(r.demo) + "_" + r.command + "_" + std::to_string(dirs.size()));
      std::ostringstream log, err;
      const int code = run_command(r.command, cfg, dir.string(), log, err);
      if (code != kExitOk) {
        c.require(false, std::string(r.demo) + " " + r.command + " exit " + std::to_string(code) + ": " + err.str());
        deterministic = false;
      }
      dirs.push_back(dir);
    }
    for (std::size_t i = 1; i < dirs.size(); ++i) {
      std::size_t files = 0;
      const bool same = same_outputs(dirs[0], dirs[i], files);
      compared += files;
      if (!same) {
        deterministic = false;
        c.require(false, std::string(r.demo) + " " + r.command + " outputs differ between runs");
      }
    }
  }
  c.note("compared " + std::to_string(compared) + " output files across thread counts 1, 4, 4");
  c.require(deterministic, "commands deterministic under a fixed seed");
  return c.ok();
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<bool(Check&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "Poisson backward rate k/t", poisson_backward_rate},
      {2, "finite-state oracle equivalence", finite_state_oracle},
      {3, "reversibility", reversibility},
      {4, "Levy reversal", levy_reversal},
      {5, "relative entropy of a tilted process", girsanov_entropy},
      {6, "integration-by-parts residual", ibp_residual_check},
      {7, "backward drift", backward_drift_check},
      {8, "negative controls", negative_controls},
      {9, "property suite", properties},
  };
  int failed = 0;
  for (const auto& k : criteria) {
    Check c;
    bool ok = false;
    const auto start = std::chrono::steady_clock::now();
    try {
      ok = k.run(c);
    } catch (const std::exception& e) {
      c.note(std::string("exception: ") + e.what());
      ok = false;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << k.id << ": " << k.title << " (" << fmt(seconds)
              << " s)" << std::endl;
    if (!ok) ++failed;
  }
  std::error_code ec;
  fs::remove_all(scratch_root(), ec);
  std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " criteria FAILED") << std::endl;
  return failed == 0 ? 0 : 1;
}
