// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include "jumprev/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "jumprev/csv.hpp"
#include "jumprev/entropy.hpp"
#include "jumprev/errors.hpp"
#include "jumprev/marginals.hpp"
#include "jumprev/reversal.hpp"
#include "jumprev/simulate.hpp"
#include "jumprev/trajectory.hpp"
#include "jumprev/verify.hpp"

namespace jumprev {

namespace {

std::string prepare_dir(const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw Error(ErrorKind::Io, "cannot create output directory '" + out_dir + "'");
  }
  return out_dir;
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

std::uint64_t require_seed(const RunConfig& cfg, const char* command) {
  if (!cfg.seed) throw Error(ErrorKind::Config, std::string(command) + " needs a seed (run.seed or --seed)");
  return *cfg.seed;
}

std::vector<std::string> coord_columns(const std::string& prefix, int dim) {
  if (dim == 1) return {prefix};
  std::vector<std::string> c;
  for (int i = 0; i < dim; ++i) c.push_back(prefix + "_" + std::to_string(i));
  return c;
}

void append(std::vector<double>& row, const Point& x) {
  for (int i = 0; i < x.size(); ++i) row.push_back(x[i]);
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

SimulationOptions simulation_options(const RunConfig& cfg, std::size_t n_paths, std::uint64_t seed) {
  SimulationOptions o;
  o.n_paths = n_paths;
  o.seed = seed;
  o.epsilon = cfg.epsilon;
  o.ode_steps = cfg.ode_steps;
  o.max_jumps = cfg.max_jumps;
  o.box_margin = cfg.box_margin;
  o.threads = resolve_threads(cfg.threads);
  return o;
}

Binning continuous_binning(const RunConfig& cfg, std::size_t n_paths) {
  const Box box = cfg.spec.space.box();
  if (!cfg.bins_per_dim.empty()) {
    std::vector<int> per = cfg.bins_per_dim;
    if (per.size() == 1) per.assign(static_cast<std::size_t>(cfg.spec.space.dimension()), per.front());
    return Binning::regular(box, per);
  }
  return Binning::automatic(box, n_paths);
}

void write_levy_sidecar(const ProcessSpec& spec, const std::string& path) {
  const auto* levy = std::get_if<LevyMeasure>(&spec.kernel.variant());
  if (levy == nullptr) return;
  const Point origin = spec.space.box().lo;
  const auto [b, star] = levy_reverse(spec.drift(0.0, origin), *levy);
  nlohmann::ordered_json j;
  j["drift"] = std::vector<double>(b.data(), b.data() + b.size());
  auto atoms = nlohmann::ordered_json::array();
  for (const auto& a : star.atoms) {
    atoms.push_back({{"jump", std::vector<double>(a.jump.data(), a.jump.data() + a.jump.size())},
                     {"weight", a.weight}});
  }
  j["atoms"] = atoms;
  if (star.density) {
    j["density"] = {{"expr", star.density->source},
                    {"argument", star.density->mirrored ? "-xi" : "xi"},
                    {"support", {star.density->lo, star.density->hi}}};
  } else {
    j["density"] = nullptr;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

MarginalFlow marginals_for(const RunConfig& cfg, const ProcessSpec& spec, const std::vector<double>& grid,
                           const char* command) {
  if (spec.space.is_discrete()) return master_equation_marginals(spec, grid);
  const std::uint64_t seed = require_seed(cfg, command);
  if (cfg.n_paths == 0) throw Error(ErrorKind::Config, "n_paths must be positive");
  const PathEnsemble ens = simulate_forward(spec, simulation_options(cfg, cfg.n_paths, seed));
  EmpiricalOptions eo;
  eo.smooth = cfg.smooth;
  return empirical_marginals(ens, grid, continuous_binning(cfg, cfg.n_paths), eo);
}

}  // namespace

// ---------------------------------------------------------------------------

void cmd_simulate(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  const std::uint64_t seed = require_seed(cfg, "simulate");
  if (cfg.n_paths == 0) throw Error(ErrorKind::Config, "n_paths must be positive");
  prepare_dir(out_dir);
  const PathEnsemble ens = simulate_forward(cfg.spec, simulation_options(cfg, cfg.n_paths, seed));
  write_ensemble_jsonl(ens, join(out_dir, "ensemble.jsonl"));

  const EnsembleSummary s = summarize(ens);
  const int dim = cfg.spec.space.dimension();
  CsvWriter csv(join(out_dir, "summary.csv"));
  csv.header(concat(concat({"n_paths", "mean_jumps", "var_jumps", "max_jumps"}, coord_columns("mean_terminal", dim)),
                    coord_columns("var_terminal", dim)));
  std::vector<double> row{static_cast<double>(s.n_paths), s.mean_jumps, s.var_jumps,
                          static_cast<double>(s.max_jumps)};
  append(row, s.mean_terminal);
  append(row, s.var_terminal);
  csv.row(row);
  csv.close();

  write_levy_sidecar(cfg.spec, join(out_dir, "levy_reverse.json"));
  log << "simulate: " << s.n_paths << " paths, mean jumps " << format_number(s.mean_jumps) << '\n';
}

void cmd_marginals(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  prepare_dir(out_dir);
  const MarginalFlow flow = marginals_for(cfg, cfg.spec, cfg.resolved_time_grid(), "marginals");
  write_marginals_csv(flow, join(out_dir, "marginals.csv"));
  log << "marginals: " << flow.times.size() << " times, " << flow.cells.size() << " cells\n";
}

namespace {

void reverse_discrete(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  const ProcessSpec& spec = cfg.spec;
  const FiniteChain chain = finite_chain(spec);
  const PointLocator& states = *chain.states;
  const std::vector<double> grid = cfg.resolved_time_grid();
  const MarginalFlow marg = master_equation_marginals(spec, grid);
  const int dim = spec.space.dimension();
  const double tol = cfg.tolerances.absolute_continuity;

  CsvWriter kernel(join(out_dir, "backward_kernel.csv"));
  kernel.header(concat(concat({"t"}, coord_columns("from", dim)),
                       concat(coord_columns("to", dim), {"rate", "forward_rate"})));
  CsvWriter drift(join(out_dir, "backward_drift.csv"));
  drift.header(concat(concat({"t"}, coord_columns("x", dim)),
                      concat(coord_columns("forward", dim), coord_columns("backward", dim))));
  CsvWriter ac(join(out_dir, "absolute_continuity.csv"));
  ac.header({"t", "orphan_mass", "offenders", "pass"});
  CsvWriter rev(join(out_dir, "reversibility.csv"));
  rev.header({"t", "max_flux_difference", "max_flux_asymmetry", "reversible"});

  std::optional<std::string> violation;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    const Eigen::VectorXd& p = marg.slices[i];
    const Eigen::MatrixXd fwd = chain.rates(t);
    const AbsoluteContinuityReport report = check_absolute_continuity(p, fwd, states, tol, t);
    ac.row({t, report.orphan_mass, static_cast<double>(report.offenders.size()), report.pass ? 1.0 : 0.0});
    if (!report.pass && !violation) {
      std::string msg = "absolute continuity fails at t=" + format_number(t) + ": zero-mass states receiving flux:";
      for (const auto& [y, mass] : report.offenders) {
        std::string coords;
        for (int d = 0; d < dim; ++d) coords += (d ? "," : "") + format_number(states[y][d]);
        msg += " state " + std::to_string(y) + " (x=" + coords + ", mass " + format_number(mass) + ")";
      }
      violation = msg;
    }
    // Zero-mass rows are left empty; the violation is raised after the
    // reports are complete.
    const BackwardSlice s = solve_flux_equation(p, fwd, t, std::numeric_limits<double>::infinity());
    for (std::size_t y = 0; y < states.size(); ++y) {
      for (std::size_t x = 0; x < states.size(); ++x) {
        if (x == y) continue;
        const auto yy = static_cast<Eigen::Index>(y), xx = static_cast<Eigen::Index>(x);
        const double b = s.rates(yy, xx), f = fwd(yy, xx);
        if (b == 0.0 && f == 0.0) continue;
        std::vector<double> row{t};
        append(row, states[y]);
        append(row, states[x]);
        row.push_back(b);
        row.push_back(f);
        kernel.row(row);
      }
    }
    std::vector<Point> bf;
    for (const auto& x : states.points()) bf.push_back(spec.drift(t, x));
    const std::vector<Point> bb = backward_drift_on_states(states, bf, fwd, s.rates, spec.delta);
    for (std::size_t k = 0; k < states.size(); ++k) {
      std::vector<double> row{t};
      append(row, states[k]);
      append(row, bf[k]);
      append(row, bb[k]);
      drift.row(row);
    }
    const ReversibilityReport r = reversibility_check(p, fwd, cfg.tolerances.reversible);
    rev.row({t, r.max_flux_difference, r.max_flux_asymmetry, r.is_reversible ? 1.0 : 0.0});
  }
  kernel.close();
  drift.close();
  ac.close();
  rev.close();
  if (violation) throw Error(ErrorKind::AbsoluteContinuityViolation, *violation);
  log << "reverse: " << grid.size() << " time slices over " << states.size() << " states\n";
}

void reverse_continuous(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  const ProcessSpec& spec = cfg.spec;
  const std::vector<double> grid = cfg.resolved_time_grid();
  const MarginalFlow marg = marginals_for(cfg, spec, grid, "reverse");
  const int dim = spec.space.dimension();

  CsvWriter kernel(join(out_dir, "backward_kernel_binned.csv"));
  kernel.header(concat(concat({"t"}, coord_columns("from", dim)),
                       concat(coord_columns("to", dim), {"rate", "forward_rate"})));
  CsvWriter ac(join(out_dir, "absolute_continuity.csv"));
  ac.header({"t", "orphan_mass", "total_flux", "max_shift_ratio", "floored_cells", "pass"});

  std::optional<std::string> violation;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const BinnedReversal r = solve_flux_binned(marg, i, spec, cfg.epsilon, cfg.tolerances.binned_orphan);
    ac.row({r.t, r.orphan_mass, r.total_flux, r.max_shift_ratio, static_cast<double>(marg.floored_cells),
            r.pass ? 1.0 : 0.0});
    if (!r.pass && !violation) {
      violation = "binned flux into empty cells at t=" + format_number(r.t) + " is " + format_number(r.orphan_mass) +
                  " of total " + format_number(r.total_flux);
    }
    const auto n = static_cast<Eigen::Index>(marg.cells.size());
    for (Eigen::Index b = 0; b < n; ++b) {
      for (Eigen::Index a = 0; a < n; ++a) {
        if (a == b || (r.backward(b, a) == 0.0 && r.forward(b, a) == 0.0)) continue;
        std::vector<double> row{r.t};
        append(row, marg.cells.center(static_cast<std::size_t>(b)));
        append(row, marg.cells.center(static_cast<std::size_t>(a)));
        row.push_back(r.backward(b, a));
        row.push_back(r.forward(b, a));
        kernel.row(row);
      }
    }
  }
  kernel.close();
  ac.close();
  write_levy_sidecar(spec, join(out_dir, "levy_reverse.json"));
  if (violation) throw Error(ErrorKind::AbsoluteContinuityViolation, *violation);
  log << "reverse: " << grid.size() << " time slices over " << marg.cells.size() << " bins\n";
}

}  // namespace

void cmd_reverse(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  prepare_dir(out_dir);
  if (cfg.spec.space.is_discrete()) {
    reverse_discrete(cfg, out_dir, log);
  } else {
    reverse_continuous(cfg, out_dir, log);
  }
}

bool cmd_verify(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  const std::uint64_t seed = require_seed(cfg, "verify");
  if (cfg.n_paths == 0) throw Error(ErrorKind::Config, "n_paths must be positive");
  if (!cfg.spec.space.is_discrete()) {
    throw Error(ErrorKind::Config, "verify supports finite and lattice state spaces");
  }
  prepare_dir(out_dir);
  const ProcessSpec& spec = cfg.spec;
  const FiniteChain chain = finite_chain(spec);
  const double T = spec.horizon;
  const std::vector<double> edges = verify_time_edges(cfg.verify, T);
  const BackwardCharacteristics bc = backward_at_bin_midpoints(spec, edges, cfg.tolerances.absolute_continuity);

  const SimulationOptions so = simulation_options(cfg, cfg.n_paths, seed);
  const PathEnsemble ens = simulate_forward(spec, so);
  const IntensityEstimate est =
      estimate_backward_intensity(ens, edges, Binning::states(chain.states), so.threads);
  const ReversalReport report = compare_reversal(est, T, bc, cfg.verify);

  const int dim = spec.space.dimension();
  const PointLocator& states = *chain.states;
  CsvWriter ie(join(out_dir, "intensity_estimate.csv"));
  ie.header(concat(concat({"s_lo", "s_hi"}, coord_columns("from", dim)),
                   concat(coord_columns("to", dim), {"count", "occupation", "rate", "standard_error"})));
  for (std::size_t k = 0; k < est.time_bins(); ++k) {
    for (std::size_t a = 0; a < states.size(); ++a) {
      for (std::size_t b = 0; b < states.size(); ++b) {
        const double c = est.counts[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (a == b || c == 0.0) continue;
        std::vector<double> row{edges[k], edges[k + 1]};
        append(row, states[a]);
        append(row, states[b]);
        row.push_back(c);
        row.push_back(est.occupation[k][static_cast<Eigen::Index>(a)]);
        row.push_back(est.rate(k, a, b));
        row.push_back(est.standard_error(k, a, b));
        ie.row(row);
      }
    }
  }
  ie.close();

  CsvWriter rr(join(out_dir, "reversal_report.csv"));
  rr.header(concat(concat({"s_lo", "s_hi", "t"}, coord_columns("from", dim)),
                   concat(coord_columns("to", dim), {"empirical", "theoretical", "standard_error", "z", "count",
                                                      "expected", "occupation", "usable"})));
  for (const auto& c : report.cells) {
    if (c.count == 0.0 && c.theoretical == 0.0) continue;
    std::vector<double> row{edges[c.time_bin], edges[c.time_bin + 1], c.forward_time};
    append(row, states[c.from]);
    append(row, states[c.to]);
    for (double v : {c.empirical, c.theoretical, c.standard_error, c.z, c.count, c.expected, c.occupation}) {
      row.push_back(v);
    }
    row.push_back(c.usable ? 1.0 : 0.0);
    rr.row(row);
  }
  rr.close();

  log << "verify: " << report.usable << " usable cells, " << format_number(report.within_3sigma)
      << " within 3 sigma, " << format_number(report.within_4sigma) << " within 4 sigma";
  if (report.worst) log << ", worst |z| " << format_number(std::abs(report.worst->z));
  log << '\n';
  log << "VERDICT: " << (report.pass ? "PASS" : "FAIL") << '\n';
  return report.pass;
}

void cmd_entropy(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  if (!cfg.tilt) throw Error(ErrorKind::Config, "entropy needs run.tilt");
  if (cfg.entropy.grid_intervals < 2 || cfg.entropy.grid_intervals % 2 != 0) {
    throw Error(ErrorKind::Config, "entropy.grid_intervals must be even and >= 2");
  }
  prepare_dir(out_dir);
  const ProcessSpec& ref = cfg.spec;
  const TiltFunction tilt = parse_tilt(*cfg.tilt, cfg.params, ref.space.dimension());
  const ProcessSpec tilted = tilt_process(ref, tilt);

  const int n = cfg.entropy.grid_intervals;
  std::vector<double> grid(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) grid[static_cast<std::size_t>(i)] = ref.horizon * i / n;
  grid.back() = ref.horizon;
  const MarginalFlow marg = marginals_for(cfg, tilted, grid, "entropy");
  const EntropyReport rep = relative_entropy(ref, tilt, marg, cfg.entropy.initial_term);

  CsvWriter csv(join(out_dir, "entropy.csv"));
  csv.header({"initial_term", "running_term", "total", "quadrature_error", "divergent"});
  csv.row({rep.initial_term, rep.running_term, rep.total, rep.error, rep.divergent ? 1.0 : 0.0});
  csv.close();
  log << "entropy: running term " << format_number(rep.running_term) << " +- " << format_number(rep.error)
      << ", total " << format_number(rep.total) << '\n';

  if (cfg.entropy.mc_paths > 0) {
    const std::uint64_t seed = require_seed(cfg, "entropy (Monte Carlo)");
    const PathEnsemble ens = simulate_forward(tilted, simulation_options(cfg, cfg.entropy.mc_paths, seed));
    double sum = 0.0, sum2 = 0.0;
    for (const auto& path : ens.paths) {
      const double l = path_log_likelihood(ref, tilt, path);
      sum += l;
      sum2 += l * l;
    }
    const auto m = static_cast<double>(ens.paths.size());
    const double mean = sum / m;
    const double var = m > 1 ? std::max(0.0, (sum2 - m * mean * mean) / (m - 1)) : 0.0;
    const double se = std::sqrt(var / m);
    CsvWriter mc(join(out_dir, "entropy_mc.csv"));
    mc.header({"n_paths", "mean_log_likelihood", "standard_error", "quadrature_running_term", "z"});
    mc.row({m, mean, se, rep.running_term, se > 0.0 ? (mean - rep.running_term) / se : 0.0});
    mc.close();
    log << "entropy: pathwise mean " << format_number(mean) << " +- " << format_number(se) << '\n';
  }
  if (rep.divergent) throw Error(ErrorKind::DivergentEntropy, "relative entropy is infinite");
}

// ---------------------------------------------------------------------------

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    return is_mathematical(err->kind()) ? kExitMath : kExitConfig;
  }
  if (dynamic_cast<const nlohmann::json::exception*>(&e) != nullptr) return kExitConfig;
  return kExitInternal;
}

int run_command(const std::string& name, const RunConfig& cfg, const std::string& out_dir, std::ostream& log,
                std::ostream& err) {
  try {
    if (name == "simulate") {
      cmd_simulate(cfg, out_dir, log);
    } else if (name == "marginals") {
      cmd_marginals(cfg, out_dir, log);
    } else if (name == "reverse") {
      cmd_reverse(cfg, out_dir, log);
    } else if (name == "verify") {
      if (!cmd_verify(cfg, out_dir, log)) return kExitVerifyFail;
    } else if (name == "entropy") {
      cmd_entropy(cfg, out_dir, log);
    } else {
      throw Error(ErrorKind::Config, "unknown command '" + name + "'");
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitOk;
}

int run_pipeline(const RunConfig& cfg, const std::string& out_dir, std::ostream& log, std::ostream& err) {
  if (cfg.pipeline.empty()) {
    err << "error: Config: '" << cfg.name << "' has no run.pipeline\n";
    return kExitConfig;
  }
  for (const auto& step : cfg.pipeline) {
    const int code = run_command(step, cfg, out_dir, log, err);
    if (code != kExitOk) return code;
  }
  return kExitOk;
}

}  // namespace jumprev
