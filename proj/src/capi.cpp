// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include "jumprev/jumprev.h"

#include <cstring>
#include <iostream>
#include <memory>
#include <string>

#include "jumprev/commands.hpp"
#include "jumprev/config.hpp"
#include "jumprev/errors.hpp"
#include "jumprev/simulate.hpp"
#include "jumprev/trajectory.hpp"

struct jr_config {
  jumprev::RunConfig cfg;
};

struct jr_ensemble {
  jumprev::PathEnsemble ensemble;
};

namespace {

thread_local jr_status g_status = JR_OK;
thread_local std::string g_message;

jr_status fail(jr_status s, const std::string& message) {
  g_status = s;
  g_message = message;
  return s;
}

jr_status ok() {
  g_status = JR_OK;
  g_message.clear();
  return JR_OK;
}

template <class F>
jr_status guarded(F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return fail(static_cast<jr_status>(jumprev::exit_code_for(e)), e.what());
  } catch (...) {
    return fail(JR_ERROR, "unknown error");
  }
}

jr_status from_exit(int code, const char* what) {
  if (code == 0) return ok();
  return fail(static_cast<jr_status>(code), std::string(what) + " failed (see stderr)");
}

jr_status run(const jr_config* cfg, const char* out_dir, const char* command) {
  if (cfg == nullptr || out_dir == nullptr) return fail(JR_CONFIG_ERROR, "null argument");
  return from_exit(jumprev::run_command(command, cfg->cfg, out_dir, std::cout, std::cerr), command);
}

jr_status make_config(jumprev::RunConfig cfg, jr_config** out) {
  *out = new jr_config{std::move(cfg)};
  return ok();
}

}  // namespace

extern "C" {

jr_status jr_last_error(void) { return g_status; }
const char* jr_last_message(void) { return g_message.c_str(); }
const char* jr_version(void) { return "0.1.0"; }

jr_status jr_config_from_file(const char* path, jr_config** out) {
  if (path == nullptr || out == nullptr) return fail(JR_CONFIG_ERROR, "null argument");
  return guarded([&] { return make_config(jumprev::load_config_file(path), out); });
}

jr_status jr_config_from_string(const char* text, jr_config** out) {
  if (text == nullptr || out == nullptr) return fail(JR_CONFIG_ERROR, "null argument");
  return guarded([&] { return make_config(jumprev::parse_config(text), out); });
}

jr_status jr_config_from_demo(const char* name, jr_config** out) {
  if (name == nullptr || out == nullptr) return fail(JR_CONFIG_ERROR, "null argument");
  return guarded([&] { return make_config(jumprev::load_demo(name), out); });
}

jr_status jr_config_set_seed(jr_config* cfg, uint64_t seed) {
  if (cfg == nullptr) return fail(JR_CONFIG_ERROR, "null config");
  cfg->cfg.seed = seed;
  return ok();
}

jr_status jr_config_set_threads(jr_config* cfg, int threads) {
  if (cfg == nullptr) return fail(JR_CONFIG_ERROR, "null config");
  if (threads < 0) return fail(JR_CONFIG_ERROR, "threads must be >= 0");
  cfg->cfg.threads = threads;
  return ok();
}

jr_status jr_config_set_n_paths(jr_config* cfg, size_t n_paths) {
  if (cfg == nullptr) return fail(JR_CONFIG_ERROR, "null config");
  cfg->cfg.n_paths = n_paths;
  return ok();
}

void jr_config_free(jr_config* cfg) { delete cfg; }

size_t jr_demo_count(void) { return jumprev::demo_names().size(); }

const char* jr_demo_name(size_t index) {
  static const std::vector<std::string> names = jumprev::demo_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

jr_status jr_run_simulate(const jr_config* cfg, const char* out_dir) { return run(cfg, out_dir, "simulate"); }
jr_status jr_run_marginals(const jr_config* cfg, const char* out_dir) { return run(cfg, out_dir, "marginals"); }
jr_status jr_run_reverse(const jr_config* cfg, const char* out_dir) { return run(cfg, out_dir, "reverse"); }
jr_status jr_run_verify(const jr_config* cfg, const char* out_dir) { return run(cfg, out_dir, "verify"); }
jr_status jr_run_entropy(const jr_config* cfg, const char* out_dir) { return run(cfg, out_dir, "entropy"); }

jr_status jr_run_demo(const jr_config* cfg, const char* out_dir) {
  if (cfg == nullptr || out_dir == nullptr) return fail(JR_CONFIG_ERROR, "null argument");
  return from_exit(jumprev::run_pipeline(cfg->cfg, out_dir, std::cout, std::cerr), "pipeline");
}

jr_status jr_ensemble_simulate(const jr_config* cfg, jr_ensemble** out) {
  if (cfg == nullptr || out == nullptr) return fail(JR_CONFIG_ERROR, "null argument");
  return guarded([&] {
    if (!cfg->cfg.seed) throw jumprev::Error(jumprev::ErrorKind::Config, "simulation needs a seed");
    jumprev::SimulationOptions o;
    o.n_paths = cfg->cfg.n_paths;
    o.seed = *cfg->cfg.seed;
    o.epsilon = cfg->cfg.epsilon;
    o.ode_steps = cfg->cfg.ode_steps;
    o.max_jumps = cfg->cfg.max_jumps;
    o.box_margin = cfg->cfg.box_margin;
    o.threads = jumprev::resolve_threads(cfg->cfg.threads);
    *out = new jr_ensemble{jumprev::simulate_forward(cfg->cfg.spec, o)};
    return ok();
  });
}

jr_status jr_ensemble_read(const jr_config* cfg, const char* path, jr_ensemble** out) {
  if (cfg == nullptr || path == nullptr || out == nullptr) return fail(JR_CONFIG_ERROR, "null argument");
  return guarded([&] {
    const auto& spec = cfg->cfg.spec;
    auto flow = std::make_shared<const jumprev::DriftFlow>(jumprev::effective_drift(spec, cfg->cfg.epsilon),
                                                           spec.horizon / cfg->cfg.ode_steps);
    auto r = jumprev::read_ensemble_jsonl(path, spec.fingerprint(), flow);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    *out = new jr_ensemble{std::move(r.ensemble)};
    return ok();
  });
}

jr_status jr_ensemble_write(const jr_ensemble* ens, const char* path) {
  if (ens == nullptr || path == nullptr) return fail(JR_CONFIG_ERROR, "null argument");
  return guarded([&] {
    jumprev::write_ensemble_jsonl(ens->ensemble, path);
    return ok();
  });
}

jr_status jr_ensemble_reverse(const jr_ensemble* ens, jr_ensemble** out) {
  if (ens == nullptr || out == nullptr) return fail(JR_CONFIG_ERROR, "null argument");
  return guarded([&] {
    *out = new jr_ensemble{ens->ensemble.reversed()};
    return ok();
  });
}

size_t jr_ensemble_size(const jr_ensemble* ens) { return ens ? ens->ensemble.paths.size() : 0; }

int jr_ensemble_dimension(const jr_ensemble* ens) {
  return ens && !ens->ensemble.paths.empty() ? ens->ensemble.paths.front().dimension() : 0;
}

jr_status jr_ensemble_state_at(const jr_ensemble* ens, size_t index, double t, double* out) {
  if (ens == nullptr || out == nullptr) return fail(JR_CONFIG_ERROR, "null argument");
  if (index >= ens->ensemble.paths.size()) return fail(JR_CONFIG_ERROR, "path index out of range");
  return guarded([&] {
    const jumprev::Point x = ens->ensemble.paths[index].state_at(t);
    std::memcpy(out, x.data(), sizeof(double) * static_cast<std::size_t>(x.size()));
    return ok();
  });
}

void jr_ensemble_free(jr_ensemble* ens) { delete ens; }

double jr_entropy_h(double a) { return jumprev::entropy_h(a); }
double jr_young_theta(double a) { return jumprev::young_theta(a); }

}  // extern "C"
