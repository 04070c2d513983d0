// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

// Pipeline commands behind the CLI.  Each writes its files into an output
// directory and logs to a stream; all outputs are deterministic given the
// configuration (including the seed) and independent of the thread count.

#pragma once

#include <exception>
#include <ostream>
#include <string>

#include "jumprev/config.hpp"

namespace jumprev {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitMath = 3,
  kExitVerifyFail = 4,
};

/// ensemble.jsonl, summary.csv and, for Levy kernels, levy_reverse.json.
void cmd_simulate(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

/// marginals.csv: oracle probability vectors on discrete spaces, binned
/// empirical marginals of a simulated ensemble on continuous spaces.
void cmd_marginals(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

/// backward_kernel.csv, backward_drift.csv, absolute_continuity.csv and
/// reversibility.csv (discrete spaces) or backward_kernel_binned.csv
/// (continuous spaces).  The reports are written before an
/// AbsoluteContinuityViolation is raised.
void cmd_reverse(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

/// intensity_estimate.csv and reversal_report.csv; prints the verdict line.
/// Returns true on PASS.
bool cmd_verify(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

/// entropy.csv and, when entropy.mc_paths > 0, entropy_mc.csv.
void cmd_entropy(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

/// Runs one command by name and maps failures to exit codes (messages go to
/// `err`).  Names: simulate, marginals, reverse, verify, entropy.
int run_command(const std::string& name, const RunConfig& cfg, const std::string& out_dir, std::ostream& log,
                std::ostream& err);

/// Runs the configuration's pipeline in order, stopping at the first
/// nonzero exit code.
int run_pipeline(const RunConfig& cfg, const std::string& out_dir, std::ostream& log, std::ostream& err);

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

}  // namespace jumprev
