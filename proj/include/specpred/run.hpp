#pragma once

#include "specpred/io.hpp"

#include <iosfwd>

namespace specpred {

enum class LogLevel { quiet, info, debug };

// quiet | info | debug, or 0 | 1 | 2; unset or empty means info.
LogLevel parse_log_level(const char* text);

// Checks the subcommand, required inputs, that input paths exist, and sweep axes for `sweep`.
void validate_run_config(const RunConfig& c);

// The small-gain test triple: A = diag(-1, -2), C = 10 I, r = 0.5, eps = 0.015, M_lambda = lambda = 1.
Lemma2Problem default_lemma2_problem();

// Runs one subcommand. Returns 0 when every requested check passes, 1 when a
// check fails and 2 on invalid input or a module error (message written to log).
int run(const RunConfig& c, std::ostream& out, std::ostream& log, LogLevel level = LogLevel::info);

}  // namespace specpred
