#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sqkd::cli {

enum ExitCode : int { ok = 0, usage_error = 1, domain_error = 2, io_error = 3 };

/// Runs one subcommand (simulate | keyrate | threshold | sweep). `args`
/// excludes the program name. Failures print a single `error: <kind>: <msg>`
/// line to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Inclusive p grid min, min + step, ... up to max (within 1e-9 of a step).
std::vector<double> p_grid(double p_min, double p_max, double p_step);

}  // namespace sqkd::cli
