#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dbt::cli {

/// Exit codes of the dbt command.
enum Exit : int {
    success = 0,
    mission_failed = 1,
    invalid_input = 2, ///< tree or scenario failed validation, or bad arguments
    runtime_error = 3, ///< includes running out of cycles
};

/// `dbt` without the program name: validate, run, team or serve. The event
/// log goes to `out`; errors are JSON objects on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dbt::cli
