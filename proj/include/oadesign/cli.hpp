#pragma once

#include <iosfwd>

namespace oadesign {

enum ExitCode : int
{
    exit_ok = 0,
    exit_check_failed = 1,
    exit_input_error = 2,
    exit_not_converged = 3,
    exit_infeasible = 4
};

/// `oadesigner enumerate|weights|solve|verify|reproduce ...`
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace oadesign
