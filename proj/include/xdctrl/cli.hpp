#ifndef XDCTRL_CLI_HPP
#define XDCTRL_CLI_HPP

#include <ostream>

namespace xdctrl::cli
{

/// Exit codes of the command-line front end.
enum ExitCode : int
{
    ok = 0,
    verify_failed = 1,
    usage_error = 2,
    numerical_failure = 3
};

/// Subcommands: gen-ring, design, simulate, analyze, bench, verify.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace xdctrl::cli

#endif // XDCTRL_CLI_HPP
