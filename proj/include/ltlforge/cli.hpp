// ltlforge/cli.hpp — the ltlforge command-line driver.
//
// Subcommands: gen-formulas, stats, train, eval, inspect, plot-data.
// Exit codes: 0 success, 2 usage error, 3 malformed config, 4 missing
// file/dataset, 5 runtime failure.

#pragma once

#include <string>
#include <vector>

namespace ltlforge {

int run_cli(const std::vector<std::string>& args);

}  // namespace ltlforge
