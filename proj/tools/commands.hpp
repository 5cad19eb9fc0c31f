#pragma once

namespace bioexp::cli {

// Parses argv, dispatches to a subcommand, and maps exceptions to the exit
// contract: 0 success, 1 input error, 2 numerical-consistency failure.
int run(int argc, char** argv);

}  // namespace bioexp::cli
