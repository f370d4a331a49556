#pragma once

// Command-line front end: train, evaluate, compare, gen-demand.

#include <iosfwd>

namespace fleetsim {

// Parses argv and runs one subcommand. Returns the process exit code. On
// failure exactly one line `error: <category>: <message>` goes to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fleetsim
