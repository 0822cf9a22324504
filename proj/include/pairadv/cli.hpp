#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace pairadv {

// Entry point of the `pairadv` tool. Subcommands: synth, curate, judge,
// matrix, train, oracle, report. Returns 0 on success, 1 after printing
// "error: <Category>: <message>" to `err` for library errors, and 2 on
// command-line usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Convenience for tests: args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pairadv
