#pragma once

// Command-line front end: `mzk <subcommand> [flags]`.

#include <iosfwd>
#include <string>
#include <vector>

namespace mzk::cli {

inline constexpr const char* kVersion = "1.0.0";

std::string usage();

/// Runs one subcommand. Returns 0 on success, 1 on a library error (with an
/// error JSON on `err`), 2 on usage errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mzk::cli
