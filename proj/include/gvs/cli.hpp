#pragma once

#include <iosfwd>

namespace gvs {

/// Entry point of the `gvs` command-line tool. Human-readable output goes
/// to `out`, diagnostics to `err`. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gvs
