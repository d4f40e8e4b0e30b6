#pragma once

#include <ostream>

namespace trialmatch::service {

// The `trialmatch` command line. Returns the process exit code: 0 on
// success, 1 on a pipeline error (message on `err`), 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace trialmatch::service
