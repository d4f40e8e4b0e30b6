#pragma once

#include <spdlog/spdlog.h>

namespace trialmatch {

// Library logger: "trialmatch", writes to stderr so command output on stdout
// stays machine-readable. Level follows TRIALMATCH_LOG_LEVEL (default warn).
spdlog::logger& log();

}  // namespace trialmatch
