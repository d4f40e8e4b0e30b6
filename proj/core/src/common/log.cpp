#include "trialmatch/common/log.h"

#include <cstdlib>
#include <spdlog/sinks/stdout_sinks.h>

namespace trialmatch {

spdlog::logger& log() {
  static const std::shared_ptr<spdlog::logger> kLogger = [] {
    auto l = spdlog::stderr_logger_mt("trialmatch");
    l->set_pattern("[%l] %v");
    const char* level = std::getenv("TRIALMATCH_LOG_LEVEL");
    l->set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
    return l;
  }();
  return *kLogger;
}

}  // namespace trialmatch
