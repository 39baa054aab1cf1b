#include "lnm/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace lnm {

void init_logging() {
    auto logger = spdlog::stderr_logger_mt("lnm");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);

    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("LNM_LOG")) {
        level = spdlog::level::from_str(env);
    }
    spdlog::set_level(level);
}

}  // namespace lnm
