#ifndef LNM_LOG_HPP
#define LNM_LOG_HPP

namespace lnm {

/// Sets the spdlog level from the LNM_LOG environment variable
/// (trace, debug, info, warn, error, off). Defaults to warn.
void init_logging();

}  // namespace lnm

#endif
