#ifndef LNM_VERSION_HPP
#define LNM_VERSION_HPP

namespace lnm {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kSchemaVersion = "1.0.0";

}  // namespace lnm

#endif
