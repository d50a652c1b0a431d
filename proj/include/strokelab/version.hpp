#pragma once

#define STROKELAB_VERSION_MAJOR 0
#define STROKELAB_VERSION_MINOR 1
#define STROKELAB_VERSION_PATCH 0

namespace strokelab {

inline constexpr const char* version() { return "0.1.0"; }

} // namespace strokelab
