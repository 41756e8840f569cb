#pragma once

namespace qaforge {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qaforge
