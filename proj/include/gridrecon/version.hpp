#pragma once

namespace gridrecon {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace gridrecon
