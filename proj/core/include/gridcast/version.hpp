#pragma once

namespace gridcast {

inline constexpr const char* kVersion = "0.1.0";

} // namespace gridcast
