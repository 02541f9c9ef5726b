#pragma once

namespace smalldev {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace smalldev
