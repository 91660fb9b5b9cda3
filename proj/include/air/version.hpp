#pragma once

namespace air {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace air
