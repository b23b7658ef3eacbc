#pragma once

namespace cooplsvi {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cooplsvi
