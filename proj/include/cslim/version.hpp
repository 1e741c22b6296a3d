#pragma once

namespace cslim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cslim
