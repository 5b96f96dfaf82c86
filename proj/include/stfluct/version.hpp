#pragma once

namespace stfluct {

inline constexpr const char* kVersion = "0.1.0";

} // namespace stfluct
