#pragma once

namespace qreg {

inline constexpr const char* version = "0.1.0";

}  // namespace qreg
