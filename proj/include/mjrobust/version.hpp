#pragma once

namespace mjrobust {
inline constexpr const char* kVersion = "0.1.0";
}
