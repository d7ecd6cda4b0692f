#pragma once

namespace fracsmooth {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fracsmooth
