#pragma once

namespace sutrack {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sutrack
