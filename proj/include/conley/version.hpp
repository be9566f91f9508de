#pragma once

namespace conley {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace conley
