#pragma once

namespace evidfuse {

inline constexpr const char* kVersion = "0.1.0";

} // namespace evidfuse
