#pragma once

namespace casecross {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace casecross
