#pragma once

namespace trialmatch {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace trialmatch
