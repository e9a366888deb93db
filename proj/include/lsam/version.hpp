#pragma once

namespace lsam {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lsam
