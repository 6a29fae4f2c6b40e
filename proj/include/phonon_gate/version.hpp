#pragma once

namespace phonon_gate {
inline constexpr const char* kVersion = "0.1.0";
}  // namespace phonon_gate
