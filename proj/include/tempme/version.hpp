#pragma once

namespace tempme {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kGraphFormatVersion = 1;

}  // namespace tempme
