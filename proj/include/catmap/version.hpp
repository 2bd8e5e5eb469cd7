#pragma once

namespace catmap {

inline constexpr const char* kCodeVersion = "0.3.0";
inline constexpr int kSchemaVersion = 1;

} // namespace catmap
