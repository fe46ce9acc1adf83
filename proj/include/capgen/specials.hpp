#pragma once

#include <cstdint>

namespace capgen {

// Reserved vocabulary ids. The vocab file stores them as its first four lines.
inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kStartId = 1;
inline constexpr std::int32_t kEndId = 2;
inline constexpr std::int32_t kUnkId = 3;
inline constexpr std::int32_t kNumSpecials = 4;

inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kStartToken = "<start>";
inline constexpr const char* kEndToken = "<end>";
inline constexpr const char* kUnkToken = "<unk>";

}  // namespace capgen
