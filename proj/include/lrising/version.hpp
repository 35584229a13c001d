#pragma once

namespace lrising {

inline constexpr const char* kCodeVersion = "lrising 0.1.0";
/// Bumped whenever a JSON/JSONL/CSV layout changes.
inline constexpr int kSchemaVersion = 1;

}  // namespace lrising
