#pragma once

namespace cbo {

/// Library version, reported by the CLI and embedded in run manifests.
inline constexpr const char* kVersion = "0.1.0";

}  // namespace cbo
