#pragma once

namespace bcf {
inline constexpr const char* kVersion = "1.0.0";
}
