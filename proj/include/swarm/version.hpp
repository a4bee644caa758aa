#pragma once

namespace swarm {
inline constexpr const char* kVersion = "0.1.0";
}
