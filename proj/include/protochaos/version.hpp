#pragma once

namespace protochaos {

inline constexpr const char* kVersion = "protochaos 0.1.0";

}  // namespace protochaos
