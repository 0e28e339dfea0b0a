#pragma once

#include <filesystem>
#include <string>

#include "protochaos/model.hpp"

namespace protochaos {

/// Text checkpoint, version-tagged, hexfloat-encoded for bit-exact
/// round-trips:
///
///   protochaos-checkpoint v1
///   dims <out_dim> <in_dim> <has_bias>
///   log_tau <hex> epsilon <hex>
///   <out_dim lines of in_dim weight entries, row-major>
///   <one line of bias entries, when present>
std::string render_checkpoint(const ProjectionHead& head);
ProjectionHead parse_checkpoint(const std::string& text);

void save_checkpoint(const ProjectionHead& head, const std::filesystem::path& path);
ProjectionHead load_checkpoint(const std::filesystem::path& path);

}  // namespace protochaos
