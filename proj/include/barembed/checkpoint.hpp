#pragma once

#include <string>
#include <utility>

#include "barembed/model.hpp"

namespace barembed::train {

// Binary container: magic+version, config header, then named float64 tensors,
// all little-endian. Loading audits tensor names and shapes against the
// header config and fails with VersionMismatch on any disagreement;
// truncation or garbage fails with CorruptCheckpoint.
void save_checkpoint(const model::Parameters& params, const model::ModelConfig& config,
                     const std::string& path);

std::pair<model::Parameters, model::ModelConfig> load_checkpoint(const std::string& path);

} // namespace barembed::train
