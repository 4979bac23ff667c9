#pragma once

#include <string>

#include "iifcn/model.hpp"

namespace iifcn {

// Single-file binary format: magic "IIFCN1", the model configuration, a
// parameter table of (name, shape, raw little-endian doubles), and a
// trailing FNV-1a 64-bit checksum over everything between magic and
// checksum. Corruption, truncation, and shape/name mismatches raise
// std::invalid_argument.
void save_checkpoint(const Model& model, const std::string& path);

// Reads the stored configuration, builds the model, fills its parameters.
Model load_checkpoint(const std::string& path);

// Fills an existing model; its configuration must match the file.
void load_into(Model& model, const std::string& path);

} // namespace iifcn
