#pragma once

#include <filesystem>
#include <string>

#include "ironbench/taskheads.hpp"

namespace ironbench {

// Layout: "IBCKPT01", u64 little-endian header length, JSON header (config,
// head, step, tensor names/shapes/offsets), then raw little-endian doubles.
void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

std::string serialize_checkpoint(const Model& model);
Model deserialize_checkpoint(const std::string& bytes);

}  // namespace ironbench
