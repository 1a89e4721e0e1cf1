#pragma once

#include <filesystem>

#include "cppf/model.hpp"

namespace cppf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Flat binary archive: magic "CPPFCKPT", format version, the model config
/// as JSON, the optimizer version counter, then every parameter as
/// (name, rows, cols, column-major little-endian doubles).
void save_checkpoint(const std::filesystem::path& path, const MaskedLm& model);
MaskedLm load_checkpoint(const std::filesystem::path& path);

}  // namespace cppf
