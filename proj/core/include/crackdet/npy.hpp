#pragma once

#include <filesystem>

#include "crackdet/tensor.hpp"

namespace crackdet {

// Minimal .npy (format version 1.0) support for little-endian float32
// C-order arrays; the portable container for CAM fields and fused scans.
void write_npy(const std::filesystem::path& path, const Tensor& t);
Tensor read_npy(const std::filesystem::path& path);

}  // namespace crackdet
