#pragma once

// MZKV1 checkpoint files.
//
// Layout: the 5 magic bytes "MZKV1", then little-endian u32 nx, u32 ny,
// f64 L, f64 t, then row-major arrays E1 (re, im interleaved), E2, n, vx, vy.

#include <filesystem>
#include <vector>

#include "mzk/fields.hpp"

namespace mzk::checkpoint {

std::vector<unsigned char> encode(const SystemState& s);
SystemState decode(const std::vector<unsigned char>& bytes);

void write(const std::filesystem::path& path, const SystemState& s);
SystemState read(const std::filesystem::path& path);

/// All *.mzk files in `dir`, sorted by their stored time.
std::vector<SystemState> read_directory(const std::filesystem::path& dir);

}  // namespace mzk::checkpoint
