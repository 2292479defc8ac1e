#pragma once

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "snnbench/network.hpp"

namespace snnbench {

// Binary layout (little-endian):
//   "SNNBCKPT"  8 bytes magic
//   u32         format version
//   u32         readout mode, u32 surrogate kind, f64 surrogate slope
//   u32         layer count, then per layer:
//                 u8 spiking, u8 recurrent, u8 refractory_subtract,
//                 f64 alpha_syn, alpha_mem, v_th, w, v (if recurrent)
//   u8          score readout present, then the matrix
// Matrices are u64 rows, u64 cols, then f64 data row-major.
// Metadata goes to a JSON sidecar at `<path>.json`.
inline constexpr char kCheckpointMagic[8] = {'S', 'N', 'N', 'B', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Network net;
  nlohmann::json meta;
};

std::filesystem::path sidecar_path(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const Network& net, const nlohmann::json& meta = {});

// Throws std::runtime_error on bad magic, unknown version, truncation or a missing sidecar.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace snnbench
