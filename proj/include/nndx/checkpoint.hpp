#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nndx/model.hpp"

namespace nndx {

// Little-endian binary layout:
//
//   "NNDX" | u32 version (=1)
//   u32 kind | u64 seed
//   u32 n | u64 widths[n] | u32 n | u64 input_shape[n] | u32 n | u64 conv_channels[n]
//   u32 groups | per group: u32 name_len, name, u8 frozen, u32 tensor_count
//   u32 tensors | per tensor: u32 name_len, name, u8 dtype (1 = f64), u32 rank, u64 dims[rank], f64 values[]
//
// Tensors are listed group by group, in group order.
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint8_t kDtypeF64 = 1;

std::vector<std::uint8_t> encode_checkpoint(const Model& model);
// Throws FormatError on bad magic/version/structure and IoError on truncation.
Model decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace nndx
