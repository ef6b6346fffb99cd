// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mx/tensor.hpp"

namespace mx {

// Binary container formats, both little-endian.
//
// F32T (raw FP32 tensor):
//   magic "F32T" | u16 version (=1) | u8 rank | u32 dims[rank] | f32 payload
//
// MXT1 (quantized tensor):
//   magic "MXT1" | u16 version (=1) | u8 element_fmt | u8 rounding |
//   u16 block_size | u8 axis | u8 rank | u32 dims[rank] |
//   u8 scales[num_blocks] | u8 codes[num_blocks * block_size]
// Element codes are stored one per byte with the low total_bits significant;
// high bits are masked off on read. Padding lanes are stored (as zero codes)
// so the payload length is exactly num_blocks * block_size.
//
// Parsers validate every field before allocating and throw BadMagic,
// UnsupportedVersion, CorruptLength or FormatError (naming the offending
// field) on malformed input; they never crash on arbitrary bytes.

std::vector<uint8_t> serialize_f32(const Fp32Tensor& t);
Fp32Tensor parse_f32(std::span<const uint8_t> bytes);

std::vector<uint8_t> serialize_mxt(const MxTensor& t);
MxTensor parse_mxt(std::span<const uint8_t> bytes);

// File wrappers; throw IoError when the file cannot be read or written.
void write_f32_file(const std::string& path, const Fp32Tensor& t);
Fp32Tensor read_f32_file(const std::string& path);
void write_mxt_file(const std::string& path, const MxTensor& t);
MxTensor read_mxt_file(const std::string& path);

}  // namespace mx
