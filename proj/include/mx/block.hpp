// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mx/codec.hpp"
#include "mx/formats.hpp"
#include "mx/report.hpp"

namespace mx {

struct QuantConfig {
  ElementFormatId element_fmt = ElementFormatId::INT8;
  int block_size = 32;
  RoundingMode rounding = RoundingMode::RoundHalfToNearestEven;

  friend bool operator==(const QuantConfig&, const QuantConfig&) = default;
};

// One quantized block: a shared power-of-two scale plus one code per lane.
// Lane i decodes to decode_scale(scale) * decode_element(fmt, codes[i]).
struct MxBlock {
  ScaleE8M0 scale;
  ElementFormatId fmt = ElementFormatId::INT8;
  std::vector<uint8_t> codes;

  int size() const { return static_cast<int>(codes.size()); }
};

// Side counters filled during quantization.
struct QuantStats {
  int64_t clamped_lanes = 0;
  int64_t flushed_subnormals = 0;
  int64_t nan_blocks = 0;
};

// floor(log2(max |v|)) - emax of the element format, clamped to [-127, 127].
// All-zero input yields -127. Throws SpecialInput on any non-finite lane and
// LengthMismatch on empty input.
int compute_shared_exp(std::span<const float> values, const ElementFormat& fmt);

// Quantize one block of block_size lanes (throws LengthMismatch otherwise).
// NaN lanes, or Inf lanes when the element format cannot represent Inf,
// poison the whole block: the scale becomes the NaN code and every element
// code is zeroed. Representable Inf lanes are excluded from the max and
// encoded as Inf. FP32-subnormal inputs flush to zero before encoding.
MxBlock quantize_block(std::span<const float> values, const QuantConfig& cfg,
                       QuantStats* stats = nullptr);

// Lane-wise reconstruction; a NaN scale yields NaN in every lane.
std::vector<float> dequantize_block(const MxBlock& block);

// Round-trip error of quantizing `values`, plus the quantizer's counters.
ErrorReport quantization_error(std::span<const float> values, const QuantConfig& cfg);

}  // namespace mx
