// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "mx/block.hpp"

namespace mx {

// Dense row-major FP32 tensor, rank 1 to 4.
struct Fp32Tensor {
  std::vector<int64_t> shape;
  std::vector<float> data;

  Fp32Tensor() = default;
  Fp32Tensor(std::vector<int64_t> shape_, std::vector<float> data_);
  static Fp32Tensor zeros(std::vector<int64_t> shape);

  int rank() const { return static_cast<int>(shape.size()); }
  int64_t numel() const;

  // rank-2 accessors
  float& at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * shape[1] + c)]; }
  float at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * shape[1] + c)]; }
};

// Block-quantized tensor. Blocks of cfg.block_size lanes run along `axis`;
// the final block of each line is zero-padded when the axis length is not a
// multiple of the block size. With outer = product of dims before the axis,
// D = shape[axis], inner = product of dims after, and bpl = ceil(D/k):
//   block (o, b, i)   lives at index (o*bpl + b)*inner + i,
//   lane j of that block maps to flat element (o*D + b*k + j)*inner + i.
// scales holds one byte per block; codes holds block_size bytes per block
// (one element code each, padding included).
struct MxTensor {
  std::vector<int64_t> shape;
  int axis = 0;
  QuantConfig cfg;
  std::vector<uint8_t> scales;
  std::vector<uint8_t> codes;

  int rank() const { return static_cast<int>(shape.size()); }
  int64_t numel() const;
  int64_t axis_dim() const { return shape[static_cast<size_t>(axis)]; }
  int64_t outer() const;
  int64_t inner() const;
  int64_t blocks_per_line() const;
  int64_t num_blocks() const;
};

void validate_shape(const std::vector<int64_t>& shape);  // rank 1..4, dims >= 1

MxTensor quantize_tensor(const Fp32Tensor& t, int axis, const QuantConfig& cfg,
                         QuantStats* stats = nullptr);
Fp32Tensor dequantize_tensor(const MxTensor& t);

// rank-2 only
Fp32Tensor transpose_2d(const Fp32Tensor& t);

}  // namespace mx
