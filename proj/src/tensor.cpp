// SPDX-License-Identifier: Apache-2.0
#include "mx/tensor.hpp"

#include <string>

#include "mx/errors.hpp"

namespace mx {

namespace {

int64_t product(const std::vector<int64_t>& dims, size_t from, size_t to) {
  int64_t p = 1;
  for (size_t i = from; i < to; ++i) p *= dims[i];
  return p;
}

void check_axis(const std::vector<int64_t>& shape, int axis) {
  if (axis < 0 || axis >= static_cast<int>(shape.size()))
    throw AxisMismatch("axis " + std::to_string(axis) + " out of range for rank " +
                       std::to_string(shape.size()));
}

}  // namespace

void validate_shape(const std::vector<int64_t>& shape) {
  if (shape.empty() || shape.size() > 4)
    throw RankError("rank " + std::to_string(shape.size()) + " unsupported (want 1..4)");
  for (int64_t d : shape)
    if (d < 1) throw ShapeMismatch("dimension " + std::to_string(d) + " < 1");
}

Fp32Tensor::Fp32Tensor(std::vector<int64_t> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  // Zero-size dims are representable in the container; quantization and
  // GEMM reject them via validate_shape at their own entry points.
  if (shape.empty() || shape.size() > 4)
    throw RankError("rank " + std::to_string(shape.size()) + " unsupported (want 1..4)");
  for (int64_t d : shape)
    if (d < 0) throw ShapeMismatch("negative dimension " + std::to_string(d));
  if (numel() != static_cast<int64_t>(data.size()))
    throw LengthMismatch("tensor data has " + std::to_string(data.size()) +
                         " values, shape wants " + std::to_string(numel()));
}

Fp32Tensor Fp32Tensor::zeros(std::vector<int64_t> shape) {
  validate_shape(shape);
  int64_t n = product(shape, 0, shape.size());
  return Fp32Tensor(std::move(shape), std::vector<float>(static_cast<size_t>(n), 0.0f));
}

int64_t Fp32Tensor::numel() const { return product(shape, 0, shape.size()); }

int64_t MxTensor::numel() const { return product(shape, 0, shape.size()); }

int64_t MxTensor::outer() const { return product(shape, 0, static_cast<size_t>(axis)); }

int64_t MxTensor::inner() const {
  return product(shape, static_cast<size_t>(axis) + 1, shape.size());
}

int64_t MxTensor::blocks_per_line() const {
  int64_t k = cfg.block_size;
  return (axis_dim() + k - 1) / k;
}

int64_t MxTensor::num_blocks() const { return outer() * blocks_per_line() * inner(); }

MxTensor quantize_tensor(const Fp32Tensor& t, int axis, const QuantConfig& cfg,
                         QuantStats* stats) {
  validate_shape(t.shape);
  check_axis(t.shape, axis);
  if (cfg.block_size < 1)
    throw BlockSizeMismatch("block_size " + std::to_string(cfg.block_size) + " < 1");

  MxTensor q;
  q.shape = t.shape;
  q.axis = axis;
  q.cfg = cfg;
  const int64_t k = cfg.block_size;
  const int64_t D = q.axis_dim();
  const int64_t outer = q.outer();
  const int64_t inner = q.inner();
  const int64_t bpl = q.blocks_per_line();
  q.scales.resize(static_cast<size_t>(q.num_blocks()));
  q.codes.resize(static_cast<size_t>(q.num_blocks() * k));

  std::vector<float> lanes(static_cast<size_t>(k));
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t b = 0; b < bpl; ++b) {
      for (int64_t i = 0; i < inner; ++i) {
        for (int64_t j = 0; j < k; ++j) {
          int64_t d = b * k + j;
          // Zero padding never wins the max, so it cannot perturb the scale.
          lanes[static_cast<size_t>(j)] =
              d < D ? t.data[static_cast<size_t>((o * D + d) * inner + i)] : 0.0f;
        }
        MxBlock blk = quantize_block(lanes, cfg, stats);
        int64_t B = (o * bpl + b) * inner + i;
        q.scales[static_cast<size_t>(B)] = blk.scale.code;
        std::copy(blk.codes.begin(), blk.codes.end(),
                  q.codes.begin() + static_cast<ptrdiff_t>(B * k));
      }
    }
  }
  return q;
}

Fp32Tensor dequantize_tensor(const MxTensor& t) {
  validate_shape(t.shape);
  check_axis(t.shape, t.axis);
  Fp32Tensor out = Fp32Tensor::zeros(t.shape);
  const int64_t k = t.cfg.block_size;
  const int64_t D = t.axis_dim();
  const int64_t outer = t.outer();
  const int64_t inner = t.inner();
  const int64_t bpl = t.blocks_per_line();
  if (static_cast<int64_t>(t.scales.size()) != t.num_blocks() ||
      static_cast<int64_t>(t.codes.size()) != t.num_blocks() * k)
    throw LengthMismatch("quantized tensor payload does not match its geometry");

  MxBlock blk;
  blk.fmt = t.cfg.element_fmt;
  blk.codes.resize(static_cast<size_t>(k));
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t b = 0; b < bpl; ++b) {
      for (int64_t i = 0; i < inner; ++i) {
        int64_t B = (o * bpl + b) * inner + i;
        blk.scale.code = t.scales[static_cast<size_t>(B)];
        std::copy_n(t.codes.begin() + static_cast<ptrdiff_t>(B * k), k, blk.codes.begin());
        std::vector<float> lanes = dequantize_block(blk);
        for (int64_t j = 0; j < k; ++j) {
          int64_t d = b * k + j;
          if (d < D)
            out.data[static_cast<size_t>((o * D + d) * inner + i)] =
                lanes[static_cast<size_t>(j)];
        }
      }
    }
  }
  return out;
}

Fp32Tensor transpose_2d(const Fp32Tensor& t) {
  if (t.rank() != 2)
    throw RankError("transpose_2d wants rank 2, got " + std::to_string(t.rank()));
  const int64_t rows = t.shape[0], cols = t.shape[1];
  Fp32Tensor out = Fp32Tensor::zeros({cols, rows});
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < cols; ++c)
      out.at(c, r) = t.at(r, c);
  return out;
}

}  // namespace mx
