// SPDX-License-Identifier: Apache-2.0
#include "mx/block.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mx/errors.hpp"

namespace mx {

namespace {

constexpr float kNanF = std::numeric_limits<float>::quiet_NaN();

bool is_subnormal_f32(float v) {
  return v != 0.0f && std::fpclassify(v) == FP_SUBNORMAL;
}

}  // namespace

int compute_shared_exp(std::span<const float> values, const ElementFormat& fmt) {
  if (values.empty()) throw LengthMismatch("compute_shared_exp: empty input");
  float max_abs = 0.0f;
  for (float v : values) {
    if (!std::isfinite(v))
      throw SpecialInput("compute_shared_exp: non-finite lane");
    max_abs = std::max(max_abs, std::fabs(v));
  }
  if (max_abs == 0.0f) return -ScaleE8M0::kBias;
  int e = floor_log2_f32(max_abs) - fmt.emax;
  return std::clamp(e, -ScaleE8M0::kBias, ScaleE8M0::kBias);
}

MxBlock quantize_block(std::span<const float> values, const QuantConfig& cfg,
                       QuantStats* stats) {
  if (static_cast<int>(values.size()) != cfg.block_size)
    throw LengthMismatch("quantize_block: got " + std::to_string(values.size()) +
                         " lanes, config says " + std::to_string(cfg.block_size));
  const ElementFormat& fmt = format_info(cfg.element_fmt);

  MxBlock block;
  block.fmt = cfg.element_fmt;
  block.codes.assign(values.size(), 0);

  float max_abs = 0.0f;
  for (float v : values) {
    if (std::isnan(v) || (std::isinf(v) && !fmt.has_inf)) {
      block.scale.code = ScaleE8M0::kNanCode;
      if (stats) stats->nan_blocks += 1;
      return block;  // element codes stay zero
    }
    if (std::isinf(v)) continue;  // representable Inf does not drive the scale
    max_abs = std::max(max_abs, std::fabs(v));
  }

  int shared_exp = -ScaleE8M0::kBias;
  if (max_abs != 0.0f) {
    shared_exp = std::clamp(floor_log2_f32(max_abs) - fmt.emax,
                            -ScaleE8M0::kBias, ScaleE8M0::kBias);
  }
  block.scale = scale_from_exponent(shared_exp);
  const double scale = decode_scale(block.scale);

  for (size_t i = 0; i < values.size(); ++i) {
    float v = values[i];
    if (std::isinf(v)) {
      block.codes[i] = inf_code(fmt, v < 0.0f);
      continue;
    }
    if (is_subnormal_f32(v)) {
      // FP32 subnormals flush to zero before scaling.
      if (stats) stats->flushed_subnormals += 1;
      continue;
    }
    // The scale is a power of two, so the division is exact in double
    // whenever the quotient stays in range (it does: |v| <= 2^128 * 2^127).
    double t = static_cast<double>(v) / scale;
    if (stats) {
      double neg_limit = fmt.is_int ? -2.0 : -fmt.vmax;
      if (t > fmt.vmax || t < neg_limit) stats->clamped_lanes += 1;
    }
    block.codes[i] = encode_element(fmt, t, cfg.rounding);
  }
  return block;
}

std::vector<float> dequantize_block(const MxBlock& block) {
  const ElementFormat& fmt = format_info(block.fmt);
  std::vector<float> out(block.codes.size());
  if (block.scale.is_nan()) {
    std::fill(out.begin(), out.end(), kNanF);
    return out;
  }
  const double scale = decode_scale(block.scale);
  for (size_t i = 0; i < out.size(); ++i) {
    // Product in double, then one narrowing; narrow_to_f32 saturates to
    // +/-Inf when the product exceeds the FP32 range.
    out[i] = narrow_to_f32(scale * decode_element(fmt, block.codes[i]));
  }
  return out;
}

ErrorReport quantization_error(std::span<const float> values, const QuantConfig& cfg) {
  QuantStats stats;
  MxBlock block = quantize_block(values, cfg, &stats);
  std::vector<float> deq = dequantize_block(block);
  ErrorReport r = compare_spans(deq, values);
  r.clamped_lane_count = stats.clamped_lanes;
  r.nan_block_count = stats.nan_blocks;
  return r;
}

}  // namespace mx
