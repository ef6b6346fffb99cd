// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mx/linalg.hpp"
#include "mx/tensor.hpp"

namespace mx {

// Where a quantize call sits in the training flow.
enum class QuantRole {
  Weight,
  WeightTranspose,
  Activation,
  ActivationTranspose,
  Gradient,
};

struct QuantEvent {
  QuantRole role;
  ElementFormatId fmt;
  friend bool operator==(QuantEvent, QuantEvent) = default;
};

// Optional instrumentation: every quantize call issued by the flow appends
// one event, in call order. Nothing else in the flow quantizes, so the event
// list is a complete record of where precision is dropped.
struct QuantizeCounters {
  std::vector<QuantEvent> events;

  void record(QuantRole role, ElementFormatId fmt) { events.push_back({role, fmt}); }
  void reset() { events.clear(); }
  int64_t count(QuantRole role) const;
};

// Per-role quantization settings. An empty optional means FP32 passthrough.
// Mixing quantized and passthrough roles in one flow is rejected: either all
// three GEMM operand roles quantize, or none does. grad_cfg falls back to
// act_cfg when unset, so gradients default to the activation format.
struct FlowConfig {
  std::optional<QuantConfig> weight_cfg;
  std::optional<QuantConfig> act_cfg;
  std::optional<QuantConfig> grad_cfg;
  QuantizeCounters* counters = nullptr;

  const std::optional<QuantConfig>& effective_grad_cfg() const {
    return grad_cfg ? grad_cfg : act_cfg;
  }
  bool passthrough() const { return !weight_cfg.has_value(); }
  void validate() const;  // throws ConfigError
};

// One linear layer's weights: the FP32 master copy plus, under MX configs,
// quantized snapshots of W and of W^T. The two snapshots are quantized
// independently (blocks run along each tensor's own reduction axis), so
// dequantize(qwt) is generally NOT the transpose of dequantize(qw).
struct QuantizedLinearState {
  Fp32Tensor master_w;           // [in, out]
  std::optional<MxTensor> qw;    // W, blocked along axis 0
  std::optional<MxTensor> qwt;   // W^T ([out, in]), blocked along axis 0
};

QuantizedLinearState make_linear_state(const Fp32Tensor& w, const FlowConfig& flow);

// out = a @ W with a: [batch, in]. MX configs quantize `a` along axis 1 with
// act_cfg and multiply against qw.
Fp32Tensor linear_forward(const QuantizedLinearState& st, const Fp32Tensor& a,
                          const FlowConfig& flow);

struct LinearGrads {
  Fp32Tensor da;  // [batch, in]
  Fp32Tensor dw;  // [in, out]
};

// da = dy @ W^T (uses qwt), dw = a^T @ dy. MX configs quantize dy with the
// effective gradient config (along each GEMM's reduction axis) and a^T with
// act_cfg.
LinearGrads linear_backward(const QuantizedLinearState& st, const Fp32Tensor& a,
                            const Fp32Tensor& dy, const FlowConfig& flow);

// master_w -= lr * dw in FP32, then refresh qw/qwt from the updated master.
void sgd_step(QuantizedLinearState& st, const Fp32Tensor& dw, float lr,
              const FlowConfig& flow);

struct TrainRecord {
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct TrainResult {
  std::vector<TrainRecord> records;
  bool diverged = false;
};

// Fixed demo task: two-layer MLP 16 -> 64 -> 4 with ReLU, full-batch MSE
// regression (256 samples) against a noisy random teacher, plain SGD. One
// seed drives data, teacher and init. Loss and gradient norm are recorded
// every step; a non-finite loss stops training and sets `diverged`.
TrainResult train_demo(const FlowConfig& flow, uint64_t seed, int steps);

// Convenience builder for the demo: ties-away-from-zero rounding, block
// size 32. Empty optionals select FP32 passthrough.
FlowConfig demo_flow_config(std::optional<ElementFormatId> weight_fmt,
                            std::optional<ElementFormatId> act_fmt,
                            std::optional<ElementFormatId> grad_fmt = std::nullopt);

}  // namespace mx
