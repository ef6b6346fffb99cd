// SPDX-License-Identifier: Apache-2.0
#include "mx/flow.hpp"

#include <cmath>
#include <string>

#include "mx/errors.hpp"
#include "mx/rng.hpp"

namespace mx {

namespace {

// Demo task geometry and hyperparameters. The label noise keeps the
// attainable loss floor away from zero, which makes relative comparisons
// between precision configs meaningful.
constexpr int64_t kDemoIn = 16;
constexpr int64_t kDemoHidden = 64;
constexpr int64_t kDemoOut = 4;
constexpr int64_t kDemoBatch = 256;
constexpr float kDemoLr = 0.01f;
constexpr double kDemoNoise = 0.05;

MxTensor quantize_role(const Fp32Tensor& t, int axis, const QuantConfig& cfg,
                       QuantRole role, const FlowConfig& flow) {
  if (flow.counters) flow.counters->record(role, cfg.element_fmt);
  return quantize_tensor(t, axis, cfg);
}

Fp32Tensor random_matrix(Rng& rng, int64_t rows, int64_t cols, double stddev) {
  Fp32Tensor t = Fp32Tensor::zeros({rows, cols});
  for (float& v : t.data) v = static_cast<float>(rng.normal() * stddev);
  return t;
}

Fp32Tensor relu(const Fp32Tensor& t) {
  Fp32Tensor out = t;
  for (float& v : out.data) v = v > 0.0f ? v : 0.0f;
  return out;
}

// dy masked by the sign of the pre-activation.
Fp32Tensor relu_backward(const Fp32Tensor& pre, const Fp32Tensor& dy) {
  Fp32Tensor out = dy;
  for (size_t i = 0; i < out.data.size(); ++i)
    if (pre.data[i] <= 0.0f) out.data[i] = 0.0f;
  return out;
}

double sum_squares(const Fp32Tensor& t) {
  double s = 0.0;
  for (float v : t.data) s += static_cast<double>(v) * static_cast<double>(v);
  return s;
}

}  // namespace

int64_t QuantizeCounters::count(QuantRole role) const {
  int64_t n = 0;
  for (const QuantEvent& e : events)
    if (e.role == role) ++n;
  return n;
}

void FlowConfig::validate() const {
  bool w = weight_cfg.has_value();
  bool a = act_cfg.has_value();
  bool g = effective_grad_cfg().has_value();
  if (w != a || w != g)
    throw ConfigError("flow mixes quantized and passthrough roles; "
                      "quantize all GEMM operands or none");
  if (w) {
    int bs = weight_cfg->block_size;
    if (act_cfg->block_size != bs || effective_grad_cfg()->block_size != bs)
      throw ConfigError("flow roles disagree on block size");
  }
}

QuantizedLinearState make_linear_state(const Fp32Tensor& w, const FlowConfig& flow) {
  flow.validate();
  if (w.rank() != 2) throw RankError("linear weights must be rank 2");
  QuantizedLinearState st;
  st.master_w = w;
  if (!flow.passthrough()) {
    st.qw = quantize_role(w, 0, *flow.weight_cfg, QuantRole::Weight, flow);
    st.qwt = quantize_role(transpose_2d(w), 0, *flow.weight_cfg,
                           QuantRole::WeightTranspose, flow);
  }
  return st;
}

Fp32Tensor linear_forward(const QuantizedLinearState& st, const Fp32Tensor& a,
                          const FlowConfig& flow) {
  flow.validate();
  if (flow.passthrough()) return fp32_gemm(a, st.master_w);
  MxTensor qa = quantize_role(a, 1, *flow.act_cfg, QuantRole::Activation, flow);
  return mx_gemm(qa, *st.qw);
}

LinearGrads linear_backward(const QuantizedLinearState& st, const Fp32Tensor& a,
                            const Fp32Tensor& dy, const FlowConfig& flow) {
  flow.validate();
  if (flow.passthrough()) {
    return LinearGrads{fp32_gemm(dy, transpose_2d(st.master_w)),
                       fp32_gemm(transpose_2d(a), dy)};
  }
  const QuantConfig& grad_cfg = *flow.effective_grad_cfg();
  MxTensor qdy_rows = quantize_role(dy, 1, grad_cfg, QuantRole::Gradient, flow);
  Fp32Tensor da = mx_gemm(qdy_rows, *st.qwt);
  MxTensor qat = quantize_role(transpose_2d(a), 1, *flow.act_cfg,
                               QuantRole::ActivationTranspose, flow);
  MxTensor qdy_cols = quantize_role(dy, 0, grad_cfg, QuantRole::Gradient, flow);
  Fp32Tensor dw = mx_gemm(qat, qdy_cols);
  return LinearGrads{std::move(da), std::move(dw)};
}

void sgd_step(QuantizedLinearState& st, const Fp32Tensor& dw, float lr,
              const FlowConfig& flow) {
  flow.validate();
  if (st.master_w.shape != dw.shape) throw ShapeMismatch("sgd_step: dw shape differs");
  for (size_t i = 0; i < st.master_w.data.size(); ++i)
    st.master_w.data[i] -= lr * dw.data[i];
  if (!flow.passthrough()) {
    st.qw = quantize_role(st.master_w, 0, *flow.weight_cfg, QuantRole::Weight, flow);
    st.qwt = quantize_role(transpose_2d(st.master_w), 0, *flow.weight_cfg,
                           QuantRole::WeightTranspose, flow);
  }
}

FlowConfig demo_flow_config(std::optional<ElementFormatId> weight_fmt,
                            std::optional<ElementFormatId> act_fmt,
                            std::optional<ElementFormatId> grad_fmt) {
  auto cfg = [](ElementFormatId id) {
    return QuantConfig{id, 32, RoundingMode::RoundHalfAwayFromZero};
  };
  FlowConfig flow;
  if (weight_fmt) flow.weight_cfg = cfg(*weight_fmt);
  if (act_fmt) flow.act_cfg = cfg(*act_fmt);
  if (grad_fmt) flow.grad_cfg = cfg(*grad_fmt);
  flow.validate();
  return flow;
}

TrainResult train_demo(const FlowConfig& flow, uint64_t seed, int steps) {
  flow.validate();
  Rng rng(seed);

  Fp32Tensor x = random_matrix(rng, kDemoBatch, kDemoIn, 1.0);
  Fp32Tensor teacher_w1 =
      random_matrix(rng, kDemoIn, kDemoHidden, 1.0 / std::sqrt(double(kDemoIn)));
  Fp32Tensor teacher_w2 =
      random_matrix(rng, kDemoHidden, kDemoOut, 1.0 / std::sqrt(double(kDemoHidden)));
  Fp32Tensor y = fp32_gemm(relu(fp32_gemm(x, teacher_w1)), teacher_w2);
  for (float& v : y.data) v += static_cast<float>(rng.normal() * kDemoNoise);

  QuantizedLinearState l1 = make_linear_state(
      random_matrix(rng, kDemoIn, kDemoHidden, 1.0 / std::sqrt(double(kDemoIn))), flow);
  QuantizedLinearState l2 = make_linear_state(
      random_matrix(rng, kDemoHidden, kDemoOut, 1.0 / std::sqrt(double(kDemoHidden))),
      flow);

  const double inv_n = 1.0 / static_cast<double>(kDemoBatch * kDemoOut);
  TrainResult result;
  result.records.reserve(static_cast<size_t>(steps));

  for (int step = 0; step < steps; ++step) {
    Fp32Tensor h_pre = linear_forward(l1, x, flow);
    Fp32Tensor h = relu(h_pre);
    Fp32Tensor yhat = linear_forward(l2, h, flow);

    Fp32Tensor dy = yhat;  // becomes d(loss)/d(yhat)
    double loss = 0.0;
    for (size_t i = 0; i < dy.data.size(); ++i) {
      double r = static_cast<double>(yhat.data[i]) - static_cast<double>(y.data[i]);
      loss += r * r;
      dy.data[i] = static_cast<float>(2.0 * inv_n * r);
    }
    loss *= inv_n;

    LinearGrads g2 = linear_backward(l2, h, dy, flow);
    Fp32Tensor dh_pre = relu_backward(h_pre, g2.da);
    LinearGrads g1 = linear_backward(l1, x, dh_pre, flow);

    double grad_norm = std::sqrt(sum_squares(g1.dw) + sum_squares(g2.dw));
    result.records.push_back({step, loss, grad_norm});
    if (!std::isfinite(loss)) {
      result.diverged = true;
      break;
    }

    sgd_step(l1, g1.dw, kDemoLr, flow);
    sgd_step(l2, g2.dw, kDemoLr, flow);
  }
  return result;
}

}  // namespace mx
