// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "mx/report.hpp"
#include "mx/tensor.hpp"

namespace mx {

// Dot product of two blocks sharing one lane count. Element products are
// accumulated in FP32 in ascending lane order; the product of the two block
// scales (an exact power of two) is applied once at the end in double and the
// result narrowed to FP32. Either scale being NaN yields NaN.
float mx_dot(const MxBlock& a, const MxBlock& b);

// a: [M, K] blocked along axis 1; b: [K, N] blocked along axis 0 (both along
// the reduction dimension, same block size). out[m][n] is the sum over K
// blocks of the per-block scaled dot, accumulated in FP32 in ascending block
// order. Padding lanes of a trailing partial block are skipped, not summed.
// n_threads > 1 splits output rows across threads; the result is
// bit-identical for every thread count.
Fp32Tensor mx_gemm(const MxTensor& a, const MxTensor& b, int n_threads = 1);

// Plain FP32 reference: straight loop, ascending-k accumulation.
Fp32Tensor fp32_gemm(const Fp32Tensor& a, const Fp32Tensor& b);

// Lane metrics of `out` against `ref` (shapes must match).
ErrorReport compare_to_fp32(const Fp32Tensor& out, const Fp32Tensor& ref);

// mx_gemm output bundled with an optional FP32 reference comparison.
struct GemmResult {
  Fp32Tensor out;
  std::optional<Fp32Tensor> reference;
  std::optional<ErrorReport> report;
};

// Runs mx_gemm; when with_reference is set, also runs fp32_gemm on the
// original (unquantized) operands and fills `reference` and `report`.
GemmResult mx_gemm_compare(const MxTensor& a, const MxTensor& b,
                           const Fp32Tensor& a_ref, const Fp32Tensor& b_ref,
                           bool with_reference, int n_threads = 1);

}  // namespace mx
