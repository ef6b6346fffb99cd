// SPDX-License-Identifier: Apache-2.0
#include "mx/linalg.hpp"

#include <array>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "mx/errors.hpp"

namespace mx {

namespace {

// Full 256-entry decode table; codes beyond the format's width never occur
// in a valid tensor. Element values are exact in FP32.
std::array<float, 256> decode_table(ElementFormatId id) {
  const ElementFormat& fmt = format_info(id);
  std::array<float, 256> t{};
  for (int c = 0; c < (1 << fmt.total_bits); ++c)
    t[static_cast<size_t>(c)] = static_cast<float>(decode_element(fmt, static_cast<uint8_t>(c)));
  return t;
}

}  // namespace

float mx_dot(const MxBlock& a, const MxBlock& b) {
  if (a.codes.size() != b.codes.size())
    throw BlockSizeMismatch("mx_dot: " + std::to_string(a.codes.size()) + " vs " +
                            std::to_string(b.codes.size()) + " lanes");
  const ElementFormat& fa = format_info(a.fmt);
  const ElementFormat& fb = format_info(b.fmt);
  float acc = 0.0f;
  for (size_t i = 0; i < a.codes.size(); ++i) {
    // Each element has at most a 16-bit significand, so the FP32 product of
    // two decoded elements is exact; only the additions round.
    acc += static_cast<float>(decode_element(fa, a.codes[i])) *
           static_cast<float>(decode_element(fb, b.codes[i]));
  }
  double scale = decode_scale(a.scale) * decode_scale(b.scale);  // NaN propagates
  return narrow_to_f32(scale * static_cast<double>(acc));
}

Fp32Tensor mx_gemm(const MxTensor& a, const MxTensor& b, int n_threads) {
  if (a.rank() != 2 || b.rank() != 2)
    throw RankError("mx_gemm wants rank-2 operands");
  if (a.shape[1] != b.shape[0])
    throw ShapeMismatch("mx_gemm: inner dims " + std::to_string(a.shape[1]) + " vs " +
                        std::to_string(b.shape[0]));
  if (a.axis != 1 || b.axis != 0)
    throw AxisMismatch("mx_gemm wants a blocked along axis 1 and b along axis 0");
  if (a.cfg.block_size != b.cfg.block_size)
    throw BlockSizeMismatch("mx_gemm: block sizes " + std::to_string(a.cfg.block_size) +
                            " vs " + std::to_string(b.cfg.block_size));

  const int64_t M = a.shape[0], K = a.shape[1], N = b.shape[1];
  const int64_t k = a.cfg.block_size;
  const int64_t nb = (K + k - 1) / k;
  const std::array<float, 256> lut_a = decode_table(a.cfg.element_fmt);
  const std::array<float, 256> lut_b = decode_table(b.cfg.element_fmt);

  Fp32Tensor out = Fp32Tensor::zeros({M, N});

  auto run_rows = [&](int64_t m_begin, int64_t m_end) {
    for (int64_t m = m_begin; m < m_end; ++m) {
      for (int64_t n = 0; n < N; ++n) {
        float acc = 0.0f;
        for (int64_t blk = 0; blk < nb; ++blk) {
          // a: outer=M, inner=1 -> block index m*nb + blk
          // b: outer=1, inner=N -> block index blk*N + n
          const uint8_t* pa = a.codes.data() + (m * nb + blk) * k;
          const uint8_t* pb = b.codes.data() + (blk * N + n) * k;
          ScaleE8M0 sa{a.scales[static_cast<size_t>(m * nb + blk)]};
          ScaleE8M0 sb{b.scales[static_cast<size_t>(blk * N + n)]};
          // Trailing partial block: only real lanes take part in the sum.
          // Padding is all zero codes, but adding 0.0f products would still
          // disturb a -0.0f partial sum, so they are skipped outright.
          const int64_t lanes = std::min(k, K - blk * k);
          float s = 0.0f;
          for (int64_t j = 0; j < lanes; ++j)
            s += lut_a[pa[j]] * lut_b[pb[j]];
          double scale = decode_scale(sa) * decode_scale(sb);
          acc += narrow_to_f32(scale * static_cast<double>(s));
        }
        out.at(m, n) = acc;
      }
    }
  };

  if (n_threads <= 1 || M == 1) {
    run_rows(0, M);
  } else {
    int workers = static_cast<int>(std::min<int64_t>(n_threads, M));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    int64_t chunk = (M + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      int64_t lo = w * chunk;
      int64_t hi = std::min(M, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(run_rows, lo, hi);
    }
    for (std::thread& th : pool) th.join();
  }
  return out;
}

Fp32Tensor fp32_gemm(const Fp32Tensor& a, const Fp32Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw RankError("fp32_gemm wants rank-2 operands");
  if (a.shape[1] != b.shape[0])
    throw ShapeMismatch("fp32_gemm: inner dims " + std::to_string(a.shape[1]) + " vs " +
                        std::to_string(b.shape[0]));
  const int64_t M = a.shape[0], K = a.shape[1], N = b.shape[1];
  Fp32Tensor out = Fp32Tensor::zeros({M, N});
  for (int64_t m = 0; m < M; ++m)
    for (int64_t n = 0; n < N; ++n) {
      float acc = 0.0f;
      for (int64_t kk = 0; kk < K; ++kk) acc += a.at(m, kk) * b.at(kk, n);
      out.at(m, n) = acc;
    }
  return out;
}

ErrorReport compare_to_fp32(const Fp32Tensor& out, const Fp32Tensor& ref) {
  if (out.shape != ref.shape) throw ShapeMismatch("compare_to_fp32: shapes differ");
  return compare_spans(out.data, ref.data);
}

GemmResult mx_gemm_compare(const MxTensor& a, const MxTensor& b, const Fp32Tensor& a_ref,
                           const Fp32Tensor& b_ref, bool with_reference, int n_threads) {
  GemmResult r{mx_gemm(a, b, n_threads), std::nullopt, std::nullopt};
  if (with_reference) {
    r.reference = fp32_gemm(a_ref, b_ref);
    r.report = compare_to_fp32(r.out, *r.reference);
  }
  return r;
}

}  // namespace mx
