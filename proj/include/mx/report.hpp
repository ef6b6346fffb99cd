// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

namespace mx {

// Lane-wise error metrics of an output tensor against an FP32 reference.
// Lanes where either side is non-finite are excluded from the accumulated
// metrics. max_rel_err only aggregates lanes with |ref| > 0; rel_err_valid
// says whether at least one such lane existed.
struct ErrorReport {
  double mse = 0.0;
  double sqnr_db = 0.0;  // 10*log10(sum ref^2 / sum err^2); +Inf when err == 0
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  bool rel_err_valid = false;
  int64_t clamped_lane_count = 0;
  int64_t nan_block_count = 0;
};

// pre: out.size() == ref.size()
ErrorReport compare_spans(std::span<const float> out, std::span<const float> ref);

}  // namespace mx
