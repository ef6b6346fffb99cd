// SPDX-License-Identifier: Apache-2.0
#include "mx/report.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace mx {

ErrorReport compare_spans(std::span<const float> out, std::span<const float> ref) {
  assert(out.size() == ref.size());
  ErrorReport r;
  double err_sq = 0.0;
  double sig_sq = 0.0;
  int64_t counted = 0;
  for (size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i]) || !std::isfinite(ref[i])) continue;
    double e = static_cast<double>(out[i]) - static_cast<double>(ref[i]);
    err_sq += e * e;
    sig_sq += static_cast<double>(ref[i]) * static_cast<double>(ref[i]);
    ++counted;
    double ae = std::fabs(e);
    if (ae > r.max_abs_err) r.max_abs_err = ae;
    if (ref[i] != 0.0f) {
      r.rel_err_valid = true;
      double re = ae / std::fabs(static_cast<double>(ref[i]));
      if (re > r.max_rel_err) r.max_rel_err = re;
    }
  }
  r.mse = counted > 0 ? err_sq / static_cast<double>(counted) : 0.0;
  if (err_sq == 0.0) {
    r.sqnr_db = std::numeric_limits<double>::infinity();
  } else {
    r.sqnr_db = 10.0 * std::log10(sig_sq / err_sq);
  }
  return r;
}

}  // namespace mx
