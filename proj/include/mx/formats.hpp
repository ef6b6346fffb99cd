// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace mx {

// Element formats shipped by this library. The numeric values are stable:
// they are written verbatim into serialized containers.
enum class ElementFormatId : uint8_t {
  E4M3 = 0,  // 8-bit float, no Inf, two NaN codes
  E5M2 = 1,  // 8-bit float, IEEE-style Inf and NaN
  E2M3 = 2,  // 6-bit float, finite only
  E3M2 = 3,  // 6-bit float, finite only
  E2M1 = 4,  // 4-bit float, finite only
  INT8 = 5,  // 8-bit two's complement with implicit 2^-6 step
};

inline constexpr int kElementFormatCount = 6;

// Stable on-disk ids as well (0 = ties to even, 1 = ties away from zero).
enum class RoundingMode : uint8_t {
  RoundHalfToNearestEven = 0,
  RoundHalfAwayFromZero = 1,
};

struct ElementFormat {
  ElementFormatId id;
  const char* name;      // descriptor name, e.g. "E4M3"
  const char* cli_name;  // spelled form used by the CLI, e.g. "mxfp8_e4m3"
  int total_bits;
  int exponent_bits;
  int mantissa_bits;  // trailing significand bits (7 for INT8)
  int bias;
  int emax;     // exponent of the largest power of two <= vmax
  double vmax;  // largest finite magnitude
  bool has_inf;
  bool has_nan;
  bool is_int;
};

const ElementFormat& format_info(ElementFormatId id);
std::optional<ElementFormatId> parse_element_format(std::string_view cli_name);
std::optional<RoundingMode> parse_rounding_mode(std::string_view name);
const char* rounding_name(RoundingMode mode);

// Shared block scale: 8-bit biased power-of-two exponent. Code 255 is NaN,
// every other code c decodes to 2^(c-127); there is no zero and no Inf.
struct ScaleE8M0 {
  static constexpr uint8_t kNanCode = 0xFF;
  static constexpr int kBias = 127;

  uint8_t code = 0x7F;  // 2^0

  bool is_nan() const { return code == kNanCode; }
  int exponent() const { return static_cast<int>(code) - kBias; }  // pre: !is_nan()
  friend bool operator==(ScaleE8M0, ScaleE8M0) = default;
};

// 2^(code-127), exact in double; NaN code decodes to a quiet NaN.
double decode_scale(ScaleE8M0 s);
// pre: shared_exp in [-127, 127]
ScaleE8M0 scale_from_exponent(int shared_exp);

}  // namespace mx
