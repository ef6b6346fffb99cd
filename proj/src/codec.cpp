// SPDX-License-Identifier: Apache-2.0
#include "mx/codec.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "mx/errors.hpp"

namespace mx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

const std::array<ElementFormat, kElementFormatCount> kFormats = {{
    // id, name, cli_name, bits, ebits, mbits, bias, emax, vmax, inf, nan, int
    {ElementFormatId::E4M3, "E4M3", "mxfp8_e4m3", 8, 4, 3, 7, 8, 448.0, false, true, false},
    {ElementFormatId::E5M2, "E5M2", "mxfp8_e5m2", 8, 5, 2, 15, 15, 57344.0, true, true, false},
    {ElementFormatId::E2M3, "E2M3", "mxfp6_e2m3", 6, 2, 3, 1, 2, 7.5, false, false, false},
    {ElementFormatId::E3M2, "E3M2", "mxfp6_e3m2", 6, 3, 2, 3, 4, 28.0, false, false, false},
    {ElementFormatId::E2M1, "E2M1", "mxfp4", 4, 2, 1, 1, 2, 6.0, false, false, false},
    {ElementFormatId::INT8, "INT8", "mxint8", 8, 0, 7, 0, 0, 127.0 / 64.0, false, false, true},
}};

// Positive finite values of a float element format, ascending, one entry per
// code. Codes here are sign-bit-clear; the caller ORs the sign bit back in.
struct PositiveTable {
  std::vector<double> values;
  std::vector<uint8_t> codes;
};

PositiveTable build_positive_table(const ElementFormat& fmt) {
  PositiveTable t;
  const int n_codes = 1 << (fmt.total_bits - 1);  // sign bit clear
  for (int c = 0; c < n_codes; ++c) {
    double v = decode_element(fmt, static_cast<uint8_t>(c));
    if (!std::isfinite(v)) continue;
    assert(t.values.empty() || v > t.values.back());
    t.values.push_back(v);
    t.codes.push_back(static_cast<uint8_t>(c));
  }
  return t;
}

const PositiveTable& positive_table(const ElementFormat& fmt) {
  static const std::array<PositiveTable, kElementFormatCount> tables = [] {
    std::array<PositiveTable, kElementFormatCount> a;
    for (int i = 0; i < kElementFormatCount; ++i)
      a[i] = build_positive_table(kFormats[i]);
    return a;
  }();
  return tables[static_cast<size_t>(fmt.id)];
}

uint8_t encode_int8(double v, RoundingMode rounding) {
  // Implicit scale 2^-6: the integer grid point for v is v*64, exact in
  // double for every input that can reach here (v is finite).
  double t = v * 64.0;
  if (t >= 127.0) return 127;
  if (t <= -128.0) return 0x80;
  double lo = std::floor(t);
  if (t == lo) return static_cast<uint8_t>(static_cast<int8_t>(lo));
  double hi = lo + 1.0;
  double mid = lo + 0.5;
  double r;
  if (t < mid) {
    r = lo;
  } else if (t > mid) {
    r = hi;
  } else if (rounding == RoundingMode::RoundHalfAwayFromZero) {
    r = mid > 0.0 ? hi : lo;
  } else {
    r = (static_cast<int64_t>(lo) % 2 == 0) ? lo : hi;
  }
  return static_cast<uint8_t>(static_cast<int8_t>(r));
}

}  // namespace

const ElementFormat& format_info(ElementFormatId id) {
  return kFormats[static_cast<size_t>(id)];
}

std::optional<ElementFormatId> parse_element_format(std::string_view cli_name) {
  for (const ElementFormat& f : kFormats)
    if (cli_name == f.cli_name) return f.id;
  return std::nullopt;
}

std::optional<RoundingMode> parse_rounding_mode(std::string_view name) {
  if (name == "rne") return RoundingMode::RoundHalfToNearestEven;
  if (name == "rhaz") return RoundingMode::RoundHalfAwayFromZero;
  return std::nullopt;
}

const char* rounding_name(RoundingMode mode) {
  return mode == RoundingMode::RoundHalfToNearestEven ? "rne" : "rhaz";
}

double decode_scale(ScaleE8M0 s) {
  if (s.is_nan()) return kNan;
  return std::ldexp(1.0, s.exponent());
}

ScaleE8M0 scale_from_exponent(int shared_exp) {
  assert(shared_exp >= -ScaleE8M0::kBias && shared_exp <= ScaleE8M0::kBias);
  return ScaleE8M0{static_cast<uint8_t>(shared_exp + ScaleE8M0::kBias)};
}

double decode_element(const ElementFormat& fmt, uint8_t code) {
  assert((code >> fmt.total_bits) == 0);
  if (fmt.is_int) {
    // Two's complement over the full byte; the -128 code is kept, so the
    // grid is asymmetric: [-2.0, 1.984375].
    return static_cast<int8_t>(code) * 0x1p-6;
  }
  const int mbits = fmt.mantissa_bits;
  const int exp_mask = (1 << fmt.exponent_bits) - 1;
  const int mant_mask = (1 << mbits) - 1;
  const bool neg = (code >> (fmt.total_bits - 1)) & 1;
  const int exp_field = (code >> mbits) & exp_mask;
  const int mant = code & mant_mask;
  if (exp_field == exp_mask) {
    if (fmt.has_inf) return mant == 0 ? (neg ? -kInf : kInf) : kNan;
    if (fmt.has_nan && mant == mant_mask) return kNan;
    // Formats without reserved codes spend the top exponent on finite values.
  }
  double v;
  if (exp_field == 0) {
    v = std::ldexp(static_cast<double>(mant), 1 - fmt.bias - mbits);
  } else {
    v = std::ldexp(static_cast<double>((1 << mbits) | mant), exp_field - fmt.bias - mbits);
  }
  return neg ? -v : v;
}

uint8_t canonical_nan_code(const ElementFormat& fmt) {
  assert(fmt.has_nan);
  if (fmt.id == ElementFormatId::E4M3) return 0x7F;  // S.1111.111, positive form
  return 0x7E;                                       // E5M2: 0.11111.10
}

uint8_t inf_code(const ElementFormat& fmt, bool negative) {
  assert(fmt.has_inf);
  (void)fmt;
  return negative ? 0xFC : 0x7C;  // S.11111.00
}

uint8_t encode_element(const ElementFormat& fmt, double value, RoundingMode rounding) {
  if (std::isnan(value)) {
    if (fmt.has_nan) return canonical_nan_code(fmt);
    throw UnrepresentableSpecial(std::string("NaN not representable in ") + fmt.name);
  }
  if (std::isinf(value) && fmt.has_inf) return inf_code(fmt, value < 0.0);
  if (fmt.is_int) {
    if (std::isinf(value)) return value > 0.0 ? 127 : 0x80;
    return encode_int8(value, rounding);
  }

  const bool neg = std::signbit(value);
  const uint8_t sign_bit = neg ? static_cast<uint8_t>(1u << (fmt.total_bits - 1)) : 0;
  const double a = std::fabs(value);
  const PositiveTable& t = positive_table(fmt);

  if (a >= t.values.back()) return sign_bit | t.codes.back();

  // values[lo] <= a < values[lo+1]
  size_t lo = static_cast<size_t>(
      std::upper_bound(t.values.begin(), t.values.end(), a) - t.values.begin() - 1);
  if (a == t.values[lo]) return sign_bit | t.codes[lo];

  // Both neighbours are dyadic rationals with short significands whose
  // exponents differ by at most one, so their midpoint is exact in double.
  double mid = 0.5 * (t.values[lo] + t.values[lo + 1]);
  bool take_hi;
  if (a < mid) {
    take_hi = false;
  } else if (a > mid) {
    take_hi = true;
  } else if (rounding == RoundingMode::RoundHalfAwayFromZero) {
    take_hi = true;  // larger magnitude
  } else {
    // Adjacent magnitude codes differ by one, so exactly one is even.
    take_hi = (t.codes[lo] & 1u) != 0;
  }
  return sign_bit | t.codes[lo + (take_hi ? 1 : 0)];
}

std::vector<CodeValue> enumerate_format(const ElementFormat& fmt) {
  std::vector<CodeValue> finite, infs, nans;
  const int n_codes = 1 << fmt.total_bits;
  for (int c = 0; c < n_codes; ++c) {
    uint8_t code = static_cast<uint8_t>(c);
    double v = decode_element(fmt, code);
    if (std::isnan(v)) {
      nans.push_back({code, v});
    } else if (std::isinf(v)) {
      infs.push_back({code, v});
    } else {
      finite.push_back({code, v});
    }
  }
  std::sort(finite.begin(), finite.end(), [](const CodeValue& x, const CodeValue& y) {
    if (x.value != y.value) return x.value < y.value;
    // -0 sorts before +0
    return std::signbit(x.value) > std::signbit(y.value);
  });
  std::sort(infs.begin(), infs.end(),
            [](const CodeValue& x, const CodeValue& y) { return x.value < y.value; });
  std::vector<CodeValue> out = std::move(finite);
  out.insert(out.end(), infs.begin(), infs.end());
  out.insert(out.end(), nans.begin(), nans.end());
  return out;
}

float narrow_to_f32(double v) {
  // Halfway point between FLT_MAX and 2^128; ties-to-even sends it up.
  constexpr double kOverflow = 0x1.ffffffp+127;
  if (v >= kOverflow) return std::numeric_limits<float>::infinity();
  if (v <= -kOverflow) return -std::numeric_limits<float>::infinity();
  return static_cast<float>(v);
}

int floor_log2_f32(float x) {
  assert(std::isfinite(x) && x != 0.0f);
  uint32_t bits = std::bit_cast<uint32_t>(x) & 0x7FFFFFFFu;
  int biased = static_cast<int>(bits >> 23);
  if (biased != 0) return biased - 127;
  uint32_t mant = bits & 0x7FFFFFu;
  return (31 - std::countl_zero(mant)) - 149;
}

}  // namespace mx
