// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "mx/formats.hpp"

namespace mx {

// Decode one element code. Codes occupy the low total_bits of the byte;
// higher bits must be zero. Returns +/-Inf or NaN for reserved encodings.
// The result is exact: every finite element value is a small dyadic rational.
double decode_element(const ElementFormat& fmt, uint8_t code);

// Encode a real value to the nearest representable element, breaking exact
// ties per `rounding`. Magnitudes beyond the finite range clamp to the
// largest finite value of the same sign; Inf clamps too unless the format
// represents it. NaN maps to the canonical NaN code when the format has one
// and throws UnrepresentableSpecial otherwise. Tie detection is exact: the
// midpoint of two adjacent representables is computed in double, where it
// is itself exact, so no epsilon is involved.
uint8_t encode_element(const ElementFormat& fmt, double value, RoundingMode rounding);

struct CodeValue {
  uint8_t code;
  double value;  // NaN/Inf for reserved encodings
};

// Every code of the format: finite values sorted ascending (-0 before +0),
// then -Inf, +Inf, then NaN codes in ascending code order.
std::vector<CodeValue> enumerate_format(const ElementFormat& fmt);

uint8_t canonical_nan_code(const ElementFormat& fmt);         // pre: fmt.has_nan
uint8_t inf_code(const ElementFormat& fmt, bool negative);    // pre: fmt.has_inf

// floor(log2(|x|)) read straight from the FP32 bit pattern.
// pre: x finite and nonzero.
int floor_log2_f32(float x);

// Round-to-nearest-even double-to-float narrowing that is well defined for
// every input: magnitudes at or above the FP32 overflow threshold saturate
// to +/-Inf exactly as IEEE conversion would.
float narrow_to_f32(double v);

}  // namespace mx
