// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mx {

// Base for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape / geometry violations.
struct ShapeMismatch : Error {
  using Error::Error;
};
struct AxisMismatch : Error {
  using Error::Error;
};
struct BlockSizeMismatch : Error {
  using Error::Error;
};
struct LengthMismatch : Error {
  using Error::Error;
};
struct RankError : Error {
  using Error::Error;
};

// Value-domain violations.
struct SpecialInput : Error {
  using Error::Error;
};
struct UnrepresentableSpecial : Error {
  using Error::Error;
};

// Misconfiguration (e.g. mixing quantized and passthrough operands in one flow).
struct ConfigError : Error {
  using Error::Error;
};

// File I/O and container parsing. FormatError covers any structurally invalid
// field; the subclasses below name the common cases.
struct IoError : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};
struct BadMagic : FormatError {
  using FormatError::FormatError;
};
struct UnsupportedVersion : FormatError {
  using FormatError::FormatError;
};
struct CorruptLength : FormatError {
  using FormatError::FormatError;
};

}  // namespace mx
