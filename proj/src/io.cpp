// SPDX-License-Identifier: Apache-2.0
#include "mx/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "mx/errors.hpp"

namespace mx {

namespace {

constexpr char kF32Magic[4] = {'F', '3', '2', 'T'};
constexpr char kMxtMagic[4] = {'M', 'X', 'T', '1'};
constexpr uint16_t kVersion = 1;

// Conservative cap on element counts accepted from a header; anything larger
// cannot match a real payload here and would only serve as an allocation bomb.
constexpr uint64_t kMaxElements = uint64_t{1} << 40;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

struct Cursor {
  std::span<const uint8_t> bytes;
  size_t pos = 0;

  size_t remaining() const { return bytes.size() - pos; }

  void need(size_t n, const char* field) {
    if (remaining() < n)
      throw CorruptLength(std::string("truncated before field '") + field + "'");
  }
  uint8_t u8(const char* field) {
    need(1, field);
    return bytes[pos++];
  }
  uint16_t u16(const char* field) {
    need(2, field);
    uint16_t v = static_cast<uint16_t>(bytes[pos]) |
                 static_cast<uint16_t>(bytes[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  uint32_t u32(const char* field) {
    need(4, field);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
};

void parse_magic(Cursor& c, const char expect[4], const char* what) {
  c.need(4, "magic");
  if (std::memcmp(c.bytes.data() + c.pos, expect, 4) != 0)
    throw BadMagic(std::string("not a ") + what + " file (bad magic)");
  c.pos += 4;
}

std::vector<int64_t> parse_dims(Cursor& c, bool allow_zero) {
  uint8_t rank = c.u8("rank");
  if (rank < 1 || rank > 4)
    throw FormatError("field 'rank' = " + std::to_string(rank) + ", want 1..4");
  std::vector<int64_t> dims(rank);
  for (int i = 0; i < rank; ++i) {
    uint32_t d = c.u32("dims");
    if (!allow_zero && d == 0) throw FormatError("field 'dims' contains 0");
    dims[static_cast<size_t>(i)] = d;
  }
  return dims;
}

uint64_t mul_checked(uint64_t a, uint64_t b, const char* field) {
  if (b != 0 && a > kMaxElements / b)
    throw CorruptLength(std::string("field '") + field + "' implies an implausible size");
  return a * b;
}

uint64_t checked_product(const std::vector<int64_t>& dims, const char* field) {
  uint64_t p = 1;
  for (int64_t d : dims) p = mul_checked(p, static_cast<uint64_t>(d), field);
  return p;
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on '" + path + "'");
  return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on '" + path + "'");
}

}  // namespace

std::vector<uint8_t> serialize_f32(const Fp32Tensor& t) {
  std::vector<uint8_t> out;
  out.reserve(16 + t.data.size() * 4);
  out.insert(out.end(), kF32Magic, kF32Magic + 4);
  put_u16(out, kVersion);
  out.push_back(static_cast<uint8_t>(t.rank()));
  for (int64_t d : t.shape) put_u32(out, static_cast<uint32_t>(d));
  for (float v : t.data) put_u32(out, std::bit_cast<uint32_t>(v));
  return out;
}

Fp32Tensor parse_f32(std::span<const uint8_t> bytes) {
  Cursor c{bytes};
  parse_magic(c, kF32Magic, "F32T");
  uint16_t version = c.u16("version");
  if (version != kVersion)
    throw UnsupportedVersion("field 'version' = " + std::to_string(version));
  std::vector<int64_t> dims = parse_dims(c, /*allow_zero=*/true);
  uint64_t n = checked_product(dims, "dims");
  if (c.remaining() != n * 4)
    throw CorruptLength("payload holds " + std::to_string(c.remaining()) +
                        " bytes, field 'dims' wants " + std::to_string(n * 4));
  std::vector<float> data(static_cast<size_t>(n));
  for (size_t i = 0; i < data.size(); ++i)
    data[i] = std::bit_cast<float>(c.u32("payload"));
  return Fp32Tensor(std::move(dims), std::move(data));
}

std::vector<uint8_t> serialize_mxt(const MxTensor& t) {
  std::vector<uint8_t> out;
  out.reserve(24 + t.scales.size() + t.codes.size());
  out.insert(out.end(), kMxtMagic, kMxtMagic + 4);
  put_u16(out, kVersion);
  out.push_back(static_cast<uint8_t>(t.cfg.element_fmt));
  out.push_back(static_cast<uint8_t>(t.cfg.rounding));
  put_u16(out, static_cast<uint16_t>(t.cfg.block_size));
  out.push_back(static_cast<uint8_t>(t.axis));
  out.push_back(static_cast<uint8_t>(t.rank()));
  for (int64_t d : t.shape) put_u32(out, static_cast<uint32_t>(d));
  out.insert(out.end(), t.scales.begin(), t.scales.end());
  out.insert(out.end(), t.codes.begin(), t.codes.end());
  return out;
}

MxTensor parse_mxt(std::span<const uint8_t> bytes) {
  Cursor c{bytes};
  parse_magic(c, kMxtMagic, "MXT1");
  uint16_t version = c.u16("version");
  if (version != kVersion)
    throw UnsupportedVersion("field 'version' = " + std::to_string(version));

  uint8_t fmt = c.u8("element_fmt");
  if (fmt >= kElementFormatCount)
    throw FormatError("field 'element_fmt' = " + std::to_string(fmt));
  uint8_t rounding = c.u8("rounding");
  if (rounding > 1) throw FormatError("field 'rounding' = " + std::to_string(rounding));
  uint16_t block_size = c.u16("block_size");
  if (block_size < 1) throw FormatError("field 'block_size' = 0");
  uint8_t axis = c.u8("axis");
  std::vector<int64_t> dims = parse_dims(c, /*allow_zero=*/false);
  if (axis >= dims.size())
    throw FormatError("field 'axis' = " + std::to_string(axis) + ", rank is " +
                      std::to_string(dims.size()));

  MxTensor t;
  t.shape = std::move(dims);
  t.axis = axis;
  t.cfg.element_fmt = static_cast<ElementFormatId>(fmt);
  t.cfg.rounding = static_cast<RoundingMode>(rounding);
  t.cfg.block_size = block_size;

  uint64_t outer = checked_product({t.shape.begin(), t.shape.begin() + t.axis}, "dims");
  uint64_t inner = checked_product({t.shape.begin() + t.axis + 1, t.shape.end()}, "dims");
  uint64_t bpl = (static_cast<uint64_t>(t.axis_dim()) + block_size - 1) / block_size;
  uint64_t n_blocks = mul_checked(mul_checked(outer, bpl, "dims"), inner, "dims");
  uint64_t n_codes = mul_checked(n_blocks, block_size, "block_size");
  uint64_t want = n_blocks + n_codes;
  if (c.remaining() != want)
    throw CorruptLength("payload holds " + std::to_string(c.remaining()) +
                        " bytes, header wants " + std::to_string(want));

  t.scales.assign(bytes.begin() + static_cast<ptrdiff_t>(c.pos),
                  bytes.begin() + static_cast<ptrdiff_t>(c.pos + n_blocks));
  c.pos += static_cast<size_t>(n_blocks);
  t.codes.assign(bytes.begin() + static_cast<ptrdiff_t>(c.pos), bytes.end());

  // Low bits are significant; stray high bits in sub-byte codes are dropped.
  const ElementFormat& ef = format_info(t.cfg.element_fmt);
  if (ef.total_bits < 8) {
    uint8_t mask = static_cast<uint8_t>((1u << ef.total_bits) - 1);
    for (uint8_t& code : t.codes) code &= mask;
  }
  return t;
}

void write_f32_file(const std::string& path, const Fp32Tensor& t) {
  write_file_bytes(path, serialize_f32(t));
}

Fp32Tensor read_f32_file(const std::string& path) {
  std::vector<uint8_t> bytes = read_file_bytes(path);
  return parse_f32(bytes);
}

void write_mxt_file(const std::string& path, const MxTensor& t) {
  write_file_bytes(path, serialize_mxt(t));
}

MxTensor read_mxt_file(const std::string& path) {
  std::vector<uint8_t> bytes = read_file_bytes(path);
  return parse_mxt(bytes);
}

}  // namespace mx
