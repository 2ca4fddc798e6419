#include "snapiso/codec.hpp"

#include <limits>

#include "snapiso/errors.hpp"

namespace snapiso {

std::uint64_t pack_tx_num(const Version& v) {
  if (v.tx_num > kMaxTxNum) {
    throw StateError("tx_num does not fit in 63 bits: " + std::to_string(v.tx_num));
  }
  return v.deleted ? (v.tx_num | kDeletedBit) : v.tx_num;
}

Version unpack_version(std::uint64_t block_num, std::uint64_t packed_tx) noexcept {
  return {block_num, packed_tx & kMaxTxNum, (packed_tx & kDeletedBit) != 0};
}

void ByteWriter::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    buf_.push_back(static_cast<char>((v >> shift) & 0xff));
  }
}

void ByteWriter::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    buf_.push_back(static_cast<char>((v >> shift) & 0xff));
  }
}

void ByteWriter::bytes(std::string_view b) {
  if (b.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw StateError("byte string too long to encode");
  }
  u32(static_cast<std::uint32_t>(b.size()));
  buf_.append(b);
}

void ByteWriter::version(const Version& v) {
  u64(v.block_num);
  u64(pack_tx_num(v));
}

void ByteReader::need(std::size_t n) const {
  if (in_.size() - pos_ < n) {
    throw DecodeError("truncated input: need " + std::to_string(n) + " bytes at offset " +
                      std::to_string(pos_));
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return static_cast<std::uint8_t>(in_[pos_++]);
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v = (v << 8) | static_cast<std::uint8_t>(in_[pos_++]);
  }
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v = (v << 8) | static_cast<std::uint8_t>(in_[pos_++]);
  }
  return v;
}

std::string ByteReader::bytes() {
  const auto n = u32();
  return std::string(raw(n));
}

std::string_view ByteReader::raw(std::size_t n) {
  need(n);
  auto out = in_.substr(pos_, n);
  pos_ += n;
  return out;
}

Version ByteReader::version() {
  const auto block = u64();
  const auto tx = u64();
  return unpack_version(block, tx);
}

}  // namespace snapiso
