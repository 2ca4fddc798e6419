#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "snapiso/version.hpp"

namespace snapiso {

// Big-endian primitives shared by the snapshot and ledger formats.

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  /// 4-byte length prefix followed by the raw bytes.
  void bytes(std::string_view b);
  /// block_num then tx_num with the deleted flag in its MSB, 16 bytes.
  void version(const Version& v);
  void raw(std::string_view b) { buf_.append(b); }

  const std::string& data() const& noexcept { return buf_; }
  std::string data() && noexcept { return std::move(buf_); }
  std::size_t size() const noexcept { return buf_.size(); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) noexcept : in_(in) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::string bytes();
  Version version();
  std::string_view raw(std::size_t n);

  bool done() const noexcept { return pos_ == in_.size(); }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const;

  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace snapiso
