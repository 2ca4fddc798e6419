#pragma once

#include <compare>
#include <cstdint>
#include <ostream>

namespace snapiso {

inline constexpr std::uint64_t kDeletedBit = std::uint64_t{1} << 63;
inline constexpr std::uint64_t kMaxTxNum = kDeletedBit - 1;

/// Position of a state mutation in the global commit order.
///
/// Ordering and equality look at (block_num, tx_num) only. The tombstone flag
/// travels with the version but never affects where it sorts; use
/// `identical()` when the flag must match as well.
struct Version {
  std::uint64_t block_num = 0;
  std::uint64_t tx_num = 0;
  bool deleted = false;

  friend constexpr std::weak_ordering operator<=>(const Version& a, const Version& b) noexcept {
    if (a.block_num != b.block_num) {
      return a.block_num <=> b.block_num;
    }
    return a.tx_num <=> b.tx_num;
  }
  friend constexpr bool operator==(const Version& a, const Version& b) noexcept {
    return a.block_num == b.block_num && a.tx_num == b.tx_num;
  }
};

constexpr bool identical(const Version& a, const Version& b) noexcept {
  return a == b && a.deleted == b.deleted;
}

/// Version of the last transaction of the most recently committed block.
/// (0,0) before the first commit; data blocks are numbered from 1.
struct Savepoint {
  std::uint64_t block_num = 0;
  std::uint64_t tx_num = 0;

  constexpr Version version() const noexcept { return {block_num, tx_num, false}; }

  friend constexpr auto operator<=>(const Savepoint&, const Savepoint&) = default;
};

constexpr std::weak_ordering operator<=>(const Version& v, const Savepoint& sp) noexcept {
  return v <=> sp.version();
}
constexpr bool operator==(const Version& v, const Savepoint& sp) noexcept {
  return v == sp.version();
}

/// Wire form of tx_num: the tombstone flag lives in the most significant bit.
std::uint64_t pack_tx_num(const Version& v);
Version unpack_version(std::uint64_t block_num, std::uint64_t packed_tx) noexcept;

inline std::ostream& operator<<(std::ostream& os, const Version& v) {
  os << '<' << v.block_num << ',' << v.tx_num;
  if (v.deleted) {
    os << ",deleted";
  }
  return os << '>';
}

inline std::ostream& operator<<(std::ostream& os, const Savepoint& sp) {
  return os << '<' << sp.block_num << ',' << sp.tx_num << '>';
}

}  // namespace snapiso
