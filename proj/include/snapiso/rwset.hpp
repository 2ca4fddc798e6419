#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>

#include "snapiso/version.hpp"

namespace snapiso {

/// Version observed by a read. `std::nullopt` means the key was absent from
/// the store; tombstones are recorded with their (deleted) version.
using ReadVersion = std::optional<Version>;
inline constexpr std::nullopt_t kAbsent = std::nullopt;

/// Keys read during simulation, first read wins. Keys served from the
/// transaction's own writeset never appear here.
using ReadSet = std::map<std::string, ReadVersion, std::less<>>;

/// Buffered mutation of a single key.
struct WriteIntent {
  bool is_delete = false;
  std::string value;

  static WriteIntent put(std::string v) { return {false, std::move(v)}; }
  static WriteIntent erase() { return {true, {}}; }

  friend bool operator==(const WriteIntent&, const WriteIntent&) = default;
};

/// Last write wins per key; iteration is lexicographic by key.
using WriteSet = std::map<std::string, WriteIntent, std::less<>>;

/// Output of a finished simulation, ready for ordering.
struct Transaction {
  std::string id;
  ReadSet readset;
  WriteSet writeset;
};

bool readsets_identical(const ReadSet& a, const ReadSet& b) noexcept;

inline bool operator==(const Transaction& a, const Transaction& b) {
  return a.id == b.id && readsets_identical(a.readset, b.readset) && a.writeset == b.writeset;
}

inline bool readsets_identical(const ReadSet& a, const ReadSet& b) noexcept {
  if (a.size() != b.size()) {
    return false;
  }
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.has_value() != ib->second.has_value()) {
      return false;
    }
    if (ia->second && !identical(*ia->second, *ib->second)) {
      return false;
    }
  }
  return true;
}

}  // namespace snapiso
