#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "snapiso/rwset.hpp"
#include "snapiso/version.hpp"

namespace snapiso {

class DeletionLog;

/// What the store holds per key. Tombstones keep the deleting transaction's
/// version and carry no payload.
struct VersionedValue {
  std::string value;
  Version version;

  bool is_tombstone() const noexcept { return version.deleted; }

  friend bool operator==(const VersionedValue& a, const VersionedValue& b) noexcept {
    return a.value == b.value && identical(a.version, b.version);
  }
};

std::ostream& operator<<(std::ostream& os, const VersionedValue& vv);

/// Point-in-time copy of the store, also the unit of the dump/load format.
struct StateSnapshot {
  std::map<std::string, VersionedValue, std::less<>> entries;
  Savepoint savepoint;

  friend bool operator==(const StateSnapshot&, const StateSnapshot&) = default;
};

/// Records: u32 key len, key, u32 value len, value, u64 block, u64 tx|deleted<<63;
/// then a 16-byte savepoint record. All integers big-endian.
std::string encode_snapshot(const StateSnapshot& snap);
StateSnapshot decode_snapshot(std::string_view bytes);

/// Writes of one transaction inside a block commit.
struct TxWrites {
  std::uint64_t tx_num = 0;
  const WriteSet* writes = nullptr;
};

struct CommittedBlock {
  std::uint64_t block_num = 0;
  std::uint64_t last_tx_num = 0;
  std::vector<std::pair<std::uint64_t, WriteSet>> writes;
};

struct RemovedEntry {
  std::string key;
};

using StoreLogRecord = std::variant<CommittedBlock, RemovedEntry>;

struct StoreConfig {
  /// Sleep injected before every entry write of a commit; stands in for a
  /// slow document-store backend.
  std::chrono::microseconds write_delay{0};
  std::size_t shards = 16;
};

/// Versioned key-value state with a published savepoint.
///
/// Readers never take a store-wide lock: each key lives in one of a fixed set
/// of shards whose shared mutex is held only for the duration of a single
/// lookup or write. Commits are single-writer (the pipeline serializes them)
/// and publish the new savepoint only after every entry write of the block is
/// visible, so a reader that observes savepoint >= (b, t) also observes all of
/// block b.
class StateStore {
 public:
  explicit StateStore(StoreConfig config = {});
  /// Starts from a fixture snapshot instead of the empty pre-genesis state.
  explicit StateStore(const StateSnapshot& base, StoreConfig config = {});
  ~StateStore();

  StateStore(const StateStore&) = delete;
  StateStore& operator=(const StateStore&) = delete;

  /// Current entry, tombstones included.
  std::optional<VersionedValue> get_state(std::string_view key) const;

  Savepoint get_savepoint() const noexcept;

  /// Applies one block. Writes must be in ascending tx_num order and every
  /// tx_num must be <= last_tx_num. Deletes become tombstones and, when
  /// `deletions` is given, are appended to it. Throws StateError on an
  /// out-of-order block or malformed write list without touching state.
  void commit_block(std::uint64_t block_num, std::span<const TxWrites> writes,
                    std::uint64_t last_tx_num, DeletionLog* deletions = nullptr);

  /// Physically drops a tombstone. Throws StateError if the key is absent or live.
  void remove_entry(std::string_view key);

  /// Consistent only while no commit is in flight.
  StateSnapshot snapshot() const;

  /// Committer-thread view of every block and removal applied since construction.
  const std::vector<StoreLogRecord>& commit_log() const noexcept { return log_; }

  /// Replays a commit log on top of `base` (empty by default).
  static StateSnapshot replay(std::span<const StoreLogRecord> log, const StateSnapshot& base = {});

  void set_write_delay(std::chrono::microseconds d) noexcept { write_delay_us_.store(d.count()); }

  /// Test hook invoked on the committer thread after each entry write becomes
  /// visible and before the savepoint is published.
  void set_write_observer(std::function<void(std::string_view key)> fn) { observer_ = std::move(fn); }

 private:
  struct Shard;

  class PublishedSavepoint {
   public:
    Savepoint load() const noexcept;
    void store(Savepoint sp) noexcept;

   private:
    std::atomic<std::uint64_t> seq_{0};
    std::atomic<std::uint64_t> block_{0};
    std::atomic<std::uint64_t> tx_{0};
  };

  Shard& shard_for(std::string_view key) const noexcept;
  void apply(std::string_view key, VersionedValue vv);

  std::unique_ptr<Shard[]> shards_;
  std::size_t shard_count_;
  PublishedSavepoint savepoint_;
  std::atomic<std::int64_t> write_delay_us_;
  std::function<void(std::string_view)> observer_;
  std::vector<StoreLogRecord> log_;
};

}  // namespace snapiso
