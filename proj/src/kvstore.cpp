#include "snapiso/kvstore.hpp"

#include <mutex>
#include <thread>

#include "snapiso/codec.hpp"
#include "snapiso/errors.hpp"
#include "snapiso/gc.hpp"

namespace snapiso {

struct StateStore::Shard {
  mutable std::shared_mutex mu;
  std::map<std::string, VersionedValue, std::less<>> entries;
};

std::ostream& operator<<(std::ostream& os, const VersionedValue& vv) {
  return os << '(' << (vv.is_tombstone() ? "<tombstone>" : vv.value) << ", " << vv.version << ')';
}

// Seqlock over the two halves of the savepoint. The single writer bumps the
// sequence to odd, stores, then bumps to even with release; readers retry
// until they see the same even sequence on both sides of their loads.
Savepoint StateStore::PublishedSavepoint::load() const noexcept {
  for (;;) {
    const auto s1 = seq_.load(std::memory_order_acquire);
    if (s1 & 1U) {
      std::this_thread::yield();
      continue;
    }
    const auto b = block_.load(std::memory_order_relaxed);
    const auto t = tx_.load(std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_acquire);
    if (seq_.load(std::memory_order_relaxed) == s1) {
      return {b, t};
    }
  }
}

void StateStore::PublishedSavepoint::store(Savepoint sp) noexcept {
  const auto s = seq_.load(std::memory_order_relaxed);
  seq_.store(s + 1, std::memory_order_relaxed);
  std::atomic_thread_fence(std::memory_order_release);
  block_.store(sp.block_num, std::memory_order_relaxed);
  tx_.store(sp.tx_num, std::memory_order_relaxed);
  seq_.store(s + 2, std::memory_order_release);
}

StateStore::StateStore(StoreConfig config)
    : shards_(std::make_unique<Shard[]>(config.shards == 0 ? 1 : config.shards)),
      shard_count_(config.shards == 0 ? 1 : config.shards),
      write_delay_us_(config.write_delay.count()) {}

StateStore::StateStore(const StateSnapshot& base, StoreConfig config) : StateStore(config) {
  for (const auto& [key, vv] : base.entries) {
    if (vv.is_tombstone() && !vv.value.empty()) {
      throw StateError("tombstone with payload for key " + key);
    }
    if (vv.version > base.savepoint) {
      throw StateError("entry " + key + " is newer than the snapshot savepoint");
    }
    shard_for(key).entries.emplace(key, vv);
  }
  savepoint_.store(base.savepoint);
}

StateStore::~StateStore() = default;

StateStore::Shard& StateStore::shard_for(std::string_view key) const noexcept {
  return shards_[std::hash<std::string_view>{}(key) % shard_count_];
}

std::optional<VersionedValue> StateStore::get_state(std::string_view key) const {
  const auto& shard = shard_for(key);
  std::shared_lock lock(shard.mu);
  if (auto it = shard.entries.find(key); it != shard.entries.end()) {
    return it->second;
  }
  return std::nullopt;
}

Savepoint StateStore::get_savepoint() const noexcept { return savepoint_.load(); }

void StateStore::apply(std::string_view key, VersionedValue vv) {
  if (const auto delay = write_delay_us_.load(std::memory_order_relaxed); delay > 0) {
    std::this_thread::sleep_for(std::chrono::microseconds(delay));
  }
  auto& shard = shard_for(key);
  {
    std::unique_lock lock(shard.mu);
    auto it = shard.entries.find(key);
    if (it == shard.entries.end()) {
      shard.entries.emplace(std::string(key), std::move(vv));
    } else {
      it->second = std::move(vv);
    }
  }
  if (observer_) {
    observer_(key);
  }
}

void StateStore::commit_block(std::uint64_t block_num, std::span<const TxWrites> writes,
                              std::uint64_t last_tx_num, DeletionLog* deletions) {
  const auto current = savepoint_.load();
  if (block_num != current.block_num + 1) {
    throw StateError("out-of-order block " + std::to_string(block_num) + ", expected " +
                     std::to_string(current.block_num + 1));
  }
  if (last_tx_num > kMaxTxNum) {
    throw StateError("last_tx_num exceeds 63 bits");
  }
  std::optional<std::uint64_t> prev;
  for (const auto& tw : writes) {
    if (tw.writes == nullptr) {
      throw StateError("null writeset in block " + std::to_string(block_num));
    }
    if (prev && tw.tx_num <= *prev) {
      throw StateError("writes not in ascending tx order in block " + std::to_string(block_num));
    }
    if (tw.tx_num > last_tx_num) {
      throw StateError("tx_num beyond last_tx_num in block " + std::to_string(block_num));
    }
    prev = tw.tx_num;
  }

  CommittedBlock record{block_num, last_tx_num, {}};
  record.writes.reserve(writes.size());
  for (const auto& tw : writes) {
    for (const auto& [key, intent] : *tw.writes) {
      if (intent.is_delete) {
        const Version v{block_num, tw.tx_num, true};
        apply(key, VersionedValue{{}, v});
        if (deletions != nullptr) {
          deletions->append(key, v);
        }
      } else {
        apply(key, VersionedValue{intent.value, Version{block_num, tw.tx_num, false}});
      }
    }
    record.writes.emplace_back(tw.tx_num, *tw.writes);
  }
  // Publish strictly after every entry write above is visible.
  savepoint_.store(Savepoint{block_num, last_tx_num});
  log_.emplace_back(std::move(record));
}

void StateStore::remove_entry(std::string_view key) {
  auto& shard = shard_for(key);
  {
    std::unique_lock lock(shard.mu);
    auto it = shard.entries.find(key);
    if (it == shard.entries.end()) {
      throw StateError("remove_entry: key not present: " + std::string(key));
    }
    if (!it->second.is_tombstone()) {
      throw StateError("remove_entry: key is live, refusing to remove: " + std::string(key));
    }
    shard.entries.erase(it);
  }
  log_.emplace_back(RemovedEntry{std::string(key)});
}

StateSnapshot StateStore::snapshot() const {
  StateSnapshot snap;
  for (std::size_t i = 0; i < shard_count_; ++i) {
    std::shared_lock lock(shards_[i].mu);
    snap.entries.insert(shards_[i].entries.begin(), shards_[i].entries.end());
  }
  snap.savepoint = savepoint_.load();
  return snap;
}

StateSnapshot StateStore::replay(std::span<const StoreLogRecord> log, const StateSnapshot& base) {
  StateStore store(base);
  for (const auto& rec : log) {
    if (const auto* block = std::get_if<CommittedBlock>(&rec)) {
      std::vector<TxWrites> tws;
      tws.reserve(block->writes.size());
      for (const auto& [tx, ws] : block->writes) {
        tws.push_back({tx, &ws});
      }
      store.commit_block(block->block_num, tws, block->last_tx_num);
    } else {
      store.remove_entry(std::get<RemovedEntry>(rec).key);
    }
  }
  return store.snapshot();
}

std::string encode_snapshot(const StateSnapshot& snap) {
  ByteWriter w;
  for (const auto& [key, vv] : snap.entries) {
    w.bytes(key);
    w.bytes(vv.value);
    w.version(vv.version);
  }
  w.version(snap.savepoint.version());
  return std::move(w).data();
}

StateSnapshot decode_snapshot(std::string_view bytes) {
  // The trailing savepoint record is exactly 16 bytes; everything before it is
  // key records.
  if (bytes.size() < 16) {
    throw DecodeError("snapshot shorter than the savepoint record");
  }
  ByteReader body(bytes.substr(0, bytes.size() - 16));
  StateSnapshot snap;
  while (!body.done()) {
    auto key = body.bytes();
    auto value = body.bytes();
    const auto v = body.version();
    if (v.deleted && !value.empty()) {
      throw DecodeError("tombstone with payload for key " + key);
    }
    if (!snap.entries.emplace(std::move(key), VersionedValue{std::move(value), v}).second) {
      throw DecodeError("duplicate key in snapshot");
    }
  }
  ByteReader tail(bytes.substr(bytes.size() - 16));
  const auto sp = tail.version();
  if (sp.deleted) {
    throw DecodeError("savepoint record has the deleted bit set");
  }
  snap.savepoint = Savepoint{sp.block_num, sp.tx_num};
  return snap;
}

}  // namespace snapiso
