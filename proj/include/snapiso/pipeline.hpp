#pragma once

#include <chrono>
#include <concepts>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snapiso/gc.hpp"
#include "snapiso/isolation.hpp"
#include "snapiso/kvstore.hpp"
#include "snapiso/rwset.hpp"
#include "snapiso/txsim.hpp"

namespace snapiso {

enum class Verdict : std::uint8_t { valid = 0, mvcc_conflict = 1 };

std::string_view to_string(Verdict v) noexcept;

struct Block {
  std::uint64_t block_num = 0;
  std::vector<Transaction> txs;

  friend bool operator==(const Block&, const Block&) = default;
};

/// One committed block as recorded by the peer: the block itself, a verdict per
/// transaction, and the tombstones the GC removed right after it committed.
struct LedgerEntry {
  Block block;
  std::vector<Verdict> verdicts;
  std::vector<std::string> gc_removed;

  friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

/// Export format: per block one record `u32 length | payload | '\n'`. The
/// payload holds the block number, transactions (id, readset with versions in
/// the snapshot encoding, writeset), verdicts and GC removals.
std::string encode_ledger(const std::vector<LedgerEntry>& ledger);
std::vector<LedgerEntry> decode_ledger(std::string_view bytes);

template <class V>
concept StateView = requires(const V& view, std::string_view key) {
  { view.get_state(key) } -> std::same_as<std::optional<VersionedValue>>;
};

/// True iff every read is still current in `view`: ABSENT reads need the key
/// to be truly absent (a tombstone does not match), versioned reads need the
/// exact version including the deleted flag.
template <StateView V>
bool mvcc_check(const ReadSet& readset, const V& view) {
  for (const auto& [key, rv] : readset) {
    const auto current = view.get_state(key);
    if (!rv) {
      if (current) {
        return false;
      }
      continue;
    }
    if (!current || !identical(current->version, *rv)) {
      return false;
    }
  }
  return true;
}

/// Store state overlaid with the writes of earlier valid transactions of the
/// block being validated.
class BatchView {
 public:
  BatchView(const StateStore& store, std::uint64_t block_num) noexcept
      : store_(store), block_num_(block_num) {}

  std::optional<VersionedValue> get_state(std::string_view key) const;
  void apply(std::uint64_t tx_num, const WriteSet& writes);

 private:
  const StateStore& store_;
  std::uint64_t block_num_;
  std::map<std::string, VersionedValue, std::less<>> overlay_;
};

struct PipelineConfig {
  std::size_t max_block_size = 10;
  /// Run the tombstone GC after every N-th block; 0 disables it.
  std::uint64_t gc_every_n_blocks = 10;
  /// Force-abort simulations registered for longer than this; 0 = never.
  std::chrono::milliseconds max_sim_lifetime{0};
};

/// In-process execute-order-validate backbone: a FIFO of submitted
/// transactions, block cutting, sequential MVCC validation and commit.
///
/// submit() is safe from any thread. Cutting, validation and commit belong to
/// a single committer thread.
class Pipeline {
 public:
  Pipeline(StateStore& store, ActiveSimRegistry& registry, IsolationLock& isolation,
           PipelineConfig config = {});

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  void submit(Transaction tx);
  std::size_t pending() const;

  /// Drains up to max_block_size transactions into the next block.
  std::optional<Block> cut_block();
  /// Waits until a full block is queued or `max_wait` passes, then cuts
  /// whatever is there (possibly nothing).
  std::optional<Block> wait_and_cut(std::chrono::microseconds max_wait);

  /// Validates each transaction against the batch view, commits the valid
  /// writesets with version (block_num, index), and appends to the ledger.
  /// Holds the commit guard for the whole call. Throws StateError for an
  /// out-of-order or empty block.
  std::vector<Verdict> validate_and_commit(const Block& block);
  /// Same, but returns nullopt instead of blocking when the commit guard is held.
  std::optional<std::vector<Verdict>> try_validate_and_commit(const Block& block);

  /// Runs a GC pass immediately (under the commit guard).
  std::size_t collect_garbage();

  const std::vector<LedgerEntry>& ledger() const noexcept { return ledger_; }
  DeletionLog& deletions() noexcept { return deletions_; }
  const DeletionLog& deletions() const noexcept { return deletions_; }
  const PipelineConfig& config() const noexcept { return config_; }

 private:
  std::vector<Verdict> commit_locked(const Block& block);
  std::size_t collect_locked(std::vector<std::string>* removed);

  StateStore& store_;
  ActiveSimRegistry& registry_;
  IsolationLock& isolation_;
  PipelineConfig config_;
  DeletionLog deletions_;

  mutable std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Transaction> queue_;
  std::uint64_t next_block_num_;

  std::vector<LedgerEntry> ledger_;
};

struct EngineConfig {
  IsolationStrategy strategy = IsolationStrategy::lockless;
  StoreConfig store;
  PipelineConfig pipeline;
};

/// Store, GC registry, isolation guards, simulator and pipeline wired together.
class Engine {
 public:
  explicit Engine(EngineConfig config = {});
  Engine(const StateSnapshot& base, EngineConfig config);

  StateStore& store() noexcept { return store_; }
  const StateStore& store() const noexcept { return store_; }
  ActiveSimRegistry& registry() noexcept { return registry_; }
  IsolationLock& isolation() noexcept { return isolation_; }
  Simulator& simulator() noexcept { return simulator_; }
  Pipeline& pipeline() noexcept { return pipeline_; }
  IsolationStrategy strategy() const noexcept { return isolation_.strategy(); }

 private:
  StateStore store_;
  ActiveSimRegistry registry_;
  IsolationLock isolation_;
  Simulator simulator_;
  Pipeline pipeline_;
};

}  // namespace snapiso
