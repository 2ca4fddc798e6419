#include "snapiso/pipeline.hpp"

#include "snapiso/codec.hpp"
#include "snapiso/errors.hpp"

namespace snapiso {

std::string_view to_string(Verdict v) noexcept {
  return v == Verdict::valid ? "VALID" : "MVCC_CONFLICT";
}

std::optional<VersionedValue> BatchView::get_state(std::string_view key) const {
  if (auto it = overlay_.find(key); it != overlay_.end()) {
    return it->second;
  }
  return store_.get_state(key);
}

void BatchView::apply(std::uint64_t tx_num, const WriteSet& writes) {
  for (const auto& [key, intent] : writes) {
    VersionedValue vv{intent.is_delete ? std::string{} : intent.value,
                      Version{block_num_, tx_num, intent.is_delete}};
    overlay_.insert_or_assign(key, std::move(vv));
  }
}

Pipeline::Pipeline(StateStore& store, ActiveSimRegistry& registry, IsolationLock& isolation,
                   PipelineConfig config)
    : store_(store),
      registry_(registry),
      isolation_(isolation),
      config_(config),
      next_block_num_(store.get_savepoint().block_num + 1) {
  if (config_.max_block_size == 0) {
    throw UsageError("max_block_size must be positive");
  }
}

void Pipeline::submit(Transaction tx) {
  {
    std::lock_guard lock(queue_mu_);
    queue_.push_back(std::move(tx));
  }
  queue_cv_.notify_one();
}

std::size_t Pipeline::pending() const {
  std::lock_guard lock(queue_mu_);
  return queue_.size();
}

std::optional<Block> Pipeline::cut_block() {
  std::lock_guard lock(queue_mu_);
  if (queue_.empty()) {
    return std::nullopt;
  }
  Block block{next_block_num_++, {}};
  const auto n = std::min(queue_.size(), config_.max_block_size);
  block.txs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    block.txs.push_back(std::move(queue_.front()));
    queue_.pop_front();
  }
  return block;
}

std::optional<Block> Pipeline::wait_and_cut(std::chrono::microseconds max_wait) {
  {
    std::unique_lock lock(queue_mu_);
    queue_cv_.wait_for(lock, max_wait, [this] { return queue_.size() >= config_.max_block_size; });
  }
  return cut_block();
}

std::vector<Verdict> Pipeline::validate_and_commit(const Block& block) {
  auto guard = isolation_.commit_guard();
  return commit_locked(block);
}

std::optional<std::vector<Verdict>> Pipeline::try_validate_and_commit(const Block& block) {
  auto guard = isolation_.try_commit_guard();
  if (!guard) {
    return std::nullopt;
  }
  return commit_locked(block);
}

std::vector<Verdict> Pipeline::commit_locked(const Block& block) {
  const auto expected = store_.get_savepoint().block_num + 1;
  if (block.block_num != expected) {
    throw StateError("out-of-order block " + std::to_string(block.block_num) + ", expected " +
                     std::to_string(expected));
  }
  if (block.txs.empty()) {
    throw StateError("empty block " + std::to_string(block.block_num));
  }

  // Endorsement-policy validation would run here; signatures are out of scope
  // so every transaction passes it.
  BatchView view(store_, block.block_num);
  std::vector<Verdict> verdicts;
  std::vector<TxWrites> valid_writes;
  verdicts.reserve(block.txs.size());
  for (std::size_t i = 0; i < block.txs.size(); ++i) {
    const auto& tx = block.txs[i];
    if (mvcc_check(tx.readset, view)) {
      verdicts.push_back(Verdict::valid);
      view.apply(i, tx.writeset);
      if (!tx.writeset.empty()) {
        valid_writes.push_back({i, &tx.writeset});
      }
    } else {
      verdicts.push_back(Verdict::mvcc_conflict);
    }
  }

  store_.commit_block(block.block_num, valid_writes, block.txs.size() - 1, &deletions_);

  LedgerEntry entry{block, verdicts, {}};
  if (config_.gc_every_n_blocks != 0 && block.block_num % config_.gc_every_n_blocks == 0) {
    collect_locked(&entry.gc_removed);
  }
  ledger_.push_back(std::move(entry));
  return verdicts;
}

std::size_t Pipeline::collect_locked(std::vector<std::string>* removed) {
  if (config_.max_sim_lifetime.count() > 0) {
    registry_.expire_older_than(config_.max_sim_lifetime);
  }
  return collect(store_, deletions_, registry_, removed);
}

std::size_t Pipeline::collect_garbage() {
  auto guard = isolation_.commit_guard();
  std::vector<std::string> removed;
  const auto n = collect_locked(&removed);
  if (!ledger_.empty()) {
    auto& last = ledger_.back().gc_removed;
    last.insert(last.end(), removed.begin(), removed.end());
  }
  return n;
}

namespace {

void encode_entry(ByteWriter& w, const LedgerEntry& e) {
  w.u64(e.block.block_num);
  w.u32(static_cast<std::uint32_t>(e.block.txs.size()));
  for (const auto& tx : e.block.txs) {
    w.bytes(tx.id);
    w.u32(static_cast<std::uint32_t>(tx.readset.size()));
    for (const auto& [key, rv] : tx.readset) {
      w.bytes(key);
      w.u8(rv ? 1 : 0);
      if (rv) {
        w.version(*rv);
      }
    }
    w.u32(static_cast<std::uint32_t>(tx.writeset.size()));
    for (const auto& [key, intent] : tx.writeset) {
      w.bytes(key);
      w.u8(intent.is_delete ? 1 : 0);
      w.bytes(intent.value);
    }
  }
  w.u32(static_cast<std::uint32_t>(e.verdicts.size()));
  for (auto v : e.verdicts) {
    w.u8(static_cast<std::uint8_t>(v));
  }
  w.u32(static_cast<std::uint32_t>(e.gc_removed.size()));
  for (const auto& key : e.gc_removed) {
    w.bytes(key);
  }
}

LedgerEntry decode_entry(ByteReader& r) {
  LedgerEntry e;
  e.block.block_num = r.u64();
  const auto ntx = r.u32();
  for (std::uint32_t i = 0; i < ntx; ++i) {
    Transaction tx;
    tx.id = r.bytes();
    const auto nr = r.u32();
    for (std::uint32_t j = 0; j < nr; ++j) {
      auto key = r.bytes();
      ReadVersion rv = kAbsent;
      if (r.u8() != 0) {
        rv = r.version();
      }
      tx.readset.emplace(std::move(key), rv);
    }
    const auto nw = r.u32();
    for (std::uint32_t j = 0; j < nw; ++j) {
      auto key = r.bytes();
      const bool del = r.u8() != 0;
      auto value = r.bytes();
      tx.writeset.emplace(std::move(key), WriteIntent{del, std::move(value)});
    }
    e.block.txs.push_back(std::move(tx));
  }
  const auto nv = r.u32();
  for (std::uint32_t i = 0; i < nv; ++i) {
    const auto v = r.u8();
    if (v > 1) {
      throw DecodeError("bad verdict byte");
    }
    e.verdicts.push_back(static_cast<Verdict>(v));
  }
  const auto ng = r.u32();
  for (std::uint32_t i = 0; i < ng; ++i) {
    e.gc_removed.push_back(r.bytes());
  }
  return e;
}

}  // namespace

std::string encode_ledger(const std::vector<LedgerEntry>& ledger) {
  ByteWriter out;
  for (const auto& e : ledger) {
    ByteWriter payload;
    encode_entry(payload, e);
    out.bytes(payload.data());
    out.u8('\n');
  }
  return std::move(out).data();
}

std::vector<LedgerEntry> decode_ledger(std::string_view bytes) {
  std::vector<LedgerEntry> out;
  ByteReader r(bytes);
  while (!r.done()) {
    const auto payload = r.bytes();
    if (r.u8() != '\n') {
      throw DecodeError("ledger record not newline-terminated");
    }
    ByteReader pr(payload);
    out.push_back(decode_entry(pr));
    if (!pr.done()) {
      throw DecodeError("trailing bytes in ledger record");
    }
  }
  return out;
}

Engine::Engine(EngineConfig config)
    : store_(config.store),
      isolation_(config.strategy),
      simulator_(store_, registry_, isolation_),
      pipeline_(store_, registry_, isolation_, config.pipeline) {}

Engine::Engine(const StateSnapshot& base, EngineConfig config)
    : store_(base, config.store),
      isolation_(config.strategy),
      simulator_(store_, registry_, isolation_),
      pipeline_(store_, registry_, isolation_, config.pipeline) {}

}  // namespace snapiso
