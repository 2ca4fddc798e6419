#include "snapiso/gc.hpp"

#include <utility>

#include "snapiso/kvstore.hpp"

namespace snapiso {

void DeletionLog::append(std::string key, Version version) {
  std::lock_guard lock(mu_);
  entries_.push_back({std::move(key), version});
}

std::vector<Deletion> DeletionLog::entries() const {
  std::lock_guard lock(mu_);
  return {entries_.begin(), entries_.end()};
}

std::size_t DeletionLog::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

ActiveSimRegistry::Registration::Registration(Registration&& other) noexcept
    : registry_(std::exchange(other.registry_, nullptr)),
      id_(other.id_),
      savepoint_(other.savepoint_),
      revoked_(std::move(other.revoked_)) {}

ActiveSimRegistry::Registration& ActiveSimRegistry::Registration::operator=(Registration&& other) noexcept {
  if (this != &other) {
    release();
    registry_ = std::exchange(other.registry_, nullptr);
    id_ = other.id_;
    savepoint_ = other.savepoint_;
    revoked_ = std::move(other.revoked_);
  }
  return *this;
}

void ActiveSimRegistry::Registration::release() noexcept {
  if (registry_ != nullptr) {
    registry_->erase(id_);
    registry_ = nullptr;
  }
}

ActiveSimRegistry::Registration ActiveSimRegistry::insert_locked(Savepoint sp) {
  Registration reg;
  reg.registry_ = this;
  reg.id_ = next_id_++;
  reg.savepoint_ = sp;
  reg.revoked_ = std::make_shared<std::atomic<bool>>(false);
  entries_.emplace(reg.id_, Entry{sp, std::chrono::steady_clock::now(), reg.revoked_});
  return reg;
}

ActiveSimRegistry::Registration ActiveSimRegistry::register_savepoint(Savepoint sp) {
  std::lock_guard lock(mu_);
  return insert_locked(sp);
}

ActiveSimRegistry::Registration ActiveSimRegistry::register_current(const StateStore& store) {
  std::lock_guard lock(mu_);
  return insert_locked(store.get_savepoint());
}

void ActiveSimRegistry::erase(std::uint64_t id) noexcept {
  std::lock_guard lock(mu_);
  entries_.erase(id);
}

std::optional<Savepoint> ActiveSimRegistry::min_active_savepoint() const {
  std::lock_guard lock(mu_);
  std::optional<Savepoint> out;
  for (const auto& [id, e] : entries_) {
    if (!out || e.savepoint < *out) {
      out = e.savepoint;
    }
  }
  return out;
}

std::size_t ActiveSimRegistry::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::size_t ActiveSimRegistry::expire_older_than(std::chrono::steady_clock::duration max_age) {
  const auto cutoff = std::chrono::steady_clock::now() - max_age;
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (it->second.started < cutoff) {
      // Flag first: the simulation re-checks it after every store read.
      it->second.revoked->store(true, std::memory_order_seq_cst);
      it = entries_.erase(it);
      ++n;
    } else {
      ++it;
    }
  }
  return n;
}

std::size_t collect(StateStore& store, DeletionLog& log, const ActiveSimRegistry& registry,
                    std::vector<std::string>* removed_keys) {
  // With nothing active, every simulation that starts from here on records at
  // least the current savepoint (no commit can interleave with collect).
  const Savepoint bound = registry.min_active_savepoint().value_or(store.get_savepoint());

  std::lock_guard lock(log.mu_);
  std::size_t removed = 0;
  std::deque<Deletion> kept;
  for (auto& d : log.entries_) {
    if (!(d.version < bound)) {
      kept.push_back(std::move(d));
      continue;
    }
    const auto current = store.get_state(d.key);
    // Skip keys re-created (or re-deleted) since this log entry was written.
    if (current && current->is_tombstone() && identical(current->version, d.version)) {
      store.remove_entry(d.key);
      ++removed;
      if (removed_keys != nullptr) {
        removed_keys->push_back(d.key);
      }
    }
  }
  log.entries_ = std::move(kept);
  return removed;
}

}  // namespace snapiso
