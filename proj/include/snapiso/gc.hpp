#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "snapiso/version.hpp"

namespace snapiso {

class StateStore;
class ActiveSimRegistry;

struct Deletion {
  std::string key;
  Version version;

  friend bool operator==(const Deletion& a, const Deletion& b) noexcept {
    return a.key == b.key && identical(a.version, b.version);
  }
};

/// Deletes applied by commits, in commit order. Entries leave only through collect().
class DeletionLog {
 public:
  void append(std::string key, Version version);
  std::vector<Deletion> entries() const;
  std::size_t size() const;

 private:
  friend std::size_t collect(StateStore&, DeletionLog&, const ActiveSimRegistry&,
                             std::vector<std::string>*);
  mutable std::mutex mu_;
  std::deque<Deletion> entries_;
};

/// Savepoints of every ongoing simulation (a multiset: equal savepoints are
/// tracked separately).
class ActiveSimRegistry {
  struct Entry {
    Savepoint savepoint;
    std::chrono::steady_clock::time_point started;
    std::shared_ptr<std::atomic<bool>> revoked;
  };

 public:
  /// Membership token. Releasing twice is a no-op; the destructor releases.
  /// Must not outlive the registry it came from.
  class Registration {
   public:
    Registration() = default;
    Registration(Registration&& other) noexcept;
    Registration& operator=(Registration&& other) noexcept;
    Registration(const Registration&) = delete;
    Registration& operator=(const Registration&) = delete;
    ~Registration() { release(); }

    void release() noexcept;
    bool active() const noexcept { return registry_ != nullptr; }
    Savepoint savepoint() const noexcept { return savepoint_; }
    /// Set when the registry force-expired this simulation.
    bool revoked() const noexcept { return revoked_ && revoked_->load(std::memory_order_acquire); }

   private:
    friend class ActiveSimRegistry;
    ActiveSimRegistry* registry_ = nullptr;
    std::uint64_t id_ = 0;
    Savepoint savepoint_;
    std::shared_ptr<std::atomic<bool>> revoked_;
  };

  Registration register_savepoint(Savepoint sp);

  /// Reads the store's savepoint and registers it as one step, so a concurrent
  /// min_active_savepoint() either sees the registration or ran entirely before
  /// the savepoint was read.
  Registration register_current(const StateStore& store);

  void deregister(Registration& reg) noexcept { reg.release(); }

  std::optional<Savepoint> min_active_savepoint() const;
  std::size_t size() const;

  /// Marks simulations older than `max_age` as revoked and drops them from the
  /// registry. Returns how many were expired.
  std::size_t expire_older_than(std::chrono::steady_clock::duration max_age);

 private:
  Registration insert_locked(Savepoint sp);
  void erase(std::uint64_t id) noexcept;

  mutable std::mutex mu_;
  std::map<std::uint64_t, Entry> entries_;
  std::uint64_t next_id_ = 1;
};

/// Removes every logged tombstone whose version is below the minimum active
/// savepoint (or below the store savepoint when nothing is active). Log entries
/// for keys re-created since the delete are dropped without touching the key.
/// Must run serialized with commits. Returns the number of tombstones removed
/// and, if asked, their keys in removal order.
std::size_t collect(StateStore& store, DeletionLog& log, const ActiveSimRegistry& registry,
                    std::vector<std::string>* removed_keys = nullptr);

}  // namespace snapiso
