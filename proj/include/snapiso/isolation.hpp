#pragma once

#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string_view>

namespace snapiso {

/// How simulations are isolated from concurrent block commits.
///
///   lockless   - savepoint version check on every read, no shared lock.
///   lock_based - store-wide readers-writer lock: shared for a whole
///                simulation, exclusive for a whole validate-and-commit.
///   none       - no isolation at all; only meaningful as a performance
///                upper bound in benchmarks and tests.
enum class IsolationStrategy { lockless, lock_based, none };

std::string_view to_string(IsolationStrategy s) noexcept;
/// Accepts "lockless", "lock-based" / "lock_based", "none". Throws std::invalid_argument.
IsolationStrategy parse_strategy(std::string_view name);

/// Phase-fair readers-writer mutex. A waiting writer blocks newly arriving
/// readers, and when a writer unlocks, every reader that queued behind it is
/// admitted before the next writer can enter. Neither side starves.
class FairSharedMutex {
 public:
  void lock();
  bool try_lock();
  void unlock();

  void lock_shared();
  bool try_lock_shared();
  void unlock_shared();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t readers_ = 0;
  std::size_t readers_waiting_ = 0;
  std::size_t writers_waiting_ = 0;
  std::uint64_t admit_generation_ = 0;
  bool writer_ = false;
};

using ReadGuard = std::shared_lock<FairSharedMutex>;
using CommitGuard = std::unique_lock<FairSharedMutex>;

/// Strategy-dependent guards. Under lock_based they hold the store-wide lock;
/// otherwise they are empty (no-op) guards.
class IsolationLock {
 public:
  explicit IsolationLock(IsolationStrategy strategy = IsolationStrategy::lockless) noexcept
      : strategy_(strategy) {}

  IsolationLock(const IsolationLock&) = delete;
  IsolationLock& operator=(const IsolationLock&) = delete;

  IsolationStrategy strategy() const noexcept { return strategy_; }
  /// True only for the lockless strategy: reads must run the savepoint check.
  bool checks_versions() const noexcept { return strategy_ == IsolationStrategy::lockless; }

  ReadGuard read_guard();
  CommitGuard commit_guard();
  /// nullopt when the exclusive lock is currently unavailable.
  std::optional<CommitGuard> try_commit_guard();

 private:
  IsolationStrategy strategy_;
  FairSharedMutex mu_;
};

}  // namespace snapiso
