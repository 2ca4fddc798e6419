#include "snapiso/isolation.hpp"

#include <stdexcept>
#include <string>

namespace snapiso {

std::string_view to_string(IsolationStrategy s) noexcept {
  switch (s) {
    case IsolationStrategy::lockless:
      return "lockless";
    case IsolationStrategy::lock_based:
      return "lock-based";
    case IsolationStrategy::none:
      return "none";
  }
  return "unknown";
}

IsolationStrategy parse_strategy(std::string_view name) {
  if (name == "lockless") {
    return IsolationStrategy::lockless;
  }
  if (name == "lock-based" || name == "lock_based") {
    return IsolationStrategy::lock_based;
  }
  if (name == "none") {
    return IsolationStrategy::none;
  }
  throw std::invalid_argument("unknown isolation strategy: " + std::string(name));
}

void FairSharedMutex::lock() {
  std::unique_lock l(mu_);
  ++writers_waiting_;
  cv_.wait(l, [this] { return !writer_ && readers_ == 0; });
  --writers_waiting_;
  writer_ = true;
}

bool FairSharedMutex::try_lock() {
  std::lock_guard l(mu_);
  if (writer_ || readers_ != 0) {
    return false;
  }
  writer_ = true;
  return true;
}

void FairSharedMutex::unlock() {
  {
    std::lock_guard l(mu_);
    writer_ = false;
    // Hand the lock to every reader that queued during this write phase.
    if (readers_waiting_ != 0) {
      readers_ += readers_waiting_;
      readers_waiting_ = 0;
      ++admit_generation_;
    }
  }
  cv_.notify_all();
}

void FairSharedMutex::lock_shared() {
  std::unique_lock l(mu_);
  if (!writer_ && writers_waiting_ == 0) {
    ++readers_;
    return;
  }
  ++readers_waiting_;
  const auto gen = admit_generation_;
  // unlock() already counted us in readers_.
  cv_.wait(l, [this, gen] { return admit_generation_ != gen; });
}

bool FairSharedMutex::try_lock_shared() {
  std::lock_guard l(mu_);
  if (writer_ || writers_waiting_ != 0) {
    return false;
  }
  ++readers_;
  return true;
}

void FairSharedMutex::unlock_shared() {
  bool wake = false;
  {
    std::lock_guard l(mu_);
    wake = --readers_ == 0;
  }
  if (wake) {
    cv_.notify_all();
  }
}

ReadGuard IsolationLock::read_guard() {
  if (strategy_ != IsolationStrategy::lock_based) {
    return {};
  }
  return ReadGuard(mu_);
}

CommitGuard IsolationLock::commit_guard() {
  if (strategy_ != IsolationStrategy::lock_based) {
    return {};
  }
  return CommitGuard(mu_);
}

std::optional<CommitGuard> IsolationLock::try_commit_guard() {
  if (strategy_ != IsolationStrategy::lock_based) {
    return CommitGuard{};
  }
  CommitGuard g(mu_, std::try_to_lock);
  if (!g.owns_lock()) {
    return std::nullopt;
  }
  return g;
}

}  // namespace snapiso
