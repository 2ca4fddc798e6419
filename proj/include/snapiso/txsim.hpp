#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "snapiso/gc.hpp"
#include "snapiso/isolation.hpp"
#include "snapiso/kvstore.hpp"
#include "snapiso/rwset.hpp"

namespace snapiso {

enum class SimStatus { active, aborted, finished };

std::string_view to_string(SimStatus s) noexcept;

enum class ReadStatus { ok, aborted };

/// Outcome of SimulationContext::get. An abort is a normal outcome, not a
/// fault: the caller drops the context and re-executes the proposal.
struct ReadResult {
  ReadStatus status = ReadStatus::ok;
  std::optional<std::string> value;

  bool aborted() const noexcept { return status == ReadStatus::aborted; }
};

class Simulator;

/// One executing transaction. Single-threaded use; move-only.
///
/// Reads are checked against the savepoint recorded at begin: any entry whose
/// version is newer than that savepoint may belong to a block that committed
/// (or is still committing) during the simulation, so the read aborts. Every
/// version that ends up in a finished context's readset is therefore <= the
/// recorded savepoint.
class SimulationContext {
 public:
  SimulationContext(SimulationContext&&) noexcept = default;
  SimulationContext& operator=(SimulationContext&&) noexcept = default;
  ~SimulationContext() = default;

  const std::string& id() const noexcept { return id_; }
  Savepoint savepoint() const noexcept { return savepoint_; }
  SimStatus status() const noexcept { return status_; }
  const ReadSet& readset() const noexcept { return readset_; }
  const WriteSet& writeset() const noexcept { return writeset_; }

  ReadResult get(std::string_view key);
  void put(std::string_view key, std::string value);
  void del(std::string_view key);

  /// Throws UsageError unless active.
  Transaction finish();
  /// Idempotent; also a no-op on a finished context.
  void abort() noexcept;

 private:
  friend class Simulator;
  SimulationContext(std::string id, const StateStore& store, bool check_versions, ReadGuard guard,
                    ActiveSimRegistry::Registration reg);

  void require_active(const char* op) const;
  void release() noexcept;

  std::string id_;
  const StateStore* store_;
  bool check_versions_;
  ReadGuard guard_;
  ActiveSimRegistry::Registration registration_;
  Savepoint savepoint_;
  ReadSet readset_;
  WriteSet writeset_;
  SimStatus status_ = SimStatus::active;
};

/// Creates simulation contexts bound to a store, the GC registry and the
/// engine's isolation strategy.
class Simulator {
 public:
  Simulator(const StateStore& store, ActiveSimRegistry& registry, IsolationLock& isolation) noexcept
      : store_(store), registry_(registry), isolation_(isolation) {}

  /// Empty id -> "tx-<n>".
  SimulationContext begin(std::string id = {});

  IsolationStrategy strategy() const noexcept { return isolation_.strategy(); }

 private:
  const StateStore& store_;
  ActiveSimRegistry& registry_;
  IsolationLock& isolation_;
  std::atomic<std::uint64_t> next_id_{1};
};

}  // namespace snapiso
