#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snapiso/oracle.hpp"
#include "snapiso/pipeline.hpp"
#include "snapiso/txsim.hpp"

namespace snapiso {

enum class StepKind { begin, read, write, erase, finish, abort, commit, commit_all, collect };

/// One line of an interleaving script. Transaction steps belong to the actor
/// named by `tx`; commit and collect steps belong to the committer.
struct Step {
  StepKind kind = StepKind::begin;
  std::string tx;
  std::string key;
  std::string value;
  /// finish only: submit for ordering (true) or return the result as a query.
  bool submit = true;
};

namespace steps {
inline Step begin(std::string tx) { return {StepKind::begin, std::move(tx), {}, {}, true}; }
inline Step read(std::string tx, std::string key) { return {StepKind::read, std::move(tx), std::move(key), {}, true}; }
inline Step write(std::string tx, std::string key, std::string value) {
  return {StepKind::write, std::move(tx), std::move(key), std::move(value), true};
}
inline Step erase(std::string tx, std::string key) { return {StepKind::erase, std::move(tx), std::move(key), {}, true}; }
inline Step finish(std::string tx, bool submit = true) { return {StepKind::finish, std::move(tx), {}, {}, submit}; }
inline Step abort(std::string tx) { return {StepKind::abort, std::move(tx), {}, {}, true}; }
/// Cut one block from the queue and validate/commit it.
inline Step commit() { return {StepKind::commit, {}, {}, {}, true}; }
/// Keep committing until the queue is empty.
inline Step commit_all() { return {StepKind::commit_all, {}, {}, {}, true}; }
inline Step collect() { return {StepKind::collect, {}, {}, {}, true}; }
}  // namespace steps

/// Deterministic single-threaded interleaving of simulations and commits.
///
/// Steps run in script order, except that a step which would block is
/// deferred together with every later step of the same actor, and the
/// earliest runnable step is retried after each execution. Under the
/// lock_based strategy a commit blocks while any simulation holds the shared
/// lock, and (phase fairness) a begin blocks while a commit is waiting. Steps
/// of an aborted transaction are skipped. A script whose remaining steps are
/// all blocked throws UsageError.
class Scheduler {
 public:
  explicit Scheduler(Engine& engine) noexcept : engine_(engine) {}

  History run(std::span<const Step> script);

  /// Context of a transaction begun by this scheduler; throws UsageError if unknown.
  const SimulationContext& context(std::string_view tx) const;
  bool has_context(std::string_view tx) const { return contexts_.find(tx) != contexts_.end(); }

  /// Script indices in the order they actually ran.
  const std::vector<std::size_t>& execution_order() const noexcept { return order_; }

 private:
  bool try_execute(const Step& step);
  bool try_commit_one();
  SimulationContext& live_context(const std::string& tx);
  TxRecord& record(const std::string& tx);
  void note_commit(const Block& block, const std::vector<Verdict>& verdicts);

  Engine& engine_;
  std::map<std::string, SimulationContext, std::less<>> contexts_;
  std::map<std::string, std::size_t, std::less<>> record_index_;
  std::optional<Block> held_;
  bool writer_waiting_ = false;
  History history_;
  std::vector<std::size_t> order_;
};

}  // namespace snapiso
