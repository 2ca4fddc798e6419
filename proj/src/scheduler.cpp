#include "snapiso/scheduler.hpp"

#include <list>
#include <set>

#include "snapiso/errors.hpp"

namespace snapiso {

namespace {

bool is_committer_step(StepKind k) noexcept {
  return k == StepKind::commit || k == StepKind::commit_all || k == StepKind::collect;
}

HistoryEvent make_event(EventKind kind, std::string tx = {}, std::string key = {},
                        std::optional<std::string> value = std::nullopt) {
  HistoryEvent e;
  e.kind = kind;
  e.tx = std::move(tx);
  e.key = std::move(key);
  e.value = std::move(value);
  return e;
}

}  // namespace

const SimulationContext& Scheduler::context(std::string_view tx) const {
  auto it = contexts_.find(tx);
  if (it == contexts_.end()) {
    throw UsageError("no simulation named " + std::string(tx));
  }
  return it->second;
}

SimulationContext& Scheduler::live_context(const std::string& tx) {
  auto it = contexts_.find(tx);
  if (it == contexts_.end()) {
    throw UsageError("script uses " + tx + " before its begin step");
  }
  return it->second;
}

TxRecord& Scheduler::record(const std::string& tx) { return history_.txs.at(record_index_.at(tx)); }

void Scheduler::note_commit(const Block& block, const std::vector<Verdict>& verdicts) {
  auto e = make_event(EventKind::commit);
  e.block_num = block.block_num;
  for (std::size_t i = 0; i < block.txs.size(); ++i) {
    const auto& id = block.txs[i].id;
    e.verdicts.emplace_back(id, verdicts[i]);
    if (auto it = record_index_.find(id); it != record_index_.end()) {
      history_.txs[it->second].outcome =
          verdicts[i] == Verdict::valid ? TxOutcome::valid : TxOutcome::mvcc_conflict;
    }
  }
  history_.events.push_back(std::move(e));
}

bool Scheduler::try_commit_one() {
  if (!held_) {
    held_ = engine_.pipeline().cut_block();
    if (!held_) {
      return true;  // nothing queued
    }
  }
  auto verdicts = engine_.pipeline().try_validate_and_commit(*held_);
  if (!verdicts) {
    writer_waiting_ = true;
    return false;
  }
  writer_waiting_ = false;
  note_commit(*held_, *verdicts);
  held_.reset();
  return true;
}

bool Scheduler::try_execute(const Step& step) {
  switch (step.kind) {
    case StepKind::begin: {
      if (engine_.strategy() == IsolationStrategy::lock_based && writer_waiting_) {
        return false;
      }
      if (contexts_.contains(step.tx)) {
        throw UsageError("transaction " + step.tx + " begun twice");
      }
      auto ctx = engine_.simulator().begin(step.tx);
      auto e = make_event(EventKind::begin, step.tx);
      e.savepoint = ctx.savepoint();
      history_.events.push_back(std::move(e));
      record_index_.emplace(step.tx, history_.txs.size());
      history_.txs.push_back(TxRecord{step.tx, TxOutcome::pending, {}, {}});
      contexts_.emplace(step.tx, std::move(ctx));
      return true;
    }
    case StepKind::read: {
      auto& ctx = live_context(step.tx);
      if (ctx.status() != SimStatus::active) {
        return true;
      }
      const bool own_write = ctx.writeset().contains(step.key);
      const auto entry = own_write ? std::nullopt : engine_.store().get_state(step.key);
      auto result = ctx.get(step.key);
      if (result.aborted()) {
        history_.events.push_back(make_event(EventKind::abort, step.tx, step.key));
        record(step.tx).outcome = TxOutcome::aborted;
        return true;
      }
      auto e = make_event(EventKind::read, step.tx, step.key, result.value);
      if (entry) {
        e.version = entry->version;
      }
      history_.events.push_back(std::move(e));
      if (!own_write) {
        record(step.tx).reads.push_back({step.key, result.value});
      }
      return true;
    }
    case StepKind::write:
    case StepKind::erase: {
      auto& ctx = live_context(step.tx);
      if (ctx.status() != SimStatus::active) {
        return true;
      }
      if (step.kind == StepKind::write) {
        ctx.put(step.key, step.value);
        history_.events.push_back(make_event(EventKind::write, step.tx, step.key, step.value));
      } else {
        ctx.del(step.key);
        history_.events.push_back(make_event(EventKind::erase, step.tx, step.key));
      }
      return true;
    }
    case StepKind::finish: {
      auto& ctx = live_context(step.tx);
      if (ctx.status() != SimStatus::active) {
        return true;
      }
      auto tx = ctx.finish();
      record(step.tx).writes = tx.writeset;
      history_.events.push_back(make_event(EventKind::finish, step.tx));
      if (step.submit) {
        engine_.pipeline().submit(std::move(tx));
      } else {
        record(step.tx).outcome = TxOutcome::query;
      }
      return true;
    }
    case StepKind::abort: {
      auto& ctx = live_context(step.tx);
      if (ctx.status() == SimStatus::active) {
        ctx.abort();
        history_.events.push_back(make_event(EventKind::abort, step.tx));
        record(step.tx).outcome = TxOutcome::aborted;
      }
      return true;
    }
    case StepKind::commit:
      return try_commit_one();
    case StepKind::commit_all:
      while (held_ || engine_.pipeline().pending() != 0) {
        if (!try_commit_one()) {
          return false;
        }
      }
      return true;
    case StepKind::collect: {
      if (engine_.strategy() == IsolationStrategy::lock_based && !engine_.isolation().try_commit_guard()) {
        return false;
      }
      engine_.pipeline().collect_garbage();
      history_.events.push_back(make_event(EventKind::collect));
      return true;
    }
  }
  return true;
}

History Scheduler::run(std::span<const Step> script) {
  history_ = History{};
  record_index_.clear();
  order_.clear();
  history_.initial = logical_state(engine_.store().snapshot());

  std::list<std::size_t> pending;
  for (std::size_t i = 0; i < script.size(); ++i) {
    pending.push_back(i);
  }
  while (!pending.empty()) {
    bool progressed = false;
    std::set<std::string_view> seen;
    for (auto it = pending.begin(); it != pending.end(); ++it) {
      const auto& step = script[*it];
      const std::string_view actor = is_committer_step(step.kind) ? std::string_view("\x01committer") : step.tx;
      // An earlier step of this actor is still pending; program order wins.
      if (!seen.insert(actor).second) {
        continue;
      }
      if (try_execute(step)) {
        order_.push_back(*it);
        pending.erase(it);
        progressed = true;
        break;
      }
    }
    if (!progressed) {
      throw UsageError("schedule deadlocked with " + std::to_string(pending.size()) + " steps left");
    }
  }
  history_.final_state = logical_state(engine_.store().snapshot());
  return history_;
}

}  // namespace snapiso
