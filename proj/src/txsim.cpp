#include "snapiso/txsim.hpp"

#include "snapiso/errors.hpp"

namespace snapiso {

std::string_view to_string(SimStatus s) noexcept {
  switch (s) {
    case SimStatus::active:
      return "active";
    case SimStatus::aborted:
      return "aborted";
    case SimStatus::finished:
      return "finished";
  }
  return "unknown";
}

SimulationContext::SimulationContext(std::string id, const StateStore& store, bool check_versions,
                                     ReadGuard guard, ActiveSimRegistry::Registration reg)
    : id_(std::move(id)),
      store_(&store),
      check_versions_(check_versions),
      guard_(std::move(guard)),
      registration_(std::move(reg)),
      savepoint_(registration_.savepoint()) {}

void SimulationContext::require_active(const char* op) const {
  if (status_ != SimStatus::active) {
    throw UsageError(std::string(op) + " on " + std::string(to_string(status_)) + " simulation " + id_);
  }
}

void SimulationContext::release() noexcept {
  registration_.release();
  if (guard_.owns_lock()) {
    guard_.unlock();
  }
}

ReadResult SimulationContext::get(std::string_view key) {
  require_active("get");
  if (auto it = writeset_.find(key); it != writeset_.end()) {
    if (it->second.is_delete) {
      return {};
    }
    return {ReadStatus::ok, it->second.value};
  }

  auto entry = store_->get_state(key);
  // Checked after the read: if the GC expired us and then removed a tombstone,
  // the flag is already visible here.
  if (registration_.revoked()) {
    abort();
    return {ReadStatus::aborted, std::nullopt};
  }
  if (check_versions_ && entry && entry->version > savepoint_) {
    abort();
    return {ReadStatus::aborted, std::nullopt};
  }
  readset_.try_emplace(std::string(key), entry ? ReadVersion{entry->version} : kAbsent);
  if (!entry || entry->is_tombstone()) {
    return {};
  }
  return {ReadStatus::ok, std::move(entry->value)};
}

void SimulationContext::put(std::string_view key, std::string value) {
  require_active("put");
  writeset_.insert_or_assign(std::string(key), WriteIntent::put(std::move(value)));
}

void SimulationContext::del(std::string_view key) {
  require_active("delete");
  writeset_.insert_or_assign(std::string(key), WriteIntent::erase());
}

Transaction SimulationContext::finish() {
  require_active("finish");
  status_ = SimStatus::finished;
  release();
  return Transaction{id_, readset_, writeset_};
}

void SimulationContext::abort() noexcept {
  if (status_ == SimStatus::active) {
    status_ = SimStatus::aborted;
  }
  release();
}

SimulationContext Simulator::begin(std::string id) {
  if (id.empty()) {
    id = "tx-" + std::to_string(next_id_.fetch_add(1, std::memory_order_relaxed));
  }
  // The shared lock (lock_based only) is taken before the savepoint is read
  // and held until finish/abort.
  auto guard = isolation_.read_guard();
  auto reg = registry_.register_current(store_);
  return SimulationContext(std::move(id), store_, isolation_.checks_versions(), std::move(guard),
                           std::move(reg));
}

}  // namespace snapiso
