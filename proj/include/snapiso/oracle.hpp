#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "snapiso/kvstore.hpp"
#include "snapiso/pipeline.hpp"
#include "snapiso/rwset.hpp"

namespace snapiso {

/// Live (non-tombstone) key/value pairs.
using LogicalState = std::map<std::string, std::string, std::less<>>;

LogicalState logical_state(const StateSnapshot& snap);

enum class EventKind { begin, read, write, erase, finish, abort, commit, collect };

std::string_view to_string(EventKind k) noexcept;

/// One step of a recorded run, in global order.
struct HistoryEvent {
  EventKind kind = EventKind::begin;
  std::string tx;
  std::string key;
  std::optional<std::string> value;  // read result or written value
  ReadVersion version;               // version behind a read, if any
  Savepoint savepoint;               // begin only
  std::uint64_t block_num = 0;       // commit only
  std::vector<std::pair<std::string, Verdict>> verdicts;  // commit only

  friend bool operator==(const HistoryEvent&, const HistoryEvent&);
};

/// Final fate of a transaction in a history.
///   valid / mvcc_conflict - submitted and validated
///   query                 - finished but never submitted; its reads were
///                           returned to the client, so they count as observed
///   aborted, pending      - neither committed nor externalized
enum class TxOutcome { valid, mvcc_conflict, query, aborted, pending };

std::string_view to_string(TxOutcome o) noexcept;

struct ObservedRead {
  std::string key;
  std::optional<std::string> value;

  friend bool operator==(const ObservedRead&, const ObservedRead&) = default;
};

struct TxRecord {
  std::string id;
  TxOutcome outcome = TxOutcome::pending;
  /// Every store-served read in program order (repeats included).
  std::vector<ObservedRead> reads;
  WriteSet writes;

  friend bool operator==(const TxRecord&, const TxRecord&) = default;
};

struct History {
  LogicalState initial;
  LogicalState final_state;
  std::vector<HistoryEvent> events;
  std::vector<TxRecord> txs;

  friend bool operator==(const History&, const History&) = default;
};

inline constexpr std::size_t kMaxSerializableCheck = 8;

/// Brute force: true iff some serial order of the valid and query
/// transactions, run from `initial`, reproduces every one of their observed
/// reads and ends in `final_state`. Throws UsageError for more than
/// kMaxSerializableCheck such transactions.
bool check_serializable(const History& history);

/// Line-delimited JSON, one object per line: a header with the initial and
/// final states, then one line per event, then one per transaction record.
/// Keys and values are hex-encoded so arbitrary bytes survive.
std::string export_history(const History& history);
History import_history(std::string_view text);

struct ReplayResult {
  StateSnapshot state;
  std::vector<std::vector<Verdict>> verdicts;
};

/// Re-runs validation and commit for a ledger from the empty store, applying
/// the GC removals recorded after each block. Throws StateError if the block
/// numbers do not run 1, 2, 3, ...
ReplayResult replay(std::span<const LedgerEntry> ledger);

}  // namespace snapiso
