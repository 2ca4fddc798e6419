#include "snapiso/oracle.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"
#include "snapiso/errors.hpp"

namespace snapiso {

using nlohmann::json;

LogicalState logical_state(const StateSnapshot& snap) {
  LogicalState out;
  for (const auto& [key, vv] : snap.entries) {
    if (!vv.is_tombstone()) {
      out.emplace(key, vv.value);
    }
  }
  return out;
}

std::string_view to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::begin: return "begin";
    case EventKind::read: return "read";
    case EventKind::write: return "write";
    case EventKind::erase: return "delete";
    case EventKind::finish: return "finish";
    case EventKind::abort: return "abort";
    case EventKind::commit: return "commit";
    case EventKind::collect: return "collect";
  }
  return "unknown";
}

std::string_view to_string(TxOutcome o) noexcept {
  switch (o) {
    case TxOutcome::valid: return "valid";
    case TxOutcome::mvcc_conflict: return "mvcc_conflict";
    case TxOutcome::query: return "query";
    case TxOutcome::aborted: return "aborted";
    case TxOutcome::pending: return "pending";
  }
  return "unknown";
}

bool operator==(const HistoryEvent& a, const HistoryEvent& b) {
  const bool versions_match =
      a.version.has_value() == b.version.has_value() && (!a.version || identical(*a.version, *b.version));
  return a.kind == b.kind && a.tx == b.tx && a.key == b.key && a.value == b.value && versions_match &&
         a.savepoint == b.savepoint && a.block_num == b.block_num && a.verdicts == b.verdicts;
}

bool check_serializable(const History& history) {
  std::vector<const TxRecord*> committed;
  for (const auto& tx : history.txs) {
    if (tx.outcome == TxOutcome::valid || tx.outcome == TxOutcome::query) {
      committed.push_back(&tx);
    }
  }
  if (committed.size() > kMaxSerializableCheck) {
    throw UsageError("check_serializable: " + std::to_string(committed.size()) +
                     " committed transactions exceeds the brute-force limit of " +
                     std::to_string(kMaxSerializableCheck));
  }

  std::vector<std::size_t> order(committed.size());
  std::iota(order.begin(), order.end(), 0);
  do {
    LogicalState state = history.initial;
    bool ok = true;
    for (auto idx : order) {
      const auto& tx = *committed[idx];
      for (const auto& read : tx.reads) {
        const auto it = state.find(read.key);
        const std::optional<std::string> seen =
            it == state.end() ? std::nullopt : std::optional<std::string>(it->second);
        if (seen != read.value) {
          ok = false;
          break;
        }
      }
      if (!ok) {
        break;
      }
      if (tx.outcome != TxOutcome::valid) {
        continue;  // queries externalize reads only
      }
      for (const auto& [key, intent] : tx.writes) {
        if (intent.is_delete) {
          state.erase(key);
        } else {
          state.insert_or_assign(key, intent.value);
        }
      }
    }
    if (ok && state == history.final_state) {
      return true;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return false;
}

namespace {

std::string hex(std::string_view bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 0xf]);
  }
  return out;
}

std::string unhex(std::string_view text) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw DecodeError("bad hex digit in history");
  };
  if (text.size() % 2 != 0) {
    throw DecodeError("odd-length hex string in history");
  }
  std::string out;
  out.reserve(text.size() / 2);
  for (std::size_t i = 0; i < text.size(); i += 2) {
    out.push_back(static_cast<char>(nibble(text[i]) * 16 + nibble(text[i + 1])));
  }
  return out;
}

json opt_hex(const std::optional<std::string>& v) { return v ? json(hex(*v)) : json(nullptr); }

std::optional<std::string> opt_unhex(const json& j) {
  if (j.is_null()) {
    return std::nullopt;
  }
  return unhex(j.get<std::string>());
}

json state_json(const LogicalState& s) {
  json out = json::object();
  for (const auto& [k, v] : s) {
    out[hex(k)] = hex(v);
  }
  return out;
}

LogicalState state_from_json(const json& j) {
  LogicalState s;
  for (const auto& [k, v] : j.items()) {
    s.emplace(unhex(k), unhex(v.get<std::string>()));
  }
  return s;
}

EventKind parse_event_kind(std::string_view s) {
  for (auto k : {EventKind::begin, EventKind::read, EventKind::write, EventKind::erase, EventKind::finish,
                 EventKind::abort, EventKind::commit, EventKind::collect}) {
    if (to_string(k) == s) {
      return k;
    }
  }
  throw DecodeError("unknown history event kind: " + std::string(s));
}

TxOutcome parse_outcome(std::string_view s) {
  for (auto o : {TxOutcome::valid, TxOutcome::mvcc_conflict, TxOutcome::query, TxOutcome::aborted,
                 TxOutcome::pending}) {
    if (to_string(o) == s) {
      return o;
    }
  }
  throw DecodeError("unknown transaction outcome: " + std::string(s));
}

}  // namespace

std::string export_history(const History& history) {
  std::string out;
  out += json{{"type", "history"}, {"initial", state_json(history.initial)},
              {"final", state_json(history.final_state)}}
             .dump();
  out += '\n';
  for (const auto& e : history.events) {
    json j{{"type", "event"},
           {"kind", to_string(e.kind)},
           {"tx", hex(e.tx)},
           {"key", hex(e.key)},
           {"value", opt_hex(e.value)},
           {"savepoint", {e.savepoint.block_num, e.savepoint.tx_num}},
           {"block", e.block_num}};
    j["version"] = e.version ? json{e.version->block_num, e.version->tx_num, e.version->deleted} : json(nullptr);
    json verdicts = json::array();
    for (const auto& [id, v] : e.verdicts) {
      verdicts.push_back({hex(id), to_string(v)});
    }
    j["verdicts"] = std::move(verdicts);
    out += j.dump();
    out += '\n';
  }
  for (const auto& tx : history.txs) {
    json reads = json::array();
    for (const auto& r : tx.reads) {
      reads.push_back({hex(r.key), opt_hex(r.value)});
    }
    json writes = json::array();
    for (const auto& [key, intent] : tx.writes) {
      writes.push_back({hex(key), intent.is_delete, hex(intent.value)});
    }
    out += json{{"type", "tx"}, {"id", hex(tx.id)}, {"outcome", to_string(tx.outcome)},
                {"reads", std::move(reads)}, {"writes", std::move(writes)}}
               .dump();
    out += '\n';
  }
  return out;
}

History import_history(std::string_view text) {
  History h;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "history") {
        h.initial = state_from_json(j.at("initial"));
        h.final_state = state_from_json(j.at("final"));
        have_header = true;
      } else if (type == "event") {
        HistoryEvent e;
        e.kind = parse_event_kind(j.at("kind").get<std::string>());
        e.tx = unhex(j.at("tx").get<std::string>());
        e.key = unhex(j.at("key").get<std::string>());
        e.value = opt_unhex(j.at("value"));
        const auto& sp = j.at("savepoint");
        e.savepoint = {sp.at(0).get<std::uint64_t>(), sp.at(1).get<std::uint64_t>()};
        e.block_num = j.at("block").get<std::uint64_t>();
        if (const auto& v = j.at("version"); !v.is_null()) {
          e.version = Version{v.at(0).get<std::uint64_t>(), v.at(1).get<std::uint64_t>(), v.at(2).get<bool>()};
        }
        for (const auto& v : j.at("verdicts")) {
          const auto name = v.at(1).get<std::string>();
          e.verdicts.emplace_back(unhex(v.at(0).get<std::string>()),
                                  name == "VALID" ? Verdict::valid : Verdict::mvcc_conflict);
        }
        h.events.push_back(std::move(e));
      } else if (type == "tx") {
        TxRecord tx;
        tx.id = unhex(j.at("id").get<std::string>());
        tx.outcome = parse_outcome(j.at("outcome").get<std::string>());
        for (const auto& r : j.at("reads")) {
          tx.reads.push_back({unhex(r.at(0).get<std::string>()), opt_unhex(r.at(1))});
        }
        for (const auto& w : j.at("writes")) {
          tx.writes.insert_or_assign(unhex(w.at(0).get<std::string>()),
                                     WriteIntent{w.at(1).get<bool>(), unhex(w.at(2).get<std::string>())});
        }
        h.txs.push_back(std::move(tx));
      } else {
        throw DecodeError("unknown history line type: " + type);
      }
    } catch (const json::exception& ex) {
      throw DecodeError(std::string("malformed history line: ") + ex.what());
    }
  }
  if (!have_header) {
    throw DecodeError("history has no header line");
  }
  return h;
}

ReplayResult replay(std::span<const LedgerEntry> ledger) {
  StateStore store;
  ActiveSimRegistry registry;
  IsolationLock isolation(IsolationStrategy::lockless);
  PipelineConfig config;
  config.gc_every_n_blocks = 0;
  config.max_block_size = 1;
  for (const auto& e : ledger) {
    config.max_block_size = std::max(config.max_block_size, e.block.txs.size());
  }
  Pipeline pipeline(store, registry, isolation, config);

  ReplayResult result;
  std::uint64_t expected = 1;
  for (const auto& e : ledger) {
    if (e.block.block_num != expected) {
      throw StateError("ledger gap: expected block " + std::to_string(expected) + ", found " +
                       std::to_string(e.block.block_num));
    }
    result.verdicts.push_back(pipeline.validate_and_commit(e.block));
    for (const auto& key : e.gc_removed) {
      store.remove_entry(key);
    }
    ++expected;
  }
  result.state = store.snapshot();
  return result;
}

}  // namespace snapiso
