#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "snapiso/isolation.hpp"
#include "snapiso/pipeline.hpp"

namespace snapiso::bench {

enum class WorkloadKind { read_only, write_only, mixed };

std::string_view to_string(WorkloadKind k) noexcept;
/// "read-only", "write-only", "mixed" (underscores accepted). Throws std::invalid_argument.
WorkloadKind parse_workload(std::string_view name);

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::write_only;
  std::size_t ops_per_tx = 10;
  std::size_t num_txs = 1000;
  std::size_t threads = 8;
  std::size_t block_size = 10;
  std::size_t key_space = 1000;
  std::chrono::microseconds write_delay_per_key{0};
  /// Sleep after every simulated get/put, standing in for the chaincode to
  /// peer round trip of each state call.
  std::chrono::microseconds op_latency{0};
  std::size_t iterations = 10;
  IsolationStrategy strategy = IsolationStrategy::lockless;
  std::uint64_t seed = 1;
  /// mixed only: probability that an operation is a read.
  double read_fraction = 0.5;
  /// Re-executions allowed after an aborted simulation.
  std::size_t retry_limit = 5;
  /// Committer's block-cut time trigger.
  std::chrono::microseconds cut_timeout{2000};
};

/// Throws std::invalid_argument. num_txs may be zero (empty report).
void validate(const WorkloadSpec& spec);

struct ReportRow {
  IsolationStrategy strategy = IsolationStrategy::lockless;
  WorkloadKind workload = WorkloadKind::write_only;
  std::size_t ops_per_tx = 0;
  std::size_t threads = 0;
  /// Iteration index, or -1 for the aggregate row.
  int iteration = 0;
  /// Mean time from the first begin of a transaction to its final finish or
  /// give-up, retries included.
  double mean_sim_latency_ms = 0;
  /// Endorsed transactions per second over the simulation phase.
  double throughput_tps = 0;
  /// Aborted simulation attempts (retried ones included).
  double aborts = 0;
  double mvcc_failures = 0;

  // Not part of the CSV.
  double committed = 0;
  double permanently_aborted = 0;
  double total_ms = 0;  ///< wall time until the last block committed
  bool replay_matches = true;
};

struct BenchReport {
  std::vector<ReportRow> iterations;
  std::optional<ReportRow> aggregate;  ///< mean over iterations
};

/// Runs `spec.iterations` independent iterations on fresh engines. Each
/// iteration preloads the key space in block 1, runs `threads` simulation
/// workers plus one committer, and afterwards replays the ledger from empty
/// to confirm the live state and verdicts are reproduced exactly.
BenchReport run(const WorkloadSpec& spec);

/// Single iteration; `iteration` seeds the RNG together with spec.seed.
ReportRow run_iteration(const WorkloadSpec& spec, int iteration);

inline constexpr std::string_view kCsvHeader =
    "strategy,workload,ops_per_tx,threads,iteration,mean_sim_latency_ms,throughput_tps,aborts,mvcc_failures";

void write_csv_row(std::ostream& os, const ReportRow& row);
/// Header, one row per iteration, then the aggregate row with iteration "mean".
void write_csv(std::ostream& os, const BenchReport& report, bool header = true);

}  // namespace snapiso::bench
