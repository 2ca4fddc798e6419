#include "snapiso/bench.hpp"

#include <atomic>
#include <iomanip>
#include <random>
#include <stdexcept>
#include <thread>

#include "snapiso/oracle.hpp"

namespace snapiso::bench {

namespace {

using Clock = std::chrono::steady_clock;

struct Op {
  bool read = true;
  std::string key;
};

std::string key_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "k%06zu", k);
  return buf;
}

std::vector<Op> make_ops(const WorkloadSpec& spec, int iteration, std::size_t tx_index) {
  std::seed_seq seq{spec.seed, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(tx_index)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> pick_key(0, spec.key_space - 1);
  std::bernoulli_distribution is_read(spec.read_fraction);
  std::vector<Op> ops(spec.ops_per_tx);
  for (auto& op : ops) {
    switch (spec.kind) {
      case WorkloadKind::read_only:
        op.read = true;
        break;
      case WorkloadKind::write_only:
        op.read = false;
        break;
      case WorkloadKind::mixed:
        op.read = is_read(rng);
        break;
    }
    op.key = key_name(pick_key(rng));
  }
  return ops;
}

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

std::string_view to_string(WorkloadKind k) noexcept {
  switch (k) {
    case WorkloadKind::read_only:
      return "read-only";
    case WorkloadKind::write_only:
      return "write-only";
    case WorkloadKind::mixed:
      return "mixed";
  }
  return "unknown";
}

WorkloadKind parse_workload(std::string_view name) {
  if (name == "read-only" || name == "read_only") {
    return WorkloadKind::read_only;
  }
  if (name == "write-only" || name == "write_only") {
    return WorkloadKind::write_only;
  }
  if (name == "mixed") {
    return WorkloadKind::mixed;
  }
  throw std::invalid_argument("unknown workload: " + std::string(name));
}

void validate(const WorkloadSpec& spec) {
  auto require = [](bool ok, const char* what) {
    if (!ok) {
      throw std::invalid_argument(what);
    }
  };
  require(spec.ops_per_tx > 0, "ops_per_tx must be positive");
  require(spec.threads > 0, "threads must be positive");
  require(spec.block_size > 0, "block_size must be positive");
  require(spec.key_space > 0, "key_space must be positive");
  require(spec.iterations > 0, "iterations must be positive");
  require(spec.write_delay_per_key.count() >= 0, "write delay must be non-negative");
  require(spec.op_latency.count() >= 0, "op latency must be non-negative");
  require(spec.read_fraction >= 0.0 && spec.read_fraction <= 1.0, "read_fraction must be in [0,1]");
}

ReportRow run_iteration(const WorkloadSpec& spec, int iteration) {
  EngineConfig config;
  config.strategy = spec.strategy;
  config.store.write_delay = spec.write_delay_per_key;
  config.pipeline.max_block_size = spec.block_size;
  Engine engine(config);
  auto& pipeline = engine.pipeline();

  // Block 1 seeds every key, without the injected latency.
  engine.store().set_write_delay(std::chrono::microseconds{0});
  Transaction preload{"preload", {}, {}};
  for (std::size_t k = 0; k < spec.key_space; ++k) {
    preload.writeset.emplace(key_name(k), WriteIntent::put("v0"));
  }
  pipeline.submit(std::move(preload));
  pipeline.validate_and_commit(*pipeline.cut_block());
  engine.store().set_write_delay(spec.write_delay_per_key);

  std::atomic<std::size_t> next_tx{0};
  std::atomic<std::size_t> aborts{0};
  std::atomic<std::size_t> gave_up{0};
  std::atomic<std::size_t> endorsed{0};
  std::atomic<bool> workers_done{false};
  std::vector<double> latency_sum(spec.threads, 0.0);

  std::size_t valid = 0;
  std::size_t conflicts = 0;
  std::thread committer([&] {
    for (;;) {
      auto block = pipeline.wait_and_cut(spec.cut_timeout);
      if (block) {
        for (auto v : pipeline.validate_and_commit(*block)) {
          (v == Verdict::valid ? valid : conflicts) += 1;
        }
      } else if (workers_done.load(std::memory_order_acquire) && pipeline.pending() == 0) {
        break;
      }
    }
  });

  const auto start = Clock::now();
  std::vector<std::thread> workers;
  workers.reserve(spec.threads);
  for (std::size_t t = 0; t < spec.threads; ++t) {
    workers.emplace_back([&, t] {
      for (;;) {
        const auto i = next_tx.fetch_add(1, std::memory_order_relaxed);
        if (i >= spec.num_txs) {
          return;
        }
        const auto ops = make_ops(spec, iteration, i);
        const auto value = "v" + std::to_string(i);
        const auto t0 = Clock::now();
        for (std::size_t attempt = 0;; ++attempt) {
          auto ctx = engine.simulator().begin();
          bool aborted = false;
          for (const auto& op : ops) {
            if (op.read) {
              if (ctx.get(op.key).aborted()) {
                aborted = true;
                break;
              }
            } else {
              ctx.put(op.key, value);
            }
            if (spec.op_latency.count() > 0) {
              std::this_thread::sleep_for(spec.op_latency);
            }
          }
          if (!aborted) {
            pipeline.submit(ctx.finish());
            endorsed.fetch_add(1, std::memory_order_relaxed);
            break;
          }
          aborts.fetch_add(1, std::memory_order_relaxed);
          if (attempt >= spec.retry_limit) {
            gave_up.fetch_add(1, std::memory_order_relaxed);
            break;
          }
        }
        latency_sum[t] += ms_between(t0, Clock::now());
      }
    });
  }
  for (auto& w : workers) {
    w.join();
  }
  const auto sim_end = Clock::now();
  workers_done.store(true, std::memory_order_release);
  committer.join();
  const auto end = Clock::now();

  ReportRow row;
  row.strategy = spec.strategy;
  row.workload = spec.kind;
  row.ops_per_tx = spec.ops_per_tx;
  row.threads = spec.threads;
  row.iteration = iteration;
  double total_latency = 0;
  for (auto l : latency_sum) {
    total_latency += l;
  }
  row.mean_sim_latency_ms = spec.num_txs ? total_latency / static_cast<double>(spec.num_txs) : 0.0;
  const double sim_seconds = ms_between(start, sim_end) / 1000.0;
  row.throughput_tps = sim_seconds > 0 ? static_cast<double>(endorsed.load()) / sim_seconds : 0.0;
  row.aborts = static_cast<double>(aborts.load());
  row.mvcc_failures = static_cast<double>(conflicts);
  row.committed = static_cast<double>(valid);
  row.permanently_aborted = static_cast<double>(gave_up.load());
  row.total_ms = ms_between(start, end);

  const auto& ledger = pipeline.ledger();
  const auto replayed = replay(ledger);
  bool verdicts_match = replayed.verdicts.size() == ledger.size();
  for (std::size_t b = 0; verdicts_match && b < ledger.size(); ++b) {
    verdicts_match = replayed.verdicts[b] == ledger[b].verdicts;
  }
  row.replay_matches =
      verdicts_match && encode_snapshot(replayed.state) == encode_snapshot(engine.store().snapshot());
  return row;
}

BenchReport run(const WorkloadSpec& spec) {
  validate(spec);
  BenchReport report;
  if (spec.num_txs == 0) {
    return report;
  }
  for (std::size_t it = 0; it < spec.iterations; ++it) {
    report.iterations.push_back(run_iteration(spec, static_cast<int>(it)));
  }
  ReportRow agg = report.iterations.front();
  agg.iteration = -1;
  agg.mean_sim_latency_ms = agg.throughput_tps = agg.aborts = agg.mvcc_failures = 0;
  agg.committed = agg.permanently_aborted = agg.total_ms = 0;
  agg.replay_matches = true;
  for (const auto& r : report.iterations) {
    agg.mean_sim_latency_ms += r.mean_sim_latency_ms;
    agg.throughput_tps += r.throughput_tps;
    agg.aborts += r.aborts;
    agg.mvcc_failures += r.mvcc_failures;
    agg.committed += r.committed;
    agg.permanently_aborted += r.permanently_aborted;
    agg.total_ms += r.total_ms;
    agg.replay_matches = agg.replay_matches && r.replay_matches;
  }
  const auto n = static_cast<double>(report.iterations.size());
  agg.mean_sim_latency_ms /= n;
  agg.throughput_tps /= n;
  agg.aborts /= n;
  agg.mvcc_failures /= n;
  agg.committed /= n;
  agg.permanently_aborted /= n;
  agg.total_ms /= n;
  report.aggregate = agg;
  return report;
}

void write_csv_row(std::ostream& os, const ReportRow& row) {
  os << to_string(row.strategy) << ',' << to_string(row.workload) << ',' << row.ops_per_tx << ','
     << row.threads << ',';
  if (row.iteration < 0) {
    os << "mean";
  } else {
    os << row.iteration;
  }
  const auto flags = os.flags();
  os << std::fixed << std::setprecision(4) << ',' << row.mean_sim_latency_ms << ',' << row.throughput_tps
     << ',' << std::setprecision(row.iteration < 0 ? 2 : 0) << row.aborts << ',' << row.mvcc_failures << '\n';
  os.flags(flags);
}

void write_csv(std::ostream& os, const BenchReport& report, bool header) {
  if (header) {
    os << kCsvHeader << '\n';
  }
  for (const auto& r : report.iterations) {
    write_csv_row(os, r);
  }
  if (report.aggregate) {
    write_csv_row(os, *report.aggregate);
  }
}

}  // namespace snapiso::bench
