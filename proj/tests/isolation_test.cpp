#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include "snapiso/isolation.hpp"
#include "snapiso/oracle.hpp"
#include "snapiso/scheduler.hpp"
#include "test_util.hpp"

namespace snapiso {
namespace {

using namespace std::chrono_literals;

TEST(Strategy, NamesRoundTrip) {
  for (auto s : {IsolationStrategy::lockless, IsolationStrategy::lock_based, IsolationStrategy::none}) {
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  }
  EXPECT_EQ(parse_strategy("lock_based"), IsolationStrategy::lock_based);
  EXPECT_THROW(parse_strategy("optimal"), std::invalid_argument);
}

TEST(FairSharedMutex, ReadersShareWritersExclude) {
  FairSharedMutex m;
  m.lock_shared();
  EXPECT_TRUE(m.try_lock_shared());
  EXPECT_FALSE(m.try_lock());
  m.unlock_shared();
  m.unlock_shared();
  EXPECT_TRUE(m.try_lock());
  EXPECT_FALSE(m.try_lock_shared());
  m.unlock();
}

TEST(FairSharedMutex, WaitingWriterBlocksNewReaders) {
  FairSharedMutex m;
  m.lock_shared();
  std::atomic<bool> writer_in{false};
  std::thread writer([&] {
    m.lock();
    writer_in = true;
    m.unlock();
  });
  // Give the writer time to queue.
  std::this_thread::sleep_for(50ms);
  EXPECT_FALSE(m.try_lock_shared());
  EXPECT_FALSE(writer_in.load());
  m.unlock_shared();
  writer.join();
  EXPECT_TRUE(writer_in.load());
}

TEST(FairSharedMutex, ReadersQueuedBehindWriterGoBeforeNextWriter) {
  FairSharedMutex m;
  m.lock();
  std::vector<int> order;
  std::mutex order_mu;
  auto note = [&](int who) {
    std::lock_guard lock(order_mu);
    order.push_back(who);
  };
  std::thread reader([&] {
    m.lock_shared();
    note(1);
    std::this_thread::sleep_for(20ms);
    m.unlock_shared();
  });
  std::this_thread::sleep_for(30ms);
  std::thread writer([&] {
    m.lock();
    note(2);
    m.unlock();
  });
  std::this_thread::sleep_for(30ms);
  m.unlock();
  reader.join();
  writer.join();
  EXPECT_EQ(order, (std::vector<int>{1, 2}));
}

TEST(IsolationLock, GuardsAreNoOpsOutsideLockBased) {
  for (auto s : {IsolationStrategy::lockless, IsolationStrategy::none}) {
    IsolationLock iso(s);
    auto r = iso.read_guard();
    auto c = iso.try_commit_guard();
    EXPECT_TRUE(c.has_value());
    EXPECT_FALSE(r.owns_lock());
  }
  IsolationLock lb(IsolationStrategy::lock_based);
  EXPECT_FALSE(lb.checks_versions());
  auto r = lb.read_guard();
  EXPECT_TRUE(r.owns_lock());
  EXPECT_FALSE(lb.try_commit_guard());
  r.unlock();
  EXPECT_TRUE(lb.try_commit_guard());
}

// Table I: tx1 reads A, a block writing A and B commits, tx1 reads B.
std::vector<Step> table1_script() {
  return {steps::begin("tx1"),        steps::read("tx1", "A"),      steps::begin("tx2"),
          steps::write("tx2", "A", "21"), steps::write("tx2", "B", "47"), steps::finish("tx2"),
          steps::commit(),            steps::read("tx1", "B"),      steps::finish("tx1"),
          steps::commit_all()};
}

TEST(Baselines, Table1UnderLockless) {
  Engine engine(testing::table1_snapshot(), EngineConfig{});
  Scheduler sched(engine);
  const auto script = table1_script();
  const auto h = sched.run(script);
  EXPECT_EQ(sched.context("tx1").status(), SimStatus::aborted);
  EXPECT_TRUE(readsets_identical(sched.context("tx1").readset(), ReadSet{{"A", Version{100, 250}}}));
  EXPECT_EQ(h.txs[0].outcome, TxOutcome::aborted);
  EXPECT_EQ(h.txs[1].outcome, TxOutcome::valid);
  EXPECT_TRUE(check_serializable(h));
}

TEST(Baselines, Table1UnderLockBased) {
  Engine engine(testing::table1_snapshot(), EngineConfig{IsolationStrategy::lock_based, {}, {}});
  Scheduler sched(engine);
  const auto script = table1_script();
  const auto h = sched.run(script);
  // The commit waited for tx1 to end: tx1 read B's old value, then failed
  // MVCC because tx2 rewrote A.
  EXPECT_EQ(sched.context("tx1").status(), SimStatus::finished);
  const auto& reads = h.txs[0].reads;
  ASSERT_EQ(reads.size(), 2U);
  EXPECT_EQ(reads[1], (ObservedRead{"B", "46"}));
  EXPECT_EQ(h.txs[0].outcome, TxOutcome::mvcc_conflict);
  EXPECT_EQ(h.txs[1].outcome, TxOutcome::valid);
  // The commit step ran only after tx1 finished.
  const auto& order = sched.execution_order();
  const auto commit_pos = std::find(order.begin(), order.end(), 6U) - order.begin();
  const auto finish_pos = std::find(order.begin(), order.end(), 8U) - order.begin();
  EXPECT_GT(commit_pos, finish_pos);
  EXPECT_TRUE(check_serializable(h));
}

TEST(Baselines, Table1UnderNoneYieldsTornQueryView) {
  Engine engine(testing::table1_snapshot(), EngineConfig{IsolationStrategy::none, {}, {}});
  Scheduler sched(engine);
  auto script = table1_script();
  script[8] = steps::finish("tx1", /*submit=*/false);
  const auto h = sched.run(script);
  ASSERT_EQ(h.txs[0].reads.size(), 2U);
  EXPECT_EQ(h.txs[0].reads[0], (ObservedRead{"A", "20"}));
  EXPECT_EQ(h.txs[0].reads[1], (ObservedRead{"B", "47"}));
  EXPECT_EQ(h.txs[0].outcome, TxOutcome::query);
  EXPECT_FALSE(check_serializable(h));
}

TEST(Baselines, LockBasedNeverAbortsUnderThreads) {
  Engine engine(EngineConfig{IsolationStrategy::lock_based, {std::chrono::microseconds(20)}, {}});
  auto& p = engine.pipeline();
  testing::commit_one(p, "init", testing::puts({{"a", "0"}, {"b", "0"}, {"c", "0"}}));
  std::atomic<bool> done{false};
  std::atomic<int> aborts{0};
  std::thread committer([&] {
    for (int i = 0; i < 50; ++i) {
      testing::commit_one(p, "w" + std::to_string(i), testing::puts({{"a", "x"}, {"b", "y"}, {"c", "z"}}));
    }
    done = true;
  });
  std::vector<std::thread> sims;
  for (int t = 0; t < 3; ++t) {
    sims.emplace_back([&] {
      while (!done) {
        auto ctx = engine.simulator().begin();
        for (const char* k : {"a", "b", "c"}) {
          if (ctx.get(k).aborted()) {
            aborts.fetch_add(1);
          }
        }
        if (ctx.status() == SimStatus::active) {
          ctx.finish();
        }
      }
    });
  }
  committer.join();
  for (auto& t : sims) {
    t.join();
  }
  EXPECT_EQ(aborts.load(), 0);
}

TEST(Baselines, LockBasedCommitWaitsForActiveSimulation) {
  Engine engine(EngineConfig{IsolationStrategy::lock_based, {}, {}});
  auto ctx = engine.simulator().begin();
  engine.pipeline().submit(Transaction{"w", {}, testing::puts({{"A", "1"}})});
  auto block = engine.pipeline().cut_block();
  std::atomic<bool> committed{false};
  std::thread committer([&] {
    engine.pipeline().validate_and_commit(*block);
    committed = true;
  });
  std::this_thread::sleep_for(50ms);
  EXPECT_FALSE(committed.load());
  EXPECT_FALSE(ctx.get("A").value);
  ctx.finish();
  committer.join();
  EXPECT_TRUE(committed.load());
  EXPECT_EQ(engine.store().get_state("A")->value, "1");
}

TEST(Baselines, NoneSkipsVersionCheck) {
  Engine engine(testing::table1_snapshot(), EngineConfig{IsolationStrategy::none, {}, {}});
  auto ctx = engine.simulator().begin();
  testing::commit_one(engine.pipeline(), "w", testing::puts({{"B", "47"}}));
  const auto r = ctx.get("B");
  EXPECT_FALSE(r.aborted());
  EXPECT_EQ(r.value, "47");
}

}  // namespace
}  // namespace snapiso
