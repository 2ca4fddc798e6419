#include <gtest/gtest.h>

#include "snapiso/errors.hpp"
#include "snapiso/scheduler.hpp"
#include "test_util.hpp"

namespace snapiso {
namespace {

TEST(Scheduler, RunsScriptInOrderWhenNothingBlocks) {
  Engine engine;
  Scheduler sched(engine);
  const std::vector<Step> script = {steps::begin("a"), steps::write("a", "K", "1"), steps::finish("a"),
                                    steps::commit(), steps::begin("b"), steps::read("b", "K"),
                                    steps::finish("b", false)};
  const auto h = sched.run(script);
  EXPECT_EQ(sched.execution_order(), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(h.final_state, (LogicalState{{"K", "1"}}));
  ASSERT_EQ(h.txs.size(), 2U);
  EXPECT_EQ(h.txs[0].outcome, TxOutcome::valid);
  EXPECT_EQ(h.txs[1].outcome, TxOutcome::query);
  EXPECT_EQ(h.txs[1].reads, (std::vector<ObservedRead>{{"K", "1"}}));
}

TEST(Scheduler, CommitWithEmptyQueueIsANoOp) {
  Engine engine;
  Scheduler sched(engine);
  const std::vector<Step> script = {steps::commit(), steps::commit_all(), steps::collect()};
  const auto h = sched.run(script);
  EXPECT_TRUE(engine.pipeline().ledger().empty());
}

TEST(Scheduler, StepsAfterAbortAreSkipped) {
  Engine engine(testing::table1_snapshot(), EngineConfig{});
  Scheduler sched(engine);
  const std::vector<Step> script = {steps::begin("t"), steps::abort("t"), steps::read("t", "A"),
                                    steps::write("t", "A", "1"), steps::finish("t"), steps::commit_all()};
  const auto h = sched.run(script);
  EXPECT_EQ(h.txs[0].outcome, TxOutcome::aborted);
  EXPECT_TRUE(engine.pipeline().ledger().empty());
}

TEST(Scheduler, OwnWritesAreNotObservedReads) {
  Engine engine;
  Scheduler sched(engine);
  const std::vector<Step> script = {steps::begin("t"), steps::write("t", "K", "1"), steps::read("t", "K"),
                                    steps::finish("t", false)};
  const auto h = sched.run(script);
  EXPECT_TRUE(h.txs[0].reads.empty());
}

TEST(Scheduler, LockBasedDefersBlockedCommitAndLaterBegins) {
  Engine engine(EngineConfig{IsolationStrategy::lock_based, {}, {}});
  Scheduler sched(engine);
  const std::vector<Step> script = {
      steps::begin("w"), steps::write("w", "K", "1"), steps::finish("w"),
      steps::begin("r"),                  // 3: holds the shared lock
      steps::commit(),                    // 4: blocked until r ends
      steps::begin("late"),               // 5: blocked behind the waiting commit
      steps::read("r", "K"),              // 6
      steps::finish("r", false),          // 7
      steps::read("late", "K"),           // 8
      steps::finish("late", false)};      // 9
  const auto h = sched.run(script);
  EXPECT_EQ(sched.execution_order(), (std::vector<std::size_t>{0, 1, 2, 3, 6, 7, 4, 5, 8, 9}));
  EXPECT_EQ(h.txs[1].reads, (std::vector<ObservedRead>{{"K", std::nullopt}}));
  EXPECT_EQ(h.txs[2].reads, (std::vector<ObservedRead>{{"K", "1"}}));
  EXPECT_TRUE(check_serializable(h));
}

TEST(Scheduler, DeadlockIsReported) {
  Engine engine(EngineConfig{IsolationStrategy::lock_based, {}, {}});
  Scheduler sched(engine);
  // r never finishes, so the commit can never take the exclusive lock.
  const std::vector<Step> script = {steps::begin("w"), steps::finish("w"), steps::begin("r"),
                                    steps::commit()};
  EXPECT_THROW(sched.run(script), UsageError);
}

TEST(Scheduler, MisuseIsReported) {
  Engine engine;
  Scheduler sched(engine);
  const std::vector<Step> before_begin = {steps::read("ghost", "K")};
  EXPECT_THROW(sched.run(before_begin), UsageError);
  Scheduler again(engine);
  const std::vector<Step> twice = {steps::begin("t"), steps::begin("t")};
  EXPECT_THROW(again.run(twice), UsageError);
  EXPECT_THROW(again.context("nobody"), UsageError);
}

}  // namespace
}  // namespace snapiso
