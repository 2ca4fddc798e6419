#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "snapiso/errors.hpp"
#include "snapiso/pipeline.hpp"
#include "snapiso/scheduler.hpp"
#include "test_util.hpp"

namespace snapiso {
namespace {

using testing::puts;
using testing::table1_snapshot;

EngineConfig lockless() { return EngineConfig{IsolationStrategy::lockless, {}, {}}; }

TEST(Simulation, BeginRecordsSavepointAndRegisters) {
  Engine engine(table1_snapshot(), lockless());
  auto ctx = engine.simulator().begin();
  EXPECT_EQ(ctx.savepoint(), (Savepoint{100, 275}));
  EXPECT_EQ(ctx.status(), SimStatus::active);
  EXPECT_TRUE(ctx.readset().empty());
  EXPECT_TRUE(ctx.writeset().empty());
  ASSERT_TRUE(engine.registry().min_active_savepoint());
  EXPECT_LE(*engine.registry().min_active_savepoint(), (Savepoint{100, 275}));
  EXPECT_FALSE(ctx.id().empty());
}

TEST(Simulation, BeginOnFreshStoreIsPreGenesis) {
  Engine engine;
  EXPECT_EQ(engine.simulator().begin().savepoint(), (Savepoint{0, 0}));
}

TEST(Simulation, ReadBelowSavepointIsRecorded) {
  Engine engine(table1_snapshot(), lockless());
  auto ctx = engine.simulator().begin();
  const auto r = ctx.get("A");
  ASSERT_FALSE(r.aborted());
  EXPECT_EQ(r.value, "20");
  ASSERT_EQ(ctx.readset().size(), 1U);
  EXPECT_TRUE(identical(*ctx.readset().at("A"), Version{100, 250}));
}

TEST(Simulation, ReadAboveSavepointAborts) {
  Engine engine(table1_snapshot(), lockless());
  auto ctx = engine.simulator().begin();
  ASSERT_FALSE(ctx.get("A").aborted());
  WriteSet ws = puts({{"A", "21"}, {"B", "47"}});
  const TxWrites tw{345, &ws};
  engine.store().commit_block(101, std::span(&tw, 1), 345);

  const auto r = ctx.get("B");
  EXPECT_TRUE(r.aborted());
  EXPECT_EQ(ctx.status(), SimStatus::aborted);
  EXPECT_EQ(engine.registry().size(), 0U);
  EXPECT_THROW(ctx.finish(), UsageError);
  EXPECT_THROW(ctx.get("A"), UsageError);
  EXPECT_THROW(ctx.put("A", "1"), UsageError);
}

TEST(Simulation, MissingKeyRecordsAbsent) {
  Engine engine(table1_snapshot(), lockless());
  auto ctx = engine.simulator().begin();
  const auto r = ctx.get("Z");
  EXPECT_FALSE(r.aborted());
  EXPECT_FALSE(r.value);
  ASSERT_TRUE(ctx.readset().contains("Z"));
  EXPECT_FALSE(ctx.readset().at("Z").has_value());
}

TEST(Simulation, ReadYourOwnWritesSkipsReadset) {
  Engine engine(table1_snapshot(), lockless());
  auto ctx = engine.simulator().begin();
  ctx.put("K", "5");
  EXPECT_EQ(ctx.get("K").value, "5");
  EXPECT_FALSE(ctx.readset().contains("K"));
}

TEST(Simulation, TombstoneBelowSavepointReadsAbsent) {
  auto snap = table1_snapshot();
  snap.entries.emplace("D", VersionedValue{"", {100, 10, true}});
  Engine engine(snap, lockless());
  auto ctx = engine.simulator().begin();
  const auto r = ctx.get("D");
  EXPECT_FALSE(r.aborted());
  EXPECT_FALSE(r.value);
  EXPECT_TRUE(identical(*ctx.readset().at("D"), Version{100, 10, true}));
}

TEST(Simulation, LastWriteWins) {
  Engine engine;
  auto ctx = engine.simulator().begin();
  ctx.put("A", "21");
  EXPECT_EQ(ctx.writeset(), (WriteSet{{"A", WriteIntent::put("21")}}));
  ctx.put("A", "1");
  ctx.del("A");
  EXPECT_EQ(ctx.writeset(), (WriteSet{{"A", WriteIntent::erase()}}));
  EXPECT_FALSE(ctx.get("A").value);
  ctx.put("A", "2");
  EXPECT_EQ(ctx.writeset(), (WriteSet{{"A", WriteIntent::put("2")}}));
  EXPECT_TRUE(engine.store().commit_log().empty());
}

TEST(Simulation, FinishWithoutInterleavedCommit) {
  Engine engine(table1_snapshot(), lockless());
  auto ctx = engine.simulator().begin("tx1");
  ctx.get("A");
  ctx.get("B");
  const auto tx = ctx.finish();
  EXPECT_EQ(tx.id, "tx1");
  EXPECT_TRUE(readsets_identical(tx.readset, ReadSet{{"A", Version{100, 250}}, {"B", Version{100, 120}}}));
  EXPECT_TRUE(tx.writeset.empty());
  EXPECT_EQ(ctx.status(), SimStatus::finished);
  EXPECT_EQ(engine.registry().size(), 0U);
  EXPECT_THROW(ctx.finish(), UsageError);
}

TEST(Simulation, EmptyFinish) {
  Engine engine;
  auto tx = engine.simulator().begin().finish();
  EXPECT_TRUE(tx.readset.empty());
  EXPECT_TRUE(tx.writeset.empty());
}

TEST(Simulation, AbortIsIdempotentAndDeregisters) {
  Engine engine(table1_snapshot(), lockless());
  auto ctx = engine.simulator().begin();
  auto other = engine.simulator().begin();
  EXPECT_EQ(engine.registry().size(), 2U);
  ctx.abort();
  EXPECT_EQ(ctx.status(), SimStatus::aborted);
  ctx.abort();
  EXPECT_EQ(ctx.status(), SimStatus::aborted);
  EXPECT_EQ(engine.registry().size(), 1U);
}

TEST(Simulation, DestroyedContextLeavesRegistry) {
  Engine engine;
  { auto ctx = engine.simulator().begin(); }
  EXPECT_EQ(engine.registry().size(), 0U);
}

TEST(Simulation, RepeatReadKeepsFirstVersionButStillChecks) {
  Engine engine(table1_snapshot(), lockless());
  auto ctx = engine.simulator().begin();
  ASSERT_EQ(ctx.get("A").value, "20");
  EXPECT_EQ(ctx.get("A").value, "20");
  EXPECT_EQ(ctx.readset().size(), 1U);
  WriteSet ws = puts({{"A", "21"}});
  const TxWrites tw{0, &ws};
  engine.store().commit_block(101, std::span(&tw, 1), 0);
  EXPECT_TRUE(ctx.get("A").aborted());
}

// Readers racing a slow multi-key commit. Every read that returns must match
// the pre-commit state; touching any partially applied key aborts.
TEST(Simulation, ConsistentViewUnderConcurrentCommits) {
  constexpr int kKeys = 8;
  Engine engine(EngineConfig{IsolationStrategy::lockless, {std::chrono::microseconds(50)}, {}});
  auto& p = engine.pipeline();
  WriteSet init;
  for (int k = 0; k < kKeys; ++k) {
    init.emplace("k" + std::to_string(k), WriteIntent::put("0"));
  }
  testing::commit_one(p, "init", init);

  std::atomic<bool> done{false};
  std::atomic<long> violations{0};
  std::atomic<long> finished{0};
  std::thread reader([&] {
    std::mt19937 rng(5);
    while (!done.load()) {
      auto ctx = engine.simulator().begin();
      const auto expect = std::to_string(ctx.savepoint().block_num - 1);
      bool ok = true;
      for (int i = 0; i < kKeys && ok; ++i) {
        auto r = ctx.get("k" + std::to_string(rng() % kKeys));
        if (r.aborted()) {
          ok = false;
        } else if (r.value != expect) {
          violations.fetch_add(1);
        }
      }
      if (ok) {
        const auto tx = ctx.finish();
        for (const auto& [k, rv] : tx.readset) {
          if (!rv || *rv > ctx.savepoint()) {
            violations.fetch_add(1);
          }
        }
        finished.fetch_add(1);
      }
    }
  });
  // Block b writes value b-1 to every key.
  for (int b = 2; b <= 60; ++b) {
    WriteSet ws;
    for (int k = 0; k < kKeys; ++k) {
      ws.emplace("k" + std::to_string(k), WriteIntent::put(std::to_string(b - 1)));
    }
    testing::commit_one(p, "b" + std::to_string(b), ws);
  }
  done.store(true);
  reader.join();
  EXPECT_EQ(violations.load(), 0);
  EXPECT_GT(finished.load(), 0);
}

// Deterministic version of the above: a read issued from inside a commit,
// between two entry writes, sees the half-applied block and must abort.
TEST(Simulation, ReadInsidePartialCommitAborts) {
  Engine engine(table1_snapshot(), lockless());
  auto ctx = engine.simulator().begin();
  std::vector<bool> aborted;
  engine.store().set_write_observer([&](std::string_view key) {
    if (key == "A") {
      aborted.push_back(ctx.get("A").aborted());
    }
  });
  WriteSet ws = puts({{"A", "21"}, {"B", "47"}});
  const TxWrites tw{345, &ws};
  engine.store().commit_block(101, std::span(&tw, 1), 345);
  ASSERT_EQ(aborted, std::vector<bool>{true});
}

// Random two-transaction schedules: whenever a simulation aborts, its
// pre-abort readset plus the key it was reading (at the version it would
// have recorded without the interfering commit) fails MVCC afterwards.
TEST(Simulation, AbortImpliesMvccFailure) {
  std::mt19937 rng(17);
  int aborts = 0;
  for (int round = 0; round < 300; ++round) {
    Engine engine(EngineConfig{IsolationStrategy::lockless, {}, {10, 0, {}}});
    auto& p = engine.pipeline();
    WriteSet init;
    for (int k = 0; k < 4; ++k) {
      if (rng() % 4 != 0) {
        init.emplace("k" + std::to_string(k), WriteIntent::put("0"));
      }
    }
    if (init.empty()) {
      init.emplace("k0", WriteIntent::put("0"));
    }
    testing::commit_one(p, "init", init);
    const auto pre = engine.store().snapshot();

    auto ctx = engine.simulator().begin();
    const int before = static_cast<int>(rng() % 3);
    for (int i = 0; i < before; ++i) {
      ctx.get("k" + std::to_string(rng() % 4));
    }
    WriteSet ws;
    for (int i = 0, n = 1 + static_cast<int>(rng() % 3); i < n; ++i) {
      const auto key = "k" + std::to_string(rng() % 4);
      ws.insert_or_assign(key, rng() % 3 == 0 ? WriteIntent::erase() : WriteIntent::put("1"));
    }
    testing::commit_one(p, "w", ws);

    for (int i = 0; i < 3; ++i) {
      const auto key = "k" + std::to_string(rng() % 4);
      auto readset = ctx.readset();
      if (ctx.get(key).aborted()) {
        ++aborts;
        const auto old = pre.entries.find(key);
        readset.try_emplace(key, old == pre.entries.end() ? kAbsent : ReadVersion{old->second.version});
        EXPECT_FALSE(mvcc_check(readset, engine.store())) << "round " << round << " key " << key;
        break;
      }
    }
  }
  EXPECT_GT(aborts, 20);
}

}  // namespace
}  // namespace snapiso
