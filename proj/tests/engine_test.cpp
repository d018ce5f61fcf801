#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <turtledb/core/hash.hpp>
#include <turtledb/engine/store.hpp>

#include "support/fault_env.hpp"
#include "support/oracle.hpp"
#include "support/temp_dir.hpp"

#include <random>
#include <thread>

using namespace turtledb;
using namespace turtledb::testing;

namespace {

Config small_config(u32 chi = 1)
{
  Config cfg;
  cfg.node_page_bytes = 4096;
  cfg.leaf_page_bytes = 8192;
  cfg.filter_page_bytes = 2048;
  cfg.block_bytes = 1024;
  cfg.pivot_capacity = 8;
  cfg.wal_block_bytes = 16 * 1024;
  cfg.chi = chi;
  cfg.memory_budget_bytes = 8 * 1024 * 1024;
  cfg.wal_poll_micros = 500;
  return cfg;
}

std::string tkey(int i)
{
  char buf[16];
  std::snprintf(buf, sizeof(buf), "key%06d", i);
  return buf;
}

}  // namespace

TEST_CASE("create, close, reopen: empty store")
{
  TempDir dir{"open"};
  {
    auto store = Store::open(dir.path() + "/db", small_config());
    REQUIRE(store.ok());
    auto got = (*store)->get("missing");
    REQUIRE(got.ok());
    CHECK_FALSE(got->has_value());
    REQUIRE((*store)->close().ok());
  }
  auto reopened = Store::open(dir.path() + "/db", small_config());
  REQUIRE(reopened.ok());
  auto rows = (*reopened)->scan("", 100);
  REQUIRE(rows.ok());
  CHECK(rows->empty());
}

TEST_CASE("structural config mismatch is rejected at open")
{
  TempDir dir{"cfgmismatch"};
  {
    auto store = Store::open(dir.path() + "/db", small_config());
    REQUIRE(store.ok());
    REQUIRE((*store)->close().ok());
  }
  Config other = small_config();
  other.leaf_page_bytes = 16 * 1024;
  auto bad = Store::open(dir.path() + "/db", other);
  REQUIRE_FALSE(bad.ok());
  CHECK(bad.status().code() == ErrorCode::kOpenFailure);

  // chi is a runtime knob, not persisted state: differing chi opens fine.
  auto fine = Store::open(dir.path() + "/db", small_config(/*chi=*/16));
  REQUIRE(fine.ok());
  CHECK((*fine)->checkpoint_distance() == 16);
}

TEST_CASE("put/get/delete basics with read-your-writes")
{
  TempDir dir{"basics"};
  auto store_or = Store::open(dir.path() + "/db", small_config());
  REQUIRE(store_or.ok());
  Store& store = **store_or;

  REQUIRE(store.put("alpha", "1").ok());
  auto got = store.get("alpha");
  REQUIRE(got.ok());
  REQUIRE(got->has_value());
  CHECK(**got == "1");

  // Overwrite in the active memtable wins immediately.
  REQUIRE(store.put("alpha", "2").ok());
  got = store.get("alpha");
  REQUIRE(got.ok());
  CHECK(**got == "2");

  // Delete of an absent key, then get -> absent.
  REQUIRE(store.del("ghost").ok());
  got = store.get("ghost");
  REQUIRE(got.ok());
  CHECK_FALSE(got->has_value());

  REQUIRE(store.del("alpha").ok());
  got = store.get("alpha");
  REQUIRE(got.ok());
  CHECK_FALSE(got->has_value());

  // Size-limit validation.
  CHECK(store.put("", "x").code() == ErrorCode::kInvalidArgument);
  CHECK(store.put(std::string(2000, 'k'), "x").code() == ErrorCode::kInvalidArgument);
  CHECK(store.put("k", std::string(1 << 20, 'v')).code() == ErrorCode::kInvalidArgument);
}

TEST_CASE("key in checkpoint only is found after flush and reopen")
{
  TempDir dir{"ckptread"};
  {
    auto store = Store::open(dir.path() + "/db", small_config());
    REQUIRE(store.ok());
    for (int i = 0; i < 500; ++i) {
      REQUIRE((*store)->put(tkey(i), "v" + std::to_string(i)).ok());
    }
    REQUIRE((*store)->flush().ok());
    // Everything is now durable in pages; memtable and deltas are empty.
    CHECK((*store)->deltas_depth() == 0);
    auto got = (*store)->get(tkey(123));
    REQUIRE(got.ok());
    CHECK(**got == "v123");
    REQUIRE((*store)->close().ok());
  }
  auto reopened = Store::open(dir.path() + "/db", small_config());
  REQUIRE(reopened.ok());
  auto got = (*reopened)->get(tkey(321));
  REQUIRE(got.ok());
  REQUIRE(got->has_value());
  CHECK(**got == "v321");
}

TEST_CASE("randomized mixed workload matches the oracle exactly")
{
  TempDir dir{"oracle"};
  auto store_or = Store::open(dir.path() + "/db", small_config(/*chi=*/4));
  REQUIRE(store_or.ok());
  Store& store = **store_or;
  OracleMap oracle;
  std::mt19937_64 rng{2024};

  for (int op = 0; op < 20000; ++op) {
    const int k = static_cast<int>(rng() % 1500);
    const std::string key = tkey(k);
    const int dice = static_cast<int>(rng() % 10);
    if (dice < 5) {
      const std::string value = "v" + std::to_string(rng() % 100000);
      REQUIRE(store.put(key, value).ok());
      oracle.put(key, value);
    } else if (dice < 7) {
      REQUIRE(store.del(key).ok());
      oracle.del(key);
    } else if (dice < 9) {
      auto got = store.get(key);
      REQUIRE(got.ok());
      auto expect = oracle.get(key);
      REQUIRE(got->has_value() == expect.has_value());
      if (expect.has_value()) {
        CHECK(**got == *expect);
      }
    } else {
      const size_t limit = rng() % 20;
      auto rows = store.scan(key, limit);
      REQUIRE(rows.ok());
      auto expect = oracle.range(key, limit);
      REQUIRE(rows->size() == expect.size());
      for (size_t i = 0; i < expect.size(); ++i) {
        CHECK((*rows)[i].first == expect[i].first);
        CHECK((*rows)[i].second == expect[i].second);
      }
    }
  }

  // Full-scan equality at the end.
  auto rows = store.scan("", 1u << 20);
  REQUIRE(rows.ok());
  REQUIRE(rows->size() == oracle.size());
  auto it = oracle.contents().begin();
  for (const auto& [k, v] : *rows) {
    CHECK(k == it->first);
    CHECK(v == it->second);
    ++it;
  }
}

TEST_CASE("scan spanning deleted keys suppresses them")
{
  TempDir dir{"scantomb"};
  auto store_or = Store::open(dir.path() + "/db", small_config());
  REQUIRE(store_or.ok());
  Store& store = **store_or;

  for (int i = 0; i < 20; ++i) {
    REQUIRE(store.put(tkey(i), "v").ok());
  }
  REQUIRE(store.flush().ok());
  REQUIRE(store.del(tkey(10)).ok());  // tombstone in the active memtable

  auto rows = store.scan(tkey(8), 5);
  REQUIRE(rows.ok());
  REQUIRE(rows->size() == 5);
  for (const auto& [k, v] : *rows) {
    CHECK(k != tkey(10));
  }

  // scan(first key, live count) returns all live keys.
  auto all = store.scan("", 100);
  REQUIRE(all.ok());
  CHECK(all->size() == 19);

  // limit = 0 -> empty.
  auto none = store.scan("", 0);
  REQUIRE(none.ok());
  CHECK(none->empty());
}

TEST_CASE("kill-style recovery: unsynced tail lost, synced prefix preserved")
{
  FaultEnv env;
  OracleMap oracle;
  u64 synced_ops = 0;
  {
    auto store_or = Store::open("db", small_config(/*chi=*/4), &env);
    REQUIRE(store_or.ok());
    Store& store = **store_or;
    for (int i = 0; i < 1000; ++i) {
      REQUIRE(store.put(tkey(i), "v" + std::to_string(i)).ok());
      oracle.put(tkey(i), "v" + std::to_string(i));
    }
    auto synced = store.sync_wal();
    REQUIRE(synced.ok());
    synced_ops = *synced;
    CHECK(synced_ops == 1000);
    // More writes that may not survive.
    for (int i = 1000; i < 1100; ++i) {
      (void)store.put(tkey(i), "late");
    }
    // No clean close: simulate power loss.
    env.arm_fail_after(0);
  }
  env.crash();

  auto reopened_or = Store::open("db", small_config(), &env);
  REQUIRE(reopened_or.ok());
  Store& reopened = **reopened_or;
  // Every synced op survives.
  for (int i = 0; i < 1000; ++i) {
    auto got = reopened.get(tkey(i));
    REQUIRE(got.ok());
    REQUIRE(got->has_value());
    CHECK(**got == "v" + std::to_string(i));
  }
  // The tail is a prefix: key i present implies key i-1 present.
  bool seen_absent = false;
  for (int i = 1000; i < 1100; ++i) {
    auto got = reopened.get(tkey(i));
    REQUIRE(got.ok());
    if (!got->has_value()) {
      seen_absent = true;
    } else {
      CHECK_FALSE(seen_absent);
    }
  }
}

TEST_CASE("cross-chi observational equivalence on identical update sequences")
{
  std::mt19937_64 rng{777};
  struct Op {
    bool del;
    int key;
    std::string value;
  };
  std::vector<Op> ops;
  for (int i = 0; i < 15000; ++i) {
    Op op;
    op.del = rng() % 6 == 0;
    op.key = static_cast<int>(rng() % 2000);
    op.value = "v" + std::to_string(rng() % 100000);
    ops.push_back(std::move(op));
  }

  std::vector<std::vector<std::pair<std::string, std::string>>> results;
  for (u32 chi : {1u, 4u, 16u}) {
    TempDir dir{"xchi" + std::to_string(chi)};
    auto store_or = Store::open(dir.path() + "/db", small_config(chi));
    REQUIRE(store_or.ok());
    Store& store = **store_or;
    for (const Op& op : ops) {
      if (op.del) {
        REQUIRE(store.del(tkey(op.key)).ok());
      } else {
        REQUIRE(store.put(tkey(op.key), op.value).ok());
      }
    }
    auto rows = store.scan("", 1u << 20);
    REQUIRE(rows.ok());
    results.push_back(std::move(*rows));
    REQUIRE(store.close().ok());
  }
  REQUIRE(results.size() == 3);
  CHECK(results[0] == results[1]);
  CHECK(results[0] == results[2]);
}

TEST_CASE("checkpoint distance knob: shrink flushes, widen extends, invalid rejected")
{
  TempDir dir{"chiknob"};
  auto store_or = Store::open(dir.path() + "/db", small_config(/*chi=*/8));
  REQUIRE(store_or.ok());
  Store& store = **store_or;

  CHECK(store.set_checkpoint_distance(0).status().code() == ErrorCode::kInvalidParameter);

  // Build up several pending batches.
  int key = 0;
  while (store.pipeline().batches_applied() < 5) {
    REQUIRE(store.put(tkey(key++), std::string(64, 'v')).ok());
  }
  CHECK(store.pipeline().batches_applied() >= 5);
  const u64 pages_before = store.stats().total_pool_pages_written();

  // Shrinking below the pending count forces one externalization.
  auto set = store.set_checkpoint_distance(1);
  REQUIRE(set.ok());
  CHECK(*set == 1);
  CHECK(store.pipeline().batches_applied() == 0);
  CHECK(store.stats().total_pool_pages_written() > pages_before);

  // 1 -> 1 is a no-op.
  const u64 pages_after = store.stats().total_pool_pages_written();
  REQUIRE(store.set_checkpoint_distance(1).ok());
  CHECK(store.stats().total_pool_pages_written() == pages_after);

  // Widening never flushes.
  REQUIRE(store.set_checkpoint_distance(64).ok());
  CHECK(store.stats().total_pool_pages_written() == pages_after);
  CHECK(store.checkpoint_distance() == 64);
}

TEST_CASE("write amplification drops when chi grows (pure load)")
{
  const auto load_waf = [&](u32 chi) {
    TempDir dir{"waf" + std::to_string(chi)};
    auto store_or = Store::open(dir.path() + "/db", small_config(chi));
    REQUIRE(store_or.ok());
    Store& store = **store_or;
    for (int i = 0; i < 4000; ++i) {
      REQUIRE(store.put(tkey(static_cast<int>(mix64(i) % 4000)), std::string(60, 'v')).ok());
    }
    REQUIRE(store.flush().ok());
    StatsSnapshot snap = store.stats();
    REQUIRE(store.close().ok());
    REQUIRE(snap.write_amp_defined);
    return snap.write_amplification;
  };

  const double waf1 = load_waf(1);
  const double waf16 = load_waf(16);
  CHECK(waf16 < waf1);
}

TEST_CASE("stats: write amp undefined on a fresh store, space amp bounded after load")
{
  TempDir dir{"stats"};
  auto store_or = Store::open(dir.path() + "/db", small_config(/*chi=*/4));
  REQUIRE(store_or.ok());
  Store& store = **store_or;

  StatsSnapshot fresh = store.stats();
  CHECK_FALSE(fresh.write_amp_defined);
  CHECK(fresh.write_amplification == 0.0);

  for (int i = 0; i < 3000; ++i) {
    REQUIRE(store.put(tkey(i), std::string(100, 'v')).ok());
  }
  REQUIRE(store.flush().ok());

  StatsSnapshot loaded = store.stats(/*compute_space_amp=*/true);
  CHECK(loaded.write_amp_defined);
  CHECK(loaded.write_amplification > 1.0);
  REQUIRE(loaded.space_amp_defined);
  CHECK(loaded.space_amplification > 0.9);
  CHECK(loaded.space_amplification <= 2.0);
}

TEST_CASE("concurrent writers and readers: per-key linearization by seq")
{
  TempDir dir{"mt"};
  auto store_or = Store::open(dir.path() + "/db", small_config(/*chi=*/2));
  REQUIRE(store_or.ok());
  Store& store = **store_or;

  constexpr int kWriters = 4;
  constexpr int kPerWriter = 3000;
  std::atomic<bool> failed{false};
  std::vector<std::thread> threads;
  for (int w = 0; w < kWriters; ++w) {
    threads.emplace_back([&, w] {
      for (int i = 0; i < kPerWriter && !failed; ++i) {
        // Disjoint key spaces per writer; a reader thread interleaves.
        Status s = store.put("w" + std::to_string(w) + "-" + tkey(i), "v" + std::to_string(i));
        if (!s.ok()) {
          failed = true;
        }
      }
    });
  }
  std::thread reader{[&] {
    std::mt19937_64 rng{1};
    for (int i = 0; i < 2000 && !failed; ++i) {
      const std::string key = "w" + std::to_string(rng() % kWriters) + "-" + tkey(static_cast<int>(rng() % kPerWriter));
      auto got = store.get(key);
      if (!got.ok()) {
        failed = true;
      }
    }
  }};
  for (auto& t : threads) {
    t.join();
  }
  reader.join();
  REQUIRE_FALSE(failed.load());

  // Every written key is present with its final value.
  for (int w = 0; w < kWriters; ++w) {
    for (int i = 0; i < kPerWriter; i += 97) {
      auto got = store.get("w" + std::to_string(w) + "-" + tkey(i));
      REQUIRE(got.ok());
      REQUIRE(got->has_value());
      CHECK(**got == "v" + std::to_string(i));
    }
  }
}

TEST_CASE("crash points across the whole pipeline recover to a prefix-consistent state")
{
  // Scripted workload with syncs; for a spread of injected failure
  // points, recovery must equal some prefix cut at least as fresh as the
  // last completed sync.
  constexpr int kOpsTotal = 160;
  const auto value_of = [](int i) { return "v" + std::to_string(i * 31 % 97); };

  for (int fail_at = 1; fail_at <= 50; ++fail_at) {
    FaultEnv env;
    int last_synced_op = 0;
    {
      auto store_or = Store::open("db", small_config(/*chi=*/2), &env);
      REQUIRE(store_or.ok());
      Store& store = **store_or;
      env.arm_fail_after(fail_at * 3);
      for (int i = 1; i <= kOpsTotal; ++i) {
        Status s = i % 7 == 0 ? store.del(tkey(i / 2)) : store.put(tkey(i), value_of(i));
        if (!s.ok()) {
          break;
        }
        if (i % 20 == 0) {
          auto synced = store.sync_wal();
          if (synced.ok() && *synced >= static_cast<u64>(i)) {
            last_synced_op = i;
          }
        }
      }
      // Destructor path may keep failing; that is the crash.
    }
    env.crash();

    auto reopened_or = Store::open("db", small_config(), &env);
    REQUIRE(reopened_or.ok());
    Store& reopened = **reopened_or;

    auto rows = reopened.scan("", 1u << 20);
    REQUIRE(rows.ok());

    // Find a prefix cut that reproduces the recovered contents.
    bool matched = false;
    for (int cut = kOpsTotal; cut >= 0; --cut) {
      OracleMap oracle;
      for (int i = 1; i <= cut; ++i) {
        if (i % 7 == 0) {
          oracle.del(tkey(i / 2));
        } else {
          oracle.put(tkey(i), value_of(i));
        }
      }
      if (oracle.size() != rows->size()) {
        continue;
      }
      bool same = true;
      auto it = oracle.contents().begin();
      for (const auto& [k, v] : *rows) {
        if (it == oracle.contents().end() || it->first != k || it->second != v) {
          same = false;
          break;
        }
        ++it;
      }
      if (same) {
        CHECK(cut >= last_synced_op);
        matched = true;
        break;
      }
    }
    CHECK_MESSAGE(matched, "no prefix cut matches recovered state at fail point ", fail_at);
  }
}
