#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <turtledb/wal/wal.hpp>

#include "support/fault_env.hpp"
#include "support/temp_dir.hpp"

#include <random>
#include <set>
#include <thread>

using namespace turtledb;
using namespace turtledb::testing;

namespace {

Wal::Options test_opts(bool flusher = false)
{
  Wal::Options o;
  o.block_bytes = 4096;
  o.poll_micros = 200;
  o.start_flusher = flusher;
  return o;
}

}  // namespace

TEST_CASE("appends assign consecutive seqs from one producer")
{
  TempDir dir{"wal-seq"};
  auto wal = Wal::open(Env::posix(), dir.path() + "/WAL", test_opts(), nullptr, 1, 0);
  REQUIRE(wal.ok());
  auto s1 = (*wal)->append("a", Value::of("1"));
  auto s2 = (*wal)->append("b", Value::of("2"));
  REQUIRE(s1.ok());
  REQUIRE(s2.ok());
  CHECK(*s2 == *s1 + 1);
}

TEST_CASE("oversized record is rejected")
{
  TempDir dir{"wal-big"};
  auto wal = Wal::open(Env::posix(), dir.path() + "/WAL", test_opts(), nullptr, 1, 0);
  REQUIRE(wal.ok());
  std::string huge(8192, 'x');
  auto s = (*wal)->append("k", Value::of(huge));
  REQUIRE_FALSE(s.ok());
  CHECK(s.status().code() == ErrorCode::kRecordTooLarge);
}

TEST_CASE("a maximal record exactly fills a block and the next append opens a new one")
{
  TempDir dir{"wal-fill"};
  auto wal_or = Wal::open(Env::posix(), dir.path() + "/WAL", test_opts(), nullptr, 1, 0);
  REQUIRE(wal_or.ok());
  Wal& wal = **wal_or;

  // payload capacity = block - 24 header; record = 16 + key + value.
  const size_t value_len = 4096 - 24 - 16 - 1;
  REQUIRE(wal.append("k", Value::of(std::string(value_len, 'v'))).ok());
  REQUIRE(wal.append("a", Value::of("tail")).ok());
  auto durable = wal.flush_blocks();
  REQUIRE(durable.ok());
  CHECK(*durable == 2);

  auto log = Wal::recover(Env::posix(), dir.path() + "/WAL", test_opts());
  REQUIRE(log.ok());
  REQUIRE(log->updates.size() == 2);
  CHECK(log->updates[0].key == "k");
  CHECK(log->updates[1].key == "a");
}

TEST_CASE("flush with nothing pending returns the previous durable seq")
{
  TempDir dir{"wal-idem"};
  auto wal = Wal::open(Env::posix(), dir.path() + "/WAL", test_opts(), nullptr, 1, 0);
  REQUIRE(wal.ok());
  REQUIRE((*wal)->append("a", Value::of("1")).ok());
  auto first = (*wal)->flush_blocks();
  REQUIRE(first.ok());
  auto second = (*wal)->flush_blocks();
  REQUIRE(second.ok());
  CHECK(*second == *first);
}

TEST_CASE("write/recover round trip preserves exactly the appended updates")
{
  TempDir dir{"wal-rt"};
  const std::string path = dir.path() + "/WAL";
  {
    auto wal = Wal::open(Env::posix(), path, test_opts(), nullptr, 1, 0);
    REQUIRE(wal.ok());
    for (int i = 0; i < 100; ++i) {
      const bool tomb = i % 7 == 0;
      auto s = (*wal)->append("key" + std::to_string(i),
                              tomb ? Value::tombstone() : Value::of("val" + std::to_string(i)));
      REQUIRE(s.ok());
    }
    auto durable = (*wal)->flush_blocks();
    REQUIRE(durable.ok());
    CHECK(*durable == 100);
  }
  auto log = Wal::recover(Env::posix(), path, test_opts());
  REQUIRE(log.ok());
  REQUIRE(log->updates.size() == 100);
  for (int i = 0; i < 100; ++i) {
    CHECK(log->updates[i].seq == static_cast<u64>(i + 1));
    CHECK(log->updates[i].key == "key" + std::to_string(i));
    CHECK(log->updates[i].value.is_tombstone() == (i % 7 == 0));
  }
}

TEST_CASE("concurrent producers get distinct seqs forming a contiguous range")
{
  TempDir dir{"wal-conc"};
  auto wal_or = Wal::open(Env::posix(), dir.path() + "/WAL", test_opts(/*flusher=*/true), nullptr, 1, 0);
  REQUIRE(wal_or.ok());
  Wal& wal = **wal_or;

  constexpr int kThreads = 4;
  constexpr int kPerThread = 2000;
  std::vector<std::vector<u64>> seqs(kThreads);
  std::vector<std::thread> workers;
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&, t] {
      for (int i = 0; i < kPerThread; ++i) {
        auto s = wal.append("t" + std::to_string(t) + "-" + std::to_string(i), Value::of("v"));
        REQUIRE(s.ok());
        seqs[t].push_back(*s);
      }
    });
  }
  for (auto& w : workers) {
    w.join();
  }

  std::set<u64> all;
  for (const auto& v : seqs) {
    for (u64 s : v) {
      CHECK(all.insert(s).second);  // distinct
    }
  }
  CHECK(all.size() == kThreads * kPerThread);
  CHECK(*all.begin() == 1);
  CHECK(*all.rbegin() == kThreads * kPerThread);  // contiguous union

  auto durable = wal.flush_blocks();
  REQUIRE(durable.ok());
  CHECK(*durable == kThreads * kPerThread);

  // Durable seq is a prefix-consistent cut.
  auto log = Wal::recover(Env::posix(), dir.path() + "/WAL", test_opts());
  REQUIRE(log.ok());
  REQUIRE(log->updates.size() == *durable);
  for (size_t i = 0; i < log->updates.size(); ++i) {
    CHECK(log->updates[i].seq == i + 1);
  }
}

TEST_CASE("a truncated tail block is skipped at recovery")
{
  TempDir dir{"wal-torn"};
  const std::string path = dir.path() + "/WAL";
  u64 full_size = 0;
  {
    auto wal = Wal::open(Env::posix(), path, test_opts(), nullptr, 1, 0);
    REQUIRE(wal.ok());
    // Three blocks' worth of records, sealed by filling blocks.
    const std::string value(1000, 'v');
    for (int i = 0; i < 12; ++i) {
      REQUIRE((*wal)->append("key" + std::to_string(i), Value::of(value)).ok());
    }
    REQUIRE((*wal)->flush_blocks().ok());
    auto file = Env::posix().open_file(path, false);
    REQUIRE(file.ok());
    auto size = (*file)->size();
    REQUIRE(size.ok());
    full_size = *size;
  }

  auto before = Wal::recover(Env::posix(), path, test_opts());
  REQUIRE(before.ok());
  const size_t total = before->updates.size();
  REQUIRE(total == 12);

  // Truncate in the middle of the last block.
  {
    auto file = Env::posix().open_file(path, false);
    REQUIRE(file.ok());
    REQUIRE((*file)->truncate(full_size - 100).ok());
  }
  auto after = Wal::recover(Env::posix(), path, test_opts());
  REQUIRE(after.ok());
  CHECK(after->updates.size() < total);
  // Still a clean seq prefix.
  for (size_t i = 0; i < after->updates.size(); ++i) {
    CHECK(after->updates[i].seq == i + 1);
  }
}

TEST_CASE("random corruption always yields a seq prefix of what was appended")
{
  TempDir dir{"wal-fuzz"};
  std::mt19937_64 rng{1234};

  for (int round = 0; round < 30; ++round) {
    const std::string path = dir.path() + "/WAL-" + std::to_string(round);
    constexpr u64 kCount = 60;
    {
      auto wal = Wal::open(Env::posix(), path, test_opts(), nullptr, 1, 0);
      REQUIRE(wal.ok());
      const std::string value(200, 'v');
      for (u64 i = 0; i < kCount; ++i) {
        REQUIRE((*wal)->append("key" + std::to_string(i), Value::of(value)).ok());
      }
      REQUIRE((*wal)->flush_blocks().ok());
    }

    // Flip a byte somewhere past the header.
    auto file = Env::posix().open_file(path, false);
    REQUIRE(file.ok());
    auto size_or = (*file)->size();
    REQUIRE(size_or.ok());
    const u64 pos = 48 + rng() % (*size_or - 48);
    std::string byte;
    REQUIRE((*file)->pread(pos, 1, &byte).ok());
    byte[0] = static_cast<char>(byte[0] ^ 0x40);
    REQUIRE((*file)->pwrite(pos, byte).ok());

    auto log = Wal::recover(Env::posix(), path, test_opts());
    REQUIRE(log.ok());
    CHECK(log->updates.size() <= kCount);
    for (size_t i = 0; i < log->updates.size(); ++i) {
      CHECK(log->updates[i].seq == i + 1);
      CHECK(log->updates[i].key == "key" + std::to_string(i));
    }
  }
}

TEST_CASE("trim drops covered prefix blocks and is idempotent")
{
  TempDir dir{"wal-trim"};
  const std::string path = dir.path() + "/WAL";
  auto wal_or = Wal::open(Env::posix(), path, test_opts(), nullptr, 1, 0);
  REQUIRE(wal_or.ok());
  Wal& wal = **wal_or;

  const std::string value(1000, 'v');
  for (int i = 0; i < 12; ++i) {
    REQUIRE(wal.append("key" + std::to_string(i), Value::of(value)).ok());
  }
  REQUIRE(wal.flush_blocks().ok());
  const u64 before = wal.file_bytes();

  // trim(0) is a no-op.
  auto zero = wal.trim(0);
  REQUIRE(zero.ok());
  CHECK(*zero == 0);

  // Trimming past coverage is rejected.
  CHECK(wal.trim(8).status().code() == ErrorCode::kInvalidParameter);

  wal.set_trim_limit(8);
  auto reclaimed = wal.trim(8);
  REQUIRE(reclaimed.ok());
  CHECK(*reclaimed > 0);
  CHECK(wal.file_bytes() < before);

  // Recovery never re-yields covered seqs.
  REQUIRE(wal.close().ok());
  auto log = Wal::recover(Env::posix(), path, test_opts());
  REQUIRE(log.ok());
  for (const Update& u : log->updates) {
    CHECK(u.seq > 8);
  }
  REQUIRE(!log->updates.empty());

  // Double trim with the same bound reclaims nothing further.
  auto wal2 = Wal::open(Env::posix(), path, test_opts(), nullptr, 13, 12);
  REQUIRE(wal2.ok());
  (*wal2)->set_trim_limit(8);
  auto again = (*wal2)->trim(8);
  REQUIRE(again.ok());
  CHECK(*again == 0);
}

TEST_CASE("no seq is reported durable unless its block synced (fault injection)")
{
  FaultEnv env;
  auto wal_or = Wal::open(env, "WAL", test_opts(), nullptr, 1, 0);
  REQUIRE(wal_or.ok());
  Wal& wal = **wal_or;

  for (int i = 0; i < 20; ++i) {
    REQUIRE(wal.append("key" + std::to_string(i), Value::of(std::string(300, 'v'))).ok());
  }
  env.arm_fail_after(0);  // every write fails from here on
  auto failed = wal.flush_blocks();
  CHECK_FALSE(failed.ok());
  CHECK(wal.durable_seq() == 0);

  env.disarm();
  auto durable = wal.flush_blocks();
  REQUIRE(durable.ok());
  CHECK(*durable == 20);

  env.crash();  // synced data must survive
  auto log = Wal::recover(env, "WAL", test_opts());
  REQUIRE(log.ok());
  CHECK(log->updates.size() == 20);
}
