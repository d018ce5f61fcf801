#pragma once

#include <turtledb/core/hash.hpp>
#include <turtledb/core/status.hpp>
#include <turtledb/engine/store.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace turtledb::bench {

// xorshift64* PRNG (Vigna's variant): shifts 12/25/27, multiplier
// 0x2545F4914F6CDD1D. Deterministic and portable, so identical seeds
// reproduce identical workloads anywhere.
class Xorshift64Star
{
 public:
  explicit Xorshift64Star(u64 seed) : state_{seed != 0 ? seed : 0x9e3779b97f4a7c15ull} {}

  u64 next()
  {
    u64 x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1Dull;
  }

  // Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }

  u64 next_below(u64 n) { return n == 0 ? 0 : next() % n; }

 private:
  u64 state_;
};

// Zipfian over [0, item_count): rank r+1 is drawn with probability
// (1/(r+1)^theta) / zeta(n, theta), sampled exactly by inverse-CDF binary
// search over the precomputed cumulative mass (shared between copies).
class ZipfianGenerator
{
 public:
  explicit ZipfianGenerator(u64 item_count, double theta = 0.99);

  u64 next(Xorshift64Star& rng);

  // Exact probability of the 1-based rank (for distribution tests).
  double rank_probability(u64 rank) const
  {
    return 1.0 / std::pow(static_cast<double>(rank), theta_) / zeta_n_;
  }

  u64 item_count() const { return n_; }

 private:
  u64 n_;
  double theta_;
  double zeta_n_;
  std::shared_ptr<const std::vector<double>> cdf_;
};

// Zipfian ranks hashed over the item space, so popular items are spread
// across the key domain (the YCSB "scrambled" variant).
class ScrambledZipfian
{
 public:
  explicit ScrambledZipfian(u64 item_count, double theta = 0.99) : inner_{item_count, theta}, n_{item_count} {}

  u64 next(Xorshift64Star& rng) { return fnv1a64_u64(inner_.next(rng)) % n_; }

 private:
  ZipfianGenerator inner_;
  u64 n_;
};

enum class WorkloadKind { kLoad, kA, kB, kC, kE, kF };

StatusOr<WorkloadKind> parse_workload(const std::string& name);
const char* workload_name(WorkloadKind kind);

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::kLoad;
  u64 record_count = 100000;
  u64 value_bytes = 120;
  u64 operation_count = 100000;
  u64 scan_max_len = 100;
  bool zipfian = true;
  double zipf_theta = 0.99;
  u64 seed = 42;
  u32 threads = 1;
  u64 verify_threshold = 200000;  // shadow-oracle ceiling (single-threaded runs)
};

struct RunMetrics {
  std::string workload;
  u32 chi = 1;
  u32 threads = 1;
  double ops_per_sec = 0;
  double p50_us = 0;
  double p95_us = 0;
  double p99_us = 0;
  double write_amp = 0;
  double space_amp = 0;
  double peak_mem_mb = 0;
  double wall_s = 0;
  u64 page_pool_pages_written = 0;
  u64 page_pool_bytes_written = 0;
  u64 operations = 0;
  bool valid = true;
};

// Deterministic 8-byte keys: big-endian splitmix of the key number
// (bijective, so load order is effectively random over the key space).
std::string key_for(u64 key_number);
std::string value_for(u64 key_number, u64 salt, u64 value_bytes);

// Runs the spec against the store: non-load workloads perform an
// unmetered load phase first, then the measured phase. Results are
// shadow-checked against a flat ordered map when the spec is single
// threaded and record_count <= verify_threshold.
StatusOr<RunMetrics> run_workload(Store& store, const WorkloadSpec& spec);

struct SweepRow {
  u32 chi = 0;
  RunMetrics load;
  double retune_s = 0;
  RunMetrics read_c;
  RunMetrics read_e;
};

// Fresh load per chi value, then retune to chi=1 (timing the forced
// externalization) and measure read workloads C and E on the result.
StatusOr<std::vector<SweepRow>> chi_sweep(Env* env, const std::string& dir_base, Config cfg,
                                          const WorkloadSpec& load_spec, const std::vector<u32>& chis);

}  // namespace turtledb::bench
