#include <turtledb/bench/workload.hpp>

#include <turtledb/core/check.hpp>
#include <turtledb/core/coding.hpp>

#include <algorithm>
#include <chrono>
#include <map>
#include <thread>

namespace turtledb::bench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double percentile_us(std::vector<u64>& latencies_ns, double p)
{
  if (latencies_ns.empty()) {
    return 0.0;
  }
  const size_t idx = std::min(latencies_ns.size() - 1,
                              static_cast<size_t>(p * static_cast<double>(latencies_ns.size())));
  std::nth_element(latencies_ns.begin(), latencies_ns.begin() + idx, latencies_ns.end());
  return static_cast<double>(latencies_ns[idx]) / 1000.0;
}

}  // namespace

ZipfianGenerator::ZipfianGenerator(u64 item_count, double theta) : n_{item_count}, theta_{theta}
{
  TDB_CHECK_GT(item_count, 0u);
  auto cdf = std::make_shared<std::vector<double>>();
  cdf->reserve(n_);
  double sum = 0.0;
  for (u64 i = 1; i <= n_; ++i) {
    sum += 1.0 / std::pow(static_cast<double>(i), theta_);
    cdf->push_back(sum);
  }
  zeta_n_ = sum;
  for (double& v : *cdf) {
    v /= sum;
  }
  cdf_ = std::move(cdf);
}

u64 ZipfianGenerator::next(Xorshift64Star& rng)
{
  const double u = rng.next_unit();
  const auto it = std::upper_bound(cdf_->begin(), cdf_->end(), u);
  if (it == cdf_->end()) {
    return n_ - 1;
  }
  return static_cast<u64>(it - cdf_->begin());
}

StatusOr<WorkloadKind> parse_workload(const std::string& name)
{
  if (name == "load") {
    return WorkloadKind::kLoad;
  }
  if (name == "a") {
    return WorkloadKind::kA;
  }
  if (name == "b") {
    return WorkloadKind::kB;
  }
  if (name == "c") {
    return WorkloadKind::kC;
  }
  if (name == "e") {
    return WorkloadKind::kE;
  }
  if (name == "f") {
    return WorkloadKind::kF;
  }
  return Status::invalid_argument("unknown workload: " + name);
}

const char* workload_name(WorkloadKind kind)
{
  switch (kind) {
    case WorkloadKind::kLoad:
      return "load";
    case WorkloadKind::kA:
      return "a";
    case WorkloadKind::kB:
      return "b";
    case WorkloadKind::kC:
      return "c";
    case WorkloadKind::kE:
      return "e";
    case WorkloadKind::kF:
      return "f";
  }
  return "?";
}

std::string key_for(u64 key_number)
{
  const u64 mixed = mix64(key_number);
  std::string key(8, '\0');
  for (int i = 0; i < 8; ++i) {
    key[i] = static_cast<char>(mixed >> ((7 - i) * 8));
  }
  return key;
}

std::string value_for(u64 key_number, u64 salt, u64 value_bytes)
{
  std::string value;
  value.reserve(value_bytes);
  u64 state = mix64(key_number ^ (salt * 0x9e3779b97f4a7c15ull) ^ 0x5bf03635ull);
  while (value.size() < value_bytes) {
    state = mix64(state);
    for (int i = 0; i < 8 && value.size() < value_bytes; ++i) {
      value.push_back(static_cast<char>('a' + ((state >> (i * 8)) % 26)));
    }
  }
  return value;
}

namespace {

struct OpMix {
  double read = 0;
  double update = 0;
  double scan = 0;
  double insert = 0;
  double rmw = 0;
};

OpMix mix_for(WorkloadKind kind)
{
  switch (kind) {
    case WorkloadKind::kA:
      return OpMix{0.5, 0.5, 0, 0, 0};
    case WorkloadKind::kB:
      return OpMix{0.95, 0.05, 0, 0, 0};
    case WorkloadKind::kC:
      return OpMix{1.0, 0, 0, 0, 0};
    case WorkloadKind::kE:
      return OpMix{0, 0, 0.95, 0.05, 0};
    case WorkloadKind::kF:
      return OpMix{0.5, 0, 0, 0, 0.5};
    case WorkloadKind::kLoad:
      break;
  }
  return OpMix{};
}

struct Oracle {
  bool enabled = false;
  std::map<std::string, std::string> map;
};

Status load_records(Store& store, const WorkloadSpec& spec, u32 threads, std::vector<u64>* latencies_ns,
                    Oracle* oracle, std::atomic<u64>* peak_mem)
{
  std::atomic<bool> failed{false};
  Status first_error = Status::OK();
  std::mutex error_mu;
  std::vector<std::thread> workers;
  std::vector<std::vector<u64>> per_thread_lat(threads);

  const u64 per_thread = (spec.record_count + threads - 1) / threads;
  for (u32 t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      const u64 begin = static_cast<u64>(t) * per_thread;
      const u64 end = std::min(spec.record_count, begin + per_thread);
      std::vector<u64>& lat = per_thread_lat[t];
      if (latencies_ns != nullptr) {
        lat.reserve(end > begin ? end - begin : 0);
      }
      for (u64 i = begin; i < end && !failed.load(std::memory_order_relaxed); ++i) {
        const std::string key = key_for(i);
        const std::string value = value_for(i, /*salt=*/0, spec.value_bytes);
        const auto op_start = Clock::now();
        Status s = store.put(key, value);
        if (latencies_ns != nullptr) {
          lat.push_back(static_cast<u64>(
              std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - op_start).count()));
        }
        if (!s.ok()) {
          std::lock_guard<std::mutex> lock{error_mu};
          if (first_error.ok()) {
            first_error = s;
          }
          failed.store(true, std::memory_order_relaxed);
          return;
        }
        if (t == 0 && peak_mem != nullptr && (i % 8192) == 0) {
          const u64 mem = store.approximate_memory_bytes();
          u64 prev = peak_mem->load(std::memory_order_relaxed);
          while (mem > prev && !peak_mem->compare_exchange_weak(prev, mem)) {
          }
        }
      }
    });
  }
  for (auto& w : workers) {
    w.join();
  }
  if (!first_error.ok()) {
    return first_error;
  }
  if (latencies_ns != nullptr) {
    for (auto& lat : per_thread_lat) {
      latencies_ns->insert(latencies_ns->end(), lat.begin(), lat.end());
    }
  }
  if (oracle != nullptr && oracle->enabled) {
    for (u64 i = 0; i < spec.record_count; ++i) {
      oracle->map[key_for(i)] = value_for(i, 0, spec.value_bytes);
    }
  }
  return Status::OK();
}

struct PhaseResult {
  std::vector<u64> latencies_ns;
  u64 operations = 0;
};

Status run_mixed_phase(Store& store, const WorkloadSpec& spec, Oracle* oracle, PhaseResult* result,
                       std::atomic<u64>* peak_mem)
{
  const OpMix mix = mix_for(spec.kind);
  std::atomic<bool> failed{false};
  Status first_error = Status::OK();
  std::mutex error_mu;
  std::atomic<u64> insert_counter{0};

  const u32 threads = spec.threads == 0 ? 1 : spec.threads;
  std::vector<std::thread> workers;
  std::vector<PhaseResult> per_thread(threads);

  const auto fail_with = [&](Status s) {
    std::lock_guard<std::mutex> lock{error_mu};
    if (first_error.ok()) {
      first_error = std::move(s);
    }
    failed.store(true, std::memory_order_relaxed);
  };

  const u64 per_thread_ops = (spec.operation_count + threads - 1) / threads;
  for (u32 t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      Xorshift64Star rng{mix64(spec.seed ^ (0xabcdull + t))};
      ScrambledZipfian zipf{spec.record_count, spec.zipf_theta};
      PhaseResult& pr = per_thread[t];
      const u64 ops = std::min(per_thread_ops, spec.operation_count - std::min<u64>(spec.operation_count,
                                                                                    per_thread_ops * t));
      pr.latencies_ns.reserve(ops);

      for (u64 i = 0; i < ops && !failed.load(std::memory_order_relaxed); ++i) {
        const double dice = rng.next_unit();
        const u64 key_num = spec.zipfian ? zipf.next(rng) : rng.next_below(spec.record_count);
        const std::string key = key_for(key_num);
        const auto op_start = Clock::now();

        if (dice < mix.read) {
          StatusOr<std::optional<std::string>> got = store.get(key);
          if (!got.ok()) {
            fail_with(got.status());
            return;
          }
          if (oracle != nullptr && oracle->enabled) {
            auto it = oracle->map.find(key);
            const bool oracle_has = it != oracle->map.end();
            if (oracle_has != got->has_value() || (oracle_has && it->second != **got)) {
              fail_with(Status::contract_violation("read mismatch against oracle"));
              return;
            }
          }
        } else if (dice < mix.read + mix.update) {
          const std::string value = value_for(key_num, i + 1, spec.value_bytes);
          Status s = store.put(key, value);
          if (!s.ok()) {
            fail_with(s);
            return;
          }
          if (oracle != nullptr && oracle->enabled) {
            oracle->map[key] = value;
          }
        } else if (dice < mix.read + mix.update + mix.scan) {
          const u64 len = 1 + rng.next_below(spec.scan_max_len);
          StatusOr<std::vector<std::pair<std::string, std::string>>> rows = store.scan(key, len);
          if (!rows.ok()) {
            fail_with(rows.status());
            return;
          }
          if (oracle != nullptr && oracle->enabled) {
            auto it = oracle->map.lower_bound(key);
            for (const auto& [k, v] : *rows) {
              if (it == oracle->map.end() || it->first != k || it->second != v) {
                fail_with(Status::contract_violation("scan mismatch against oracle"));
                return;
              }
              ++it;
            }
          }
        } else if (dice < mix.read + mix.update + mix.scan + mix.insert) {
          const u64 new_num = spec.record_count + insert_counter.fetch_add(1);
          const std::string new_key = key_for(new_num);
          const std::string value = value_for(new_num, 0, spec.value_bytes);
          Status s = store.put(new_key, value);
          if (!s.ok()) {
            fail_with(s);
            return;
          }
          if (oracle != nullptr && oracle->enabled) {
            oracle->map[new_key] = value;
          }
        } else {
          // read-modify-write
          StatusOr<std::optional<std::string>> got = store.get(key);
          if (!got.ok()) {
            fail_with(got.status());
            return;
          }
          const std::string value = value_for(key_num, i + 0x5eedull, spec.value_bytes);
          Status s = store.put(key, value);
          if (!s.ok()) {
            fail_with(s);
            return;
          }
          if (oracle != nullptr && oracle->enabled) {
            oracle->map[key] = value;
          }
        }

        pr.latencies_ns.push_back(static_cast<u64>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - op_start).count()));
        pr.operations += 1;
        if (t == 0 && peak_mem != nullptr && (i % 8192) == 0) {
          const u64 mem = store.approximate_memory_bytes();
          u64 prev = peak_mem->load(std::memory_order_relaxed);
          while (mem > prev && !peak_mem->compare_exchange_weak(prev, mem)) {
          }
        }
      }
    });
  }
  for (auto& w : workers) {
    w.join();
  }
  if (!first_error.ok()) {
    return first_error;
  }
  for (auto& pr : per_thread) {
    result->operations += pr.operations;
    result->latencies_ns.insert(result->latencies_ns.end(), pr.latencies_ns.begin(), pr.latencies_ns.end());
  }
  return Status::OK();
}

}  // namespace

StatusOr<RunMetrics> run_workload(Store& store, const WorkloadSpec& spec)
{
  const u32 threads = spec.threads == 0 ? 1 : spec.threads;
  Oracle oracle;
  oracle.enabled = threads == 1 && spec.record_count <= spec.verify_threshold;

  RunMetrics metrics;
  metrics.workload = workload_name(spec.kind);
  metrics.chi = store.checkpoint_distance();
  metrics.threads = threads;

  std::atomic<u64> peak_mem{0};

  if (spec.kind == WorkloadKind::kLoad) {
    const StatsSnapshot before = store.stats();
    const auto start = Clock::now();
    std::vector<u64> latencies;
    TDB_TRY(load_records(store, spec, threads, &latencies, &oracle, &peak_mem));
    TDB_TRY(store.flush());
    metrics.wall_s = seconds_since(start);
    metrics.operations = spec.record_count;

    const StatsSnapshot after = store.stats(/*compute_space_amp=*/true);
    const u64 user_delta = after.user_bytes_in - before.user_bytes_in;
    metrics.write_amp =
        user_delta > 0
            ? static_cast<double>(after.total_bytes_written() - before.total_bytes_written()) / user_delta
            : 0.0;
    metrics.space_amp = after.space_amplification;
    metrics.page_pool_pages_written = after.total_pool_pages_written() - before.total_pool_pages_written();
    u64 pool_bytes = 0;
    for (u32 i = 0; i <= static_cast<u32>(PoolKind::kFilter); ++i) {
      pool_bytes += after.bytes_written[i] - before.bytes_written[i];
    }
    metrics.page_pool_bytes_written = pool_bytes;
    metrics.ops_per_sec = metrics.wall_s > 0 ? spec.record_count / metrics.wall_s : 0;
    metrics.p50_us = percentile_us(latencies, 0.50);
    metrics.p95_us = percentile_us(latencies, 0.95);
    metrics.p99_us = percentile_us(latencies, 0.99);
    metrics.peak_mem_mb = static_cast<double>(peak_mem.load()) / (1024.0 * 1024.0);

    if (oracle.enabled) {
      TDB_TRY_ASSIGN(auto rows, store.scan(std::string_view{"\0", 1}, spec.record_count + 1));
      if (rows.size() != oracle.map.size()) {
        return Status::contract_violation("load verification failed: size mismatch");
      }
      auto it = oracle.map.begin();
      for (const auto& [k, v] : rows) {
        if (it == oracle.map.end() || it->first != k || it->second != v) {
          return Status::contract_violation("load verification failed: content mismatch");
        }
        ++it;
      }
    }
    return metrics;
  }

  // Non-load workloads: unmetered load phase, flush, then the measured phase.
  if (store.stats().n_keys == 0) {
    TDB_TRY(load_records(store, spec, threads, nullptr, &oracle, nullptr));
    TDB_TRY(store.flush());
  } else if (oracle.enabled) {
    for (u64 i = 0; i < spec.record_count; ++i) {
      oracle.map[key_for(i)] = value_for(i, 0, spec.value_bytes);
    }
  }

  const StatsSnapshot before = store.stats();
  PhaseResult phase;
  const auto start = Clock::now();
  TDB_TRY(run_mixed_phase(store, spec, &oracle, &phase, &peak_mem));
  metrics.wall_s = seconds_since(start);

  const StatsSnapshot after = store.stats();
  const u64 user_delta = after.user_bytes_in - before.user_bytes_in;
  metrics.write_amp =
      user_delta > 0
          ? static_cast<double>(after.total_bytes_written() - before.total_bytes_written()) / user_delta
          : 0.0;
  metrics.page_pool_pages_written = after.total_pool_pages_written() - before.total_pool_pages_written();
  metrics.operations = phase.operations;
  metrics.ops_per_sec = metrics.wall_s > 0 ? phase.operations / metrics.wall_s : 0;
  metrics.p50_us = percentile_us(phase.latencies_ns, 0.50);
  metrics.p95_us = percentile_us(phase.latencies_ns, 0.95);
  metrics.p99_us = percentile_us(phase.latencies_ns, 0.99);
  metrics.peak_mem_mb = static_cast<double>(peak_mem.load()) / (1024.0 * 1024.0);
  return metrics;
}

StatusOr<std::vector<SweepRow>> chi_sweep(Env* env, const std::string& dir_base, Config cfg,
                                          const WorkloadSpec& load_spec, const std::vector<u32>& chis)
{
  for (size_t i = 1; i < chis.size(); ++i) {
    if (chis[i] <= chis[i - 1]) {
      return Status::invalid_argument("chi values must be ascending");
    }
  }
  if (!chis.empty() && chis.front() < 1) {
    return Status::invalid_argument("chi values must be >= 1");
  }

  std::vector<SweepRow> rows;
  for (u32 chi : chis) {
    SweepRow row;
    row.chi = chi;

    Config run_cfg = cfg;
    run_cfg.chi = chi;
    const std::string dir = dir_base + "/chi-" + std::to_string(chi);
    TDB_TRY_ASSIGN(std::unique_ptr<Store> store, Store::open(dir, run_cfg, env));

    WorkloadSpec load = load_spec;
    load.kind = WorkloadKind::kLoad;
    TDB_TRY_ASSIGN(row.load, run_workload(*store, load));

    // Retune to chi=1: the forced externalization dominates the latency.
    const auto retune_start = Clock::now();
    StatusOr<u32> set = store->set_checkpoint_distance(1);
    if (!set.ok()) {
      return set.status();
    }
    row.retune_s = seconds_since(retune_start);

    WorkloadSpec read_c = load_spec;
    read_c.kind = WorkloadKind::kC;
    TDB_TRY_ASSIGN(row.read_c, run_workload(*store, read_c));

    WorkloadSpec read_e = load_spec;
    read_e.kind = WorkloadKind::kE;
    TDB_TRY_ASSIGN(row.read_e, run_workload(*store, read_e));

    TDB_TRY(store->close());
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace turtledb::bench
