#include <turtledb/bench/report.hpp>
#include <turtledb/bench/workload.hpp>
#include <turtledb/engine/store.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using namespace turtledb;
using namespace turtledb::bench;

int write_csv(const std::string& path, const std::string& content)
{
  std::ofstream out{path};
  if (!out) {
    std::fprintf(stderr, "cannot write %s\n", path.c_str());
    return 1;
  }
  out << content;
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"turtledb workload harness"};
  app.require_subcommand(0, 1);

  std::string data_dir = "bench-data";
  std::string workload = "load";
  u64 records = 100000;
  u64 value_bytes = 120;
  u64 ops = 100000;
  u32 threads = 1;
  u32 chi = 1;
  u64 cache_bytes = 64ull * 1024 * 1024;
  u64 seed = 42;
  std::string csv_path;
  std::string distribution = "zipfian";

  app.add_option("--data-dir", data_dir, "store directory");
  app.add_option("--workload", workload, "load|a|b|c|e|f");
  app.add_option("--records", records, "record count for the load phase");
  app.add_option("--value-bytes", value_bytes, "value size in bytes");
  app.add_option("--ops", ops, "operation count for the measured phase");
  app.add_option("--threads", threads, "workload driver threads");
  app.add_option("--chi", chi, "checkpoint distance");
  app.add_option("--cache-bytes", cache_bytes, "page cache budget");
  app.add_option("--seed", seed, "workload RNG seed");
  app.add_option("--csv", csv_path, "write metrics CSV to this path");
  app.add_option("--distribution", distribution, "zipfian|uniform");

  CLI::App* sweep = app.add_subcommand("chi-sweep", "load once per chi value, then retune and measure reads");
  std::vector<u32> chis{1, 2, 4, 8, 16};
  sweep->add_option("--chis", chis, "ascending chi values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Config cfg;
  cfg.chi = chi;
  cfg.memory_budget_bytes = cache_bytes;

  WorkloadSpec spec;
  spec.record_count = records;
  spec.value_bytes = value_bytes;
  spec.operation_count = ops;
  spec.threads = threads;
  spec.seed = seed;
  spec.zipfian = distribution != "uniform";

  if (sweep->parsed()) {
    StatusOr<std::vector<SweepRow>> rows = chi_sweep(nullptr, data_dir, cfg, spec, chis);
    if (!rows.ok()) {
      std::fprintf(stderr, "chi-sweep failed: %s\n", rows.status().to_string().c_str());
      return 1;
    }
    std::vector<RunMetrics> flat;
    for (const SweepRow& r : *rows) {
      flat.push_back(r.load);
      flat.push_back(r.read_c);
      flat.push_back(r.read_e);
    }
    const std::string summary = sweep_csv(*rows);
    std::cout << metrics_table(flat) << "\n" << summary;
    if (!csv_path.empty()) {
      return write_csv(csv_path, summary);
    }
    return 0;
  }

  StatusOr<WorkloadKind> kind = parse_workload(workload);
  if (!kind.ok()) {
    std::fprintf(stderr, "%s\n", kind.status().to_string().c_str());
    return 2;
  }
  spec.kind = *kind;

  StatusOr<std::unique_ptr<Store>> store = Store::open(data_dir, cfg);
  if (!store.ok()) {
    std::fprintf(stderr, "open failed: %s\n", store.status().to_string().c_str());
    return 1;
  }

  StatusOr<RunMetrics> metrics = run_workload(**store, spec);
  if (!metrics.ok()) {
    std::fprintf(stderr, "run failed: %s\n", metrics.status().to_string().c_str());
    (void)(*store)->close();
    return 1;
  }
  Status closed = (*store)->close();
  if (!closed.ok()) {
    std::fprintf(stderr, "close failed: %s\n", closed.to_string().c_str());
    return 1;
  }

  std::vector<RunMetrics> rows{*metrics};
  std::cout << metrics_table(rows);
  if (!csv_path.empty()) {
    return write_csv(csv_path, metrics_csv(rows));
  }
  return 0;
}
