#pragma once

#include <turtledb/bench/workload.hpp>

#include <string>
#include <vector>

namespace turtledb::bench {

// Deterministic column order:
// workload, chi, threads, ops_sec, p50_us, p95_us, p99_us, write_amp,
// space_amp, peak_mem_mb, wall_s
std::string metrics_csv(const std::vector<RunMetrics>& rows);

std::string metrics_table(const std::vector<RunMetrics>& rows);

// chi sweep summary: chi, write_amp, p50_put_us, peak_mem_mb, retune_s,
// c_ops_sec, e_ops_sec
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace turtledb::bench
