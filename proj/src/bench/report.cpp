#include <turtledb/bench/report.hpp>

#include <cstdio>

namespace turtledb::bench {

namespace {

std::string format_row(const RunMetrics& m, const char* fmt)
{
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, m.workload.c_str(), m.chi, m.threads, m.ops_per_sec, m.p50_us, m.p95_us,
                m.p99_us, m.write_amp, m.space_amp, m.peak_mem_mb, m.wall_s);
  return buf;
}

}  // namespace

std::string metrics_csv(const std::vector<RunMetrics>& rows)
{
  std::string out = "workload,chi,threads,ops_sec,p50_us,p95_us,p99_us,write_amp,space_amp,peak_mem_mb,wall_s\n";
  for (const RunMetrics& m : rows) {
    out += format_row(m, "%s,%u,%u,%.1f,%.2f,%.2f,%.2f,%.4f,%.4f,%.2f,%.3f\n");
  }
  return out;
}

std::string metrics_table(const std::vector<RunMetrics>& rows)
{
  char header[512];
  std::snprintf(header, sizeof(header), "%-8s %5s %7s %12s %9s %9s %9s %10s %10s %11s %8s\n", "workload", "chi",
                "threads", "ops_sec", "p50_us", "p95_us", "p99_us", "write_amp", "space_amp", "peak_mem_mb",
                "wall_s");
  std::string out = header;
  for (const RunMetrics& m : rows) {
    out += format_row(m, "%-8s %5u %7u %12.1f %9.2f %9.2f %9.2f %10.4f %10.4f %11.2f %8.3f\n");
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows)
{
  std::string out = "chi,write_amp,p50_put_us,peak_mem_mb,retune_s,c_ops_sec,e_ops_sec,pages_per_op\n";
  for (const SweepRow& r : rows) {
    char buf[256];
    const double pages_per_op =
        r.load.operations > 0 ? static_cast<double>(r.load.page_pool_pages_written) / r.load.operations : 0.0;
    std::snprintf(buf, sizeof(buf), "%u,%.4f,%.2f,%.2f,%.3f,%.1f,%.1f,%.5f\n", r.chi, r.load.write_amp,
                  r.load.p50_us, r.load.peak_mem_mb, r.retune_s, r.read_c.ops_per_sec, r.read_e.ops_per_sec,
                  pages_per_op);
    out += buf;
  }
  return out;
}

}  // namespace turtledb::bench
