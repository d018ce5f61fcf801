#include <turtledb/core/config.hpp>

#include <nlohmann/json.hpp>

namespace turtledb {

Status Config::validate() const
{
  // Pivot sets are tracked in u64 bitmasks with headroom for the transient
  // overfull window between a flush and the parent's split.
  if (pivot_capacity < 4 || pivot_capacity > 32) {
    return Status::invalid_parameter("pivot_capacity must be in [4, 32]");
  }
  if (level_fanout != 2) {
    return Status::invalid_parameter("level_fanout is fixed at 2");
  }
  if (chi < 1) {
    return Status::invalid_parameter("chi must be >= 1");
  }
  if (!(filter_fp_rate > 0.0 && filter_fp_rate < 1.0)) {
    return Status::invalid_parameter("filter_fp_rate must be in (0, 1)");
  }
  if (node_page_bytes < 512 || leaf_page_bytes < 4096 || filter_page_bytes < 512) {
    return Status::invalid_parameter("page sizes too small");
  }
  if (block_bytes < 512 || (leaf_page_bytes % block_bytes) != 0) {
    return Status::invalid_parameter("block_bytes must be >= 512 and divide leaf_page_bytes");
  }
  if (wal_block_bytes < 4096) {
    return Status::invalid_parameter("wal_block_bytes must be >= 4096");
  }
  return Status::OK();
}

std::string Config::to_json() const
{
  nlohmann::json j;
  j["version"] = 1;
  j["node_page_bytes"] = node_page_bytes;
  j["leaf_page_bytes"] = leaf_page_bytes;
  j["filter_page_bytes"] = filter_page_bytes;
  j["block_bytes"] = block_bytes;
  j["pivot_capacity"] = pivot_capacity;
  j["level_fanout"] = level_fanout;
  j["filter_bits_per_key"] = filter_bits_per_key;
  j["filter_fp_rate"] = filter_fp_rate;
  j["wal_block_bytes"] = wal_block_bytes;
  return j.dump(2);
}

StatusOr<Config> Config::from_json(const std::string& text)
{
  nlohmann::json j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    return Status::open_failure("CONFIG file is not valid JSON");
  }
  if (!j.contains("version") || j["version"].get<int>() != 1) {
    return Status::open_failure("CONFIG version mismatch");
  }
  Config cfg;
  try {
    cfg.node_page_bytes = j.at("node_page_bytes").get<u64>();
    cfg.leaf_page_bytes = j.at("leaf_page_bytes").get<u64>();
    cfg.filter_page_bytes = j.at("filter_page_bytes").get<u64>();
    cfg.block_bytes = j.at("block_bytes").get<u64>();
    cfg.pivot_capacity = j.at("pivot_capacity").get<u32>();
    cfg.level_fanout = j.at("level_fanout").get<u32>();
    cfg.filter_bits_per_key = j.at("filter_bits_per_key").get<u32>();
    cfg.filter_fp_rate = j.at("filter_fp_rate").get<double>();
    cfg.wal_block_bytes = j.at("wal_block_bytes").get<u64>();
  } catch (const nlohmann::json::exception& e) {
    return Status::open_failure(std::string{"CONFIG field error: "} + e.what());
  }
  Status s = cfg.validate();
  if (!s.ok()) {
    return Status::open_failure("CONFIG invalid: " + s.to_string());
  }
  return cfg;
}

}  // namespace turtledb
