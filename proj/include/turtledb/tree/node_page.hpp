#pragma once

#include <turtledb/core/status.hpp>
#include <turtledb/tree/node.hpp>

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace turtledb {

inline constexpr u32 kNodePageMagic = 0x4e4f4431;  // "NOD1"
inline constexpr u32 kNodeHeaderBytes = 48;

// Serialized image of a node (unpadded). Requires every child, filter and
// segment reference to be durable (valid page ids).
StatusOr<std::string> serialize_node(const Node& node);

// Parsed node with unresolved child references; the tree loader resolves
// them into in-memory children.
struct ParsedNode {
  Node node;  // children empty
  std::vector<std::pair<PageId, PageId>> child_refs;  // (child page, filter page)
};

StatusOr<ParsedNode> parse_node(std::string_view page, u32 level_count);

}  // namespace turtledb
