#pragma once

#include <turtledb/tree/tree.hpp>

namespace turtledb {

// Full structural audit: level/segment occupancy caps, buffered byte
// bounds, pivot fill, equal leaf depth, metadata consistency, sortedness.
// Returns ContractViolation describing the first problem found.
Status validate_tree(const Tree& tree, const TreeRoot& root);

}  // namespace turtledb
