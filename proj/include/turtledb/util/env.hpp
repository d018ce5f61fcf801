#pragma once

#include <turtledb/core/status.hpp>
#include <turtledb/core/types.hpp>

#include <memory>
#include <string>

namespace turtledb {

// Randomly addressable file handle. Implementations must be safe for
// concurrent pread/pwrite on disjoint ranges.
class File
{
 public:
  virtual ~File() = default;

  virtual Status pread(u64 offset, size_t n, std::string* out) = 0;
  virtual Status pwrite(u64 offset, std::string_view data) = 0;
  virtual Status sync() = 0;
  virtual StatusOr<u64> size() = 0;
  virtual Status truncate(u64 new_size) = 0;
};

// Filesystem access used by every storage component. Tests substitute a
// fault-injecting implementation to simulate crashes.
class Env
{
 public:
  virtual ~Env() = default;

  virtual StatusOr<std::unique_ptr<File>> open_file(const std::string& path, bool create) = 0;
  virtual bool file_exists(const std::string& path) = 0;
  virtual Status remove_file(const std::string& path) = 0;
  virtual Status rename_file(const std::string& from, const std::string& to) = 0;
  virtual Status create_dir(const std::string& path) = 0;

  static Env& posix();
};

}  // namespace turtledb
