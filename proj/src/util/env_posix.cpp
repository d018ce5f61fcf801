#include <turtledb/util/env.hpp>

#include <cerrno>
#include <cstring>
#include <filesystem>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

namespace turtledb {

namespace {

Status errno_status(const char* op, const std::string& path)
{
  return Status::io_failure(std::string{op} + " " + path + ": " + std::strerror(errno));
}

class PosixFile final : public File
{
 public:
  PosixFile(int fd, std::string path) : fd_{fd}, path_{std::move(path)} {}

  ~PosixFile() override
  {
    if (fd_ >= 0) {
      ::close(fd_);
    }
  }

  Status pread(u64 offset, size_t n, std::string* out) override
  {
    out->resize(n);
    size_t done = 0;
    while (done < n) {
      ssize_t r = ::pread(fd_, out->data() + done, n - done, static_cast<off_t>(offset + done));
      if (r < 0) {
        if (errno == EINTR) {
          continue;
        }
        return errno_status("pread", path_);
      }
      if (r == 0) {
        return Status::io_failure("pread " + path_ + ": short read (eof)");
      }
      done += static_cast<size_t>(r);
    }
    return Status::OK();
  }

  Status pwrite(u64 offset, std::string_view data) override
  {
    size_t done = 0;
    while (done < data.size()) {
      ssize_t r = ::pwrite(fd_, data.data() + done, data.size() - done, static_cast<off_t>(offset + done));
      if (r < 0) {
        if (errno == EINTR) {
          continue;
        }
        return errno_status("pwrite", path_);
      }
      done += static_cast<size_t>(r);
    }
    return Status::OK();
  }

  Status sync() override
  {
    if (::fdatasync(fd_) != 0) {
      return errno_status("fdatasync", path_);
    }
    return Status::OK();
  }

  StatusOr<u64> size() override
  {
    struct stat st;
    if (::fstat(fd_, &st) != 0) {
      return errno_status("fstat", path_);
    }
    return static_cast<u64>(st.st_size);
  }

  Status truncate(u64 new_size) override
  {
    if (::ftruncate(fd_, static_cast<off_t>(new_size)) != 0) {
      return errno_status("ftruncate", path_);
    }
    return Status::OK();
  }

 private:
  int fd_;
  std::string path_;
};

class PosixEnv final : public Env
{
 public:
  StatusOr<std::unique_ptr<File>> open_file(const std::string& path, bool create) override
  {
    int flags = O_RDWR;
    if (create) {
      flags |= O_CREAT;
    }
    int fd = ::open(path.c_str(), flags, 0644);
    if (fd < 0) {
      return errno_status("open", path);
    }
    return std::unique_ptr<File>{new PosixFile{fd, path}};
  }

  bool file_exists(const std::string& path) override
  {
    struct stat st;
    return ::stat(path.c_str(), &st) == 0;
  }

  Status remove_file(const std::string& path) override
  {
    if (::unlink(path.c_str()) != 0 && errno != ENOENT) {
      return errno_status("unlink", path);
    }
    return Status::OK();
  }

  Status rename_file(const std::string& from, const std::string& to) override
  {
    if (::rename(from.c_str(), to.c_str()) != 0) {
      return errno_status("rename", from);
    }
    return Status::OK();
  }

  Status create_dir(const std::string& path) override
  {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) {
      return Status::io_failure("create_dir " + path + ": " + ec.message());
    }
    return Status::OK();
  }
};

}  // namespace

Env& Env::posix()
{
  static PosixEnv env;
  return env;
}

}  // namespace turtledb
