// Kill-based durability check: a child process appends updates, reports
// the durable seq from flush_blocks over a pipe, then keeps appending
// until the parent SIGKILLs it. Recovery must yield every seq up to the
// reported durable bound, as a clean prefix.

#include <turtledb/wal/wal.hpp>

#include <csignal>
#include <cstdio>
#include <cstring>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

using namespace turtledb;

namespace {

Wal::Options opts()
{
  Wal::Options o;
  o.block_bytes = 4096;
  o.poll_micros = 100;
  o.start_flusher = true;
  return o;
}

int child_main(const std::string& path, int write_fd)
{
  auto wal = Wal::open(Env::posix(), path, opts(), nullptr, 1, 0);
  if (!wal.ok()) {
    return 3;
  }
  for (int i = 0; i < 500; ++i) {
    auto s = (*wal)->append("key" + std::to_string(i), Value::of("value" + std::to_string(i)));
    if (!s.ok()) {
      return 3;
    }
  }
  auto durable = (*wal)->flush_blocks();
  if (!durable.ok()) {
    return 3;
  }
  const u64 bound = *durable;
  if (write(write_fd, &bound, sizeof(bound)) != sizeof(bound)) {
    return 3;
  }
  // Keep appending until killed; none of this is guaranteed durable.
  u64 i = 500;
  while (true) {
    (void)(*wal)->append("late" + std::to_string(i++), Value::of("x"));
  }
}

}  // namespace

int main(int argc, char** argv)
{
  const std::string dir = "/tmp/tdb-wal-kill-" + std::to_string(getpid());
  const std::string path = dir + "/WAL";
  std::string mkdir_cmd = "mkdir -p " + dir;
  if (std::system(mkdir_cmd.c_str()) != 0) {
    return 1;
  }

  if (argc > 1 && std::strcmp(argv[1], "--child") == 0) {
    return child_main(argv[2], 1);
  }

  int ok = 0;
  for (int round = 0; round < 3 && ok == 0; ++round) {
    (void)Env::posix().remove_file(path);

    int fds[2];
    if (pipe(fds) != 0) {
      return 1;
    }
    const pid_t pid = fork();
    if (pid < 0) {
      return 1;
    }
    if (pid == 0) {
      close(fds[0]);
      _exit(child_main(path, fds[1]));
    }
    close(fds[1]);

    u64 durable = 0;
    if (read(fds[0], &durable, sizeof(durable)) != sizeof(durable)) {
      std::fprintf(stderr, "child did not report a durable seq\n");
      kill(pid, SIGKILL);
      waitpid(pid, nullptr, 0);
      return 1;
    }
    close(fds[0]);

    // Give the child a moment to buffer more (non-durable) appends.
    usleep(20 * 1000);
    kill(pid, SIGKILL);
    waitpid(pid, nullptr, 0);

    auto log = Wal::recover(Env::posix(), path, opts());
    if (!log.ok()) {
      std::fprintf(stderr, "recover failed: %s\n", log.status().to_string().c_str());
      ok = 1;
      break;
    }
    // Every reported-durable seq survives, and the result is a prefix.
    if (log->updates.size() < durable) {
      std::fprintf(stderr, "round %d: durable=%llu but only %zu recovered\n", round,
                   static_cast<unsigned long long>(durable), log->updates.size());
      ok = 1;
      break;
    }
    for (size_t i = 0; i < log->updates.size(); ++i) {
      if (log->updates[i].seq != i + 1) {
        std::fprintf(stderr, "round %d: recovered seqs are not a clean prefix\n", round);
        ok = 1;
        break;
      }
    }
    std::printf("round %d: durable=%llu recovered=%zu\n", round, static_cast<unsigned long long>(durable),
                log->updates.size());
  }

  std::string cleanup = "rm -rf " + dir;
  (void)std::system(cleanup.c_str());
  if (ok == 0) {
    std::printf("wal kill test passed\n");
  }
  return ok;
}
