#include "hdb/bridge/slave.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "hdb/common.hpp"

extern char** environ;

namespace hdb::bridge {
namespace {

using Seconds = std::chrono::duration<double>;
using SteadyClock = std::chrono::steady_clock;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

int remaining_ms(SteadyClock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - SteadyClock::now());
  return left.count() < 0 ? 0 : static_cast<int>(left.count());
}

// Splits `buf` at "<token>\n" if present, returning the text before it.
bool take_until(std::string& buf, const std::string& token, std::string& out) {
  const std::string marker = token + "\n";
  const auto pos = buf.find(marker);
  if (pos == std::string::npos) return false;
  out = buf.substr(0, pos);
  buf.erase(0, pos + marker.size());
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return true;
}

}  // namespace

SlaveProcess SlaveProcess::spawn(const std::string& command,
                                 const std::vector<std::string>& args) {
  ignore_sigpipe();
  int in[2];
  int out[2];
  int err[2];
  if (::pipe2(in, O_CLOEXEC) != 0) throw Error(Errc::kSpawnFailure, std::strerror(errno));
  if (::pipe2(out, O_CLOEXEC) != 0) {
    ::close(in[0]);
    ::close(in[1]);
    throw Error(Errc::kSpawnFailure, std::strerror(errno));
  }
  if (::pipe2(err, O_CLOEXEC) != 0) {
    for (int fd : {in[0], in[1], out[0], out[1]}) ::close(fd);
    throw Error(Errc::kSpawnFailure, std::strerror(errno));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out[1], STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&actions, err[1], STDERR_FILENO);

  std::vector<char*> argv;
  argv.push_back(const_cast<char*>(command.c_str()));
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, command.c_str(), &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in[0]);
  ::close(out[1]);
  ::close(err[1]);
  if (rc != 0) {
    ::close(in[1]);
    ::close(out[0]);
    ::close(err[0]);
    throw Error(Errc::kSpawnFailure, fmt::format("{}: {}", command, std::strerror(rc)));
  }
  return SlaveProcess(command, pid, in[1], out[0], err[0]);
}

SlaveProcess::SlaveProcess(std::string command, pid_t pid, int in, int out, int err)
    : command_(std::move(command)), pid_(pid), stdin_(in), stdout_(out), stderr_(err) {}

SlaveProcess::SlaveProcess(SlaveProcess&& other) noexcept
    : command_(std::move(other.command_)),
      pid_(std::exchange(other.pid_, -1)),
      stdin_(std::exchange(other.stdin_, -1)),
      stdout_(std::exchange(other.stdout_, -1)),
      stderr_(std::exchange(other.stderr_, -1)),
      exit_(other.exit_),
      in_flight_(other.in_flight_),
      sentinel_counter_(other.sentinel_counter_),
      out_buf_(std::move(other.out_buf_)),
      err_buf_(std::move(other.err_buf_)) {}

SlaveProcess::~SlaveProcess() {
  if (pid_ > 0 && exit_.state == SlaveState::kRunning && !reap(false)) kill_now();
  close_fds();
}

void SlaveProcess::close_fds() {
  for (int* fd : {&stdin_, &stdout_, &stderr_}) {
    if (*fd >= 0) ::close(*fd);
    *fd = -1;
  }
}

bool SlaveProcess::reap(bool block) {
  if (pid_ <= 0 || exit_.state != SlaveState::kRunning) return true;
  int st = 0;
  pid_t r;
  do {
    r = ::waitpid(pid_, &st, block ? 0 : WNOHANG);
  } while (r < 0 && errno == EINTR);
  if (r != pid_) return false;
  if (WIFEXITED(st)) {
    exit_ = {SlaveState::kExited, WEXITSTATUS(st)};
  } else if (WIFSIGNALED(st)) {
    exit_ = {SlaveState::kKilled, WTERMSIG(st)};
  }
  return true;
}

void SlaveProcess::kill_now() {
  if (pid_ <= 0 || exit_.state != SlaveState::kRunning) return;
  ::kill(pid_, SIGKILL);
  reap(true);
  exit_ = {SlaveState::kKilled, SIGKILL};
}

ExitStatus SlaveProcess::status() {
  reap(false);
  return exit_;
}

EvalResult SlaveProcess::eval(const Expr& e, std::chrono::duration<double> timeout) {
  if (status().state != SlaveState::kRunning) {
    throw Error(Errc::kSlaveExited, std::to_string(exit_.code));
  }
  if (in_flight_) throw Error(Errc::kEvalInFlight, command_);
  in_flight_ = true;
  struct Clear {
    bool& flag;
    ~Clear() { flag = false; }
  } clear{in_flight_};

  const auto start = SteadyClock::now();
  const auto deadline = start + std::chrono::duration_cast<SteadyClock::duration>(timeout);
  const std::string token = fmt::format("__hdb_sentinel_{}_{}__", pid_, ++sentinel_counter_);
  std::string payload = serialize(e);
  payload += serialize(call("cat", {str(token + "\n")}));
  payload += serialize(call("message", {str(token)}));

  auto timed_out = [&]() -> Error {
    kill_now();
    return Error(Errc::kEvalTimeout, fmt::format("{} after {:.3f}s", command_, timeout.count()));
  };
  auto exited = [&]() -> Error {
    reap(true);
    return Error(Errc::kSlaveExited, std::to_string(exit_.code));
  };

  std::size_t written = 0;
  while (written < payload.size()) {
    pollfd p{stdin_, POLLOUT, 0};
    const int n = ::poll(&p, 1, remaining_ms(deadline));
    if (n == 0) throw timed_out();
    if (n < 0) {
      if (errno == EINTR) continue;
      throw exited();
    }
    const ssize_t w = ::write(stdin_, payload.data() + written, payload.size() - written);
    if (w < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw exited();
    }
    written += static_cast<std::size_t>(w);
  }

  EvalResult result;
  bool out_done = take_until(out_buf_, token, result.output);
  bool err_done = take_until(err_buf_, token, result.warnings);
  char chunk[4096];
  while (!out_done || !err_done) {
    pollfd fds[2] = {{out_done ? -1 : stdout_, POLLIN, 0}, {err_done ? -1 : stderr_, POLLIN, 0}};
    const int n = ::poll(fds, 2, remaining_ms(deadline));
    if (n == 0) throw timed_out();
    if (n < 0) {
      if (errno == EINTR) continue;
      throw exited();
    }
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || fds[i].revents == 0) continue;
      const ssize_t r = ::read(fds[i].fd, chunk, sizeof chunk);
      if (r == 0 || (r < 0 && errno != EINTR && errno != EAGAIN)) throw exited();
      if (r < 0) continue;
      if (i == 0) {
        out_buf_.append(chunk, static_cast<std::size_t>(r));
        out_done = take_until(out_buf_, token, result.output);
      } else {
        err_buf_.append(chunk, static_cast<std::size_t>(r));
        err_done = take_until(err_buf_, token, result.warnings);
      }
    }
  }
  result.elapsed = SteadyClock::now() - start;
  return result;
}

ExitStatus SlaveProcess::shutdown(std::chrono::duration<double> grace) {
  if (status().state != SlaveState::kRunning) {
    close_fds();
    return exit_;
  }
  if (stdin_ >= 0) {
    const std::string quit = serialize(call("q", {str("no")}));
    [[maybe_unused]] const ssize_t w = ::write(stdin_, quit.data(), quit.size());
    ::close(stdin_);
    stdin_ = -1;
  }
  const auto deadline = SteadyClock::now() + std::chrono::duration_cast<SteadyClock::duration>(grace);
  while (!reap(false)) {
    if (SteadyClock::now() >= deadline) {
      kill_now();
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  close_fds();
  return exit_;
}

}  // namespace hdb::bridge
