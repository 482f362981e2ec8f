#pragma once

#include <chrono>
#include <string>
#include <sys/types.h>
#include <vector>

#include "hdb/bridge/expr.hpp"

namespace hdb::bridge {

struct EvalResult {
  std::string output;
  std::string warnings;
  std::chrono::duration<double> elapsed{0};
};

enum class SlaveState { kRunning, kExited, kKilled };

struct ExitStatus {
  SlaveState state = SlaveState::kRunning;
  /// Exit code when state is kExited, signal number when kKilled.
  int code = 0;

  bool operator==(const ExitStatus&) const = default;
};

/// An external interpreter driven over its standard streams.
///
/// Each eval writes the expression followed by two sentinel expressions,
/// `cat("<token>\n")` and `message("<token>")`. Output on each stream up to
/// the sentinel line belongs to that eval.
class SlaveProcess {
 public:
  /// Throws SpawnFailure.
  static SlaveProcess spawn(const std::string& command, const std::vector<std::string>& args);

  SlaveProcess(SlaveProcess&& other) noexcept;
  SlaveProcess& operator=(SlaveProcess&&) = delete;
  SlaveProcess(const SlaveProcess&) = delete;
  SlaveProcess& operator=(const SlaveProcess&) = delete;
  /// Kills the process if it is still running.
  ~SlaveProcess();

  /// Throws EvalTimeout (the slave is killed), SlaveExited, EvalInFlight.
  EvalResult eval(const Expr& e, std::chrono::duration<double> timeout);

  /// Sends `q("no")`, closes stdin and waits; kills after `grace`.
  ExitStatus shutdown(std::chrono::duration<double> grace = std::chrono::seconds(5));

  /// Non-blocking status refresh.
  ExitStatus status();
  pid_t pid() const { return pid_; }
  const std::string& command() const { return command_; }

 private:
  SlaveProcess(std::string command, pid_t pid, int in, int out, int err);

  void kill_now();
  void close_fds();
  bool reap(bool block);

  std::string command_;
  pid_t pid_ = -1;
  int stdin_ = -1;
  int stdout_ = -1;
  int stderr_ = -1;
  ExitStatus exit_{};
  bool in_flight_ = false;
  unsigned long long sentinel_counter_ = 0;
  std::string out_buf_;
  std::string err_buf_;
};

}  // namespace hdb::bridge
