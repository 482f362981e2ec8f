#pragma once

// Transports for an App: a threaded HTTP/1.1 listener, and one exchange over
// a pair of streams for inetd-style deployment.

#include <istream>
#include <memory>
#include <ostream>
#include <string>

#include "hdb/server/app.hpp"

namespace hdb::server {

class Listener {
 public:
  /// Binds immediately. Port 0 picks an ephemeral port. Throws PortInUse.
  Listener(App& app, const std::string& host, unsigned port);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  unsigned port() const { return port_; }

  /// Serves until stop() is called.
  void run();
  /// Serves on a background thread; returns once accepting.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  unsigned port_ = 0;
};

/// Reads one request from `in`, writes the response to `out`.
void serve_single_request(App& app, std::istream& in, std::ostream& out, std::string peer);

/// Peer address of the socket on file descriptor `fd`, or "" when it is not
/// a socket.
std::string socket_peer(int fd);

}  // namespace hdb::server
