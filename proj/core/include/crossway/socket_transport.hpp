#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "crossway/transport.hpp"

namespace crossway {

// Real stream-socket transport. Frames are 4-byte big-endian length plus
// payload. Each endpoint runs one receive thread (delivering frames in
// order, one callback in flight) and one writer thread draining a FIFO send
// queue, so a slow peer never blocks the caller. Endpoints must be destroyed
// outside their own callbacks: the destructor joins both threads.

// Splits "host:port". Throws validation_error on malformed input.
std::pair<std::string, int> parse_hostport(const std::string& address);

// Connects to a listening peer. Throws runtime_fault on failure. The
// returned endpoint must have callbacks installed, then start() called.
std::shared_ptr<transport_endpoint> tcp_connect(const std::string& host,
                                                int port);

// Accepts inbound connections on host:port (port 0 picks an ephemeral one).
class tcp_listener {
 public:
  tcp_listener(const std::string& host, int port);
  ~tcp_listener();

  int port() const { return port_; }

  // Spawns the accept loop. The callback receives endpoints with no
  // callbacks installed and not yet started.
  void start(
      std::function<void(std::shared_ptr<transport_endpoint>)> on_accept);
  void stop();

 private:
  int fd_ = -1;
  int port_ = 0;
  std::thread accept_thread_;
};

}  // namespace crossway
