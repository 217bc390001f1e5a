#include "crossway/socket_transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

#include "crossway/errors.hpp"

namespace crossway {

namespace {

constexpr std::size_t kMaxFrameBytes = 16u * 1024u * 1024u;

bool read_exact(int fd, void* buf, std::size_t len) {
  auto* p = static_cast<char*>(buf);
  while (len > 0) {
    const ssize_t n = ::recv(fd, p, len, 0);
    if (n <= 0) return false;
    p += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

bool write_exact(int fd, const void* buf, std::size_t len) {
  const auto* p = static_cast<const char*>(buf);
  while (len > 0) {
    const ssize_t n = ::send(fd, p, len, MSG_NOSIGNAL);
    if (n <= 0) return false;
    p += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

sockaddr_in make_addr(const std::string& host, int port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw validation_error("address", "not an IPv4 address: " + host);
  }
  return addr;
}

// Owner contract: the endpoint must be destroyed outside its own callbacks
// (the destructor joins the reader/writer threads).
class tcp_endpoint final : public transport_endpoint {
 public:
  explicit tcp_endpoint(int fd) : fd_(fd) {
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }

  ~tcp_endpoint() override {
    close();
    if (reader_.joinable()) reader_.join();
    if (writer_.joinable()) writer_.join();
    ::close(fd_);
  }

  void send(std::string frame) override {
    if (frame.size() > kMaxFrameBytes) {
      throw runtime_fault("frame exceeds the 16 MiB limit");
    }
    std::lock_guard lock(mu_);
    if (!open_) return;
    queue_.push_back(std::move(frame));
    cv_.notify_one();
  }

  void set_on_message(std::function<void(const std::string&)> cb) override {
    on_message_ = std::move(cb);
  }

  void set_on_disconnect(std::function<void()> cb) override {
    on_disconnect_ = std::move(cb);
  }

  void start() override {
    reader_ = std::thread([this] { read_loop(); });
    writer_ = std::thread([this] { write_loop(); });
  }

  // Local close: stops reading immediately, lets the writer drain queued
  // frames (so a final rejection/ack still reaches the peer), does not fire
  // on_disconnect.
  void close() override {
    {
      std::lock_guard lock(mu_);
      if (!open_) return;
      open_ = false;
    }
    ::shutdown(fd_, SHUT_RD);
    cv_.notify_all();
  }

  bool connected() const override {
    std::lock_guard lock(mu_);
    return open_;
  }

 private:
  void read_loop() {
    while (true) {
      std::uint32_t len_be = 0;
      if (!read_exact(fd_, &len_be, sizeof len_be)) break;
      const std::uint32_t len = ntohl(len_be);
      if (len > kMaxFrameBytes) break;
      std::string frame(len, '\0');
      if (len > 0 && !read_exact(fd_, frame.data(), len)) break;
      {
        std::lock_guard lock(mu_);
        if (!open_) break;
      }
      if (on_message_) on_message_(frame);
    }
    bool peer_initiated = false;
    {
      std::lock_guard lock(mu_);
      peer_initiated = open_;
      open_ = false;
    }
    cv_.notify_all();
    if (peer_initiated && on_disconnect_) on_disconnect_();
  }

  void write_loop() {
    while (true) {
      std::string frame;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return !open_ || !queue_.empty(); });
        if (queue_.empty()) break;  // closed and fully drained
        frame = std::move(queue_.front());
        queue_.pop_front();
      }
      const std::uint32_t len_be =
          htonl(static_cast<std::uint32_t>(frame.size()));
      if (!write_exact(fd_, &len_be, sizeof len_be) ||
          !write_exact(fd_, frame.data(), frame.size())) {
        std::lock_guard lock(mu_);
        open_ = false;
        queue_.clear();
        break;
      }
    }
    ::shutdown(fd_, SHUT_WR);
  }

  int fd_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> queue_;
  bool open_ = true;
  std::function<void(const std::string&)> on_message_;
  std::function<void()> on_disconnect_;
  std::thread reader_;
  std::thread writer_;
};

}  // namespace

std::pair<std::string, int> parse_hostport(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 ||
      colon + 1 >= address.size()) {
    throw validation_error("address",
                           "expected host:port, got '" + address + "'");
  }
  int port = 0;
  try {
    port = std::stoi(address.substr(colon + 1));
  } catch (const std::exception&) {
    throw validation_error("address", "port is not a number");
  }
  if (port < 0 || port > 65535) {
    throw validation_error("address", "port out of range");
  }
  return {address.substr(0, colon), port};
}

std::shared_ptr<transport_endpoint> tcp_connect(const std::string& host,
                                                int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw runtime_fault("socket() failed");
  sockaddr_in addr = make_addr(host, port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string reason = std::strerror(errno);
    ::close(fd);
    throw runtime_fault("connect to " + host + ":" + std::to_string(port) +
                        " failed: " + reason);
  }
  return std::make_shared<tcp_endpoint>(fd);
}

tcp_listener::tcp_listener(const std::string& host, int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw runtime_fault("socket() failed");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = make_addr(host, port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string reason = std::strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw runtime_fault("bind " + host + ":" + std::to_string(port) +
                        " failed: " + reason);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (::listen(fd_, 16) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw runtime_fault("listen failed");
  }
}

tcp_listener::~tcp_listener() { stop(); }

void tcp_listener::start(
    std::function<void(std::shared_ptr<transport_endpoint>)> on_accept) {
  accept_thread_ = std::thread([this, on_accept = std::move(on_accept)] {
    while (true) {
      const int client = ::accept(fd_, nullptr, nullptr);
      if (client < 0) break;  // listener closed
      on_accept(std::make_shared<tcp_endpoint>(client));
    }
  });
}

void tcp_listener::stop() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
  if (accept_thread_.joinable()) accept_thread_.join();
}

}  // namespace crossway
