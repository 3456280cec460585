#include "rune/deploy/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <atomic>
#include <map>
#include <mutex>

namespace rune::deploy {

std::string_view to_string(TransportType t) noexcept {
  return t == TransportType::Tcp ? "TCP" : "LOOPBACK";
}

std::optional<TransportType> parse_transport(std::string_view text) noexcept {
  if (text == "TCP" || text == "tcp") return TransportType::Tcp;
  if (text == "LOOPBACK" || text == "loopback") return TransportType::Loopback;
  return std::nullopt;
}

namespace {

using Clock = std::chrono::steady_clock;

[[noreturn]] void io_fail(const std::string& what) { fail(Errc::IoError, what); }

int remaining_ms(Clock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left > 0 ? static_cast<int>(left) : 0;
}

// ---------------------------------------------------------------------------
// TCP

struct HostPort {
  std::string host;
  std::string port;
};

HostPort split_locator(std::string_view locator) {
  if (locator.starts_with("tcp://")) locator.remove_prefix(6);
  auto colon = locator.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == locator.size()) {
    fail(Errc::InvalidArgument, "TCP locator must be host:port, got '" + std::string(locator) + "'");
  }
  return {std::string(locator.substr(0, colon)), std::string(locator.substr(colon + 1))};
}

class Fd {
 public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    reset();
    fd_ = std::exchange(o.fd_, -1);
    return *this;
  }
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_;
};

class TcpStream final : public Stream {
 public:
  explicit TcpStream(Fd fd) : fd_(std::move(fd)) {
    int one = 1;
    ::setsockopt(fd_.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }

  void write_all(ByteView data) override {
    std::size_t sent = 0;
    while (sent < data.size()) {
      ssize_t n = ::send(fd_.get(), data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) {
          pollfd p{fd_.get(), POLLOUT, 0};
          ::poll(&p, 1, 1000);
          continue;
        }
        io_fail(std::string("send: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  void read_exact(std::span<std::uint8_t> out, std::chrono::milliseconds timeout) override {
    auto deadline = Clock::now() + timeout;
    std::size_t got = 0;
    while (got < out.size()) {
      pollfd p{fd_.get(), POLLIN, 0};
      int r = ::poll(&p, 1, remaining_ms(deadline));
      if (r < 0) {
        if (errno == EINTR) continue;
        io_fail(std::string("poll: ") + std::strerror(errno));
      }
      if (r == 0) io_fail("read timed out");
      ssize_t n = ::recv(fd_.get(), out.data() + got, out.size() - got, 0);
      if (n == 0) io_fail("connection closed by peer");
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) continue;
        io_fail(std::string("recv: ") + std::strerror(errno));
      }
      got += static_cast<std::size_t>(n);
    }
  }

  // Shutdown only, so a reader blocked in another thread wakes up; the
  // descriptor itself is released by the destructor.
  void close() override {
    if (fd_.get() >= 0) ::shutdown(fd_.get(), SHUT_RDWR);
  }

 private:
  Fd fd_;
};

class TcpListener final : public Listener {
 public:
  explicit TcpListener(std::string_view locator) {
    HostPort hp = split_locator(locator);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const char* host = hp.host.empty() || hp.host == "*" ? nullptr : hp.host.c_str();
    if (int rc = ::getaddrinfo(host, hp.port.c_str(), &hints, &res); rc != 0) {
      io_fail(std::string("cannot resolve listen address: ") + ::gai_strerror(rc));
    }
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, ::freeaddrinfo);
    fd_ = Fd(::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol));
    if (fd_.get() < 0) io_fail(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd_.get(), res->ai_addr, res->ai_addrlen) != 0) {
      io_fail("bind " + std::string(locator) + ": " + std::strerror(errno));
    }
    if (::listen(fd_.get(), 16) != 0) io_fail(std::string("listen: ") + std::strerror(errno));

    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&bound), &len);
    char ip[INET_ADDRSTRLEN] = {};
    ::inet_ntop(AF_INET, &bound.sin_addr, ip, sizeof ip);
    locator_ = std::string(ip) + ":" + std::to_string(ntohs(bound.sin_port));
  }

  std::unique_ptr<Stream> accept(std::chrono::milliseconds timeout) override {
    if (closed_) return nullptr;
    pollfd p{fd_.get(), POLLIN, 0};
    int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (r <= 0 || closed_) return nullptr;
    int c = ::accept4(fd_.get(), nullptr, nullptr, SOCK_CLOEXEC);
    if (c < 0) return nullptr;
    return std::make_unique<TcpStream>(Fd(c));
  }

  void close() override {
    closed_ = true;
    if (fd_.get() >= 0) ::shutdown(fd_.get(), SHUT_RDWR);
  }

  std::string locator() const override { return locator_; }

 private:
  Fd fd_;
  std::string locator_;
  std::atomic<bool> closed_{false};
};

std::unique_ptr<Stream> tcp_connect(std::string_view locator, std::chrono::milliseconds timeout) {
  HostPort hp = split_locator(locator);
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(hp.host.c_str(), hp.port.c_str(), &hints, &res); rc != 0) {
    fail(Errc::TargetUnreachable, "cannot resolve " + std::string(locator) + ": " + ::gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, ::freeaddrinfo);
  Fd fd(::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC | SOCK_NONBLOCK, res->ai_protocol));
  if (fd.get() < 0) fail(Errc::TargetUnreachable, std::string("socket: ") + std::strerror(errno));
  if (::connect(fd.get(), res->ai_addr, res->ai_addrlen) != 0) {
    if (errno != EINPROGRESS) {
      fail(Errc::TargetUnreachable, "connect " + std::string(locator) + ": " + std::strerror(errno));
    }
    pollfd p{fd.get(), POLLOUT, 0};
    if (::poll(&p, 1, static_cast<int>(timeout.count())) <= 0) {
      fail(Errc::TargetUnreachable, "connect " + std::string(locator) + ": timed out");
    }
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) fail(Errc::TargetUnreachable, "connect " + std::string(locator) + ": " + std::strerror(err));
  }
  int flags = ::fcntl(fd.get(), F_GETFL);
  ::fcntl(fd.get(), F_SETFL, flags & ~O_NONBLOCK);
  return std::make_unique<TcpStream>(std::move(fd));
}

// ---------------------------------------------------------------------------
// In-process loopback

class Pipe {
 public:
  void write(ByteView data) {
    std::lock_guard lock(mu_);
    if (closed_) io_fail("connection closed by peer");
    buf_.insert(buf_.end(), data.begin(), data.end());
    cv_.notify_all();
  }

  void read(std::span<std::uint8_t> out, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    auto deadline = Clock::now() + timeout;
    std::size_t got = 0;
    while (got < out.size()) {
      if (!cv_.wait_until(lock, deadline, [&] { return !buf_.empty() || closed_; })) io_fail("read timed out");
      if (buf_.empty()) io_fail("connection closed by peer");
      while (got < out.size() && !buf_.empty()) {
        out[got++] = buf_.front();
        buf_.pop_front();
      }
    }
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::uint8_t> buf_;
  bool closed_ = false;
};

class LoopbackStream final : public Stream {
 public:
  LoopbackStream(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out) : in_(std::move(in)), out_(std::move(out)) {}
  ~LoopbackStream() override { close(); }

  void write_all(ByteView data) override { out_->write(data); }
  void read_exact(std::span<std::uint8_t> out, std::chrono::milliseconds timeout) override { in_->read(out, timeout); }
  void close() override {
    in_->close();
    out_->close();
  }

 private:
  std::shared_ptr<Pipe> in_;
  std::shared_ptr<Pipe> out_;
};

struct LoopbackHub {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::unique_ptr<Stream>> pending;
  bool closed = false;
};

std::mutex g_hubs_mu;
std::map<std::string, std::shared_ptr<LoopbackHub>, std::less<>> g_hubs;

class LoopbackListener final : public Listener {
 public:
  explicit LoopbackListener(std::string name) : name_(std::move(name)), hub_(std::make_shared<LoopbackHub>()) {
    std::lock_guard lock(g_hubs_mu);
    if (!g_hubs.emplace(name_, hub_).second) io_fail("loopback locator '" + name_ + "' already in use");
  }
  ~LoopbackListener() override { close(); }

  std::unique_ptr<Stream> accept(std::chrono::milliseconds timeout) override {
    std::unique_lock lock(hub_->mu);
    hub_->cv.wait_for(lock, timeout, [&] { return !hub_->pending.empty() || hub_->closed; });
    if (hub_->closed || hub_->pending.empty()) return nullptr;
    auto s = std::move(hub_->pending.front());
    hub_->pending.pop_front();
    return s;
  }

  void close() override {
    {
      std::lock_guard lock(g_hubs_mu);
      auto it = g_hubs.find(name_);
      if (it != g_hubs.end() && it->second == hub_) g_hubs.erase(it);
    }
    std::lock_guard lock(hub_->mu);
    hub_->closed = true;
    hub_->pending.clear();
    hub_->cv.notify_all();
  }

  std::string locator() const override { return name_; }

 private:
  std::string name_;
  std::shared_ptr<LoopbackHub> hub_;
};

std::unique_ptr<Stream> loopback_connect(std::string_view name) {
  std::shared_ptr<LoopbackHub> hub;
  {
    std::lock_guard lock(g_hubs_mu);
    auto it = g_hubs.find(name);
    if (it == g_hubs.end()) fail(Errc::TargetUnreachable, "no loopback device at '" + std::string(name) + "'");
    hub = it->second;
  }
  auto up = std::make_shared<Pipe>();
  auto down = std::make_shared<Pipe>();
  std::lock_guard lock(hub->mu);
  if (hub->closed) fail(Errc::TargetUnreachable, "loopback device '" + std::string(name) + "' stopped");
  hub->pending.push_back(std::make_unique<LoopbackStream>(up, down));
  hub->cv.notify_all();
  return std::make_unique<LoopbackStream>(down, up);
}

}  // namespace

std::unique_ptr<Stream> connect(std::string_view locator, TransportType type, std::chrono::milliseconds timeout) {
  return type == TransportType::Tcp ? tcp_connect(locator, timeout) : loopback_connect(locator);
}

std::unique_ptr<Listener> listen(std::string_view locator, TransportType type) {
  if (type == TransportType::Tcp) return std::make_unique<TcpListener>(locator);
  return std::make_unique<LoopbackListener>(std::string(locator));
}

}  // namespace rune::deploy
