#include "offload/protocol/tcp_runtime.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>

#include "offload/core/error.hpp"
#include "offload/protocol/messages.hpp"

namespace offload {
namespace {

[[noreturn]] void io_error(const std::string& what) {
  throw Error(ErrorCode::IoError, what + ": " + std::strerror(errno));
}

void set_nonblocking(int fd) {
  const int flags = fcntl(fd, F_GETFL, 0);
  if (flags < 0 || fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) io_error("fcntl");
}

void set_nodelay(int fd) {
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    throw Error(ErrorCode::IoError, "cannot resolve " + host);
  }
  sockaddr_in addr = *reinterpret_cast<sockaddr_in*>(res->ai_addr);
  freeaddrinfo(res);
  addr.sin_port = htons(port);
  return addr;
}

}  // namespace

TcpRuntime::TcpRuntime(std::string device_id) : device_(std::move(device_id)), start_(std::chrono::steady_clock::now()) {
  int fds[2];
  if (pipe(fds) != 0) io_error("pipe");
  wake_rd_ = fds[0];
  wake_wr_ = fds[1];
  set_nonblocking(wake_rd_);
  set_nonblocking(wake_wr_);
}

TcpRuntime::~TcpRuntime() {
  for (auto& [_, t] : workers_) {
    if (t.joinable()) t.join();
  }
  for (auto& c : conns_) {
    if (c->fd >= 0) ::close(c->fd);
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
  ::close(wake_rd_);
  ::close(wake_wr_);
}

double TcpRuntime::now() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

std::uint16_t TcpRuntime::listen(const std::string& host, std::uint16_t port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) io_error("socket");
  int one = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  auto addr = resolve(host, port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) io_error("bind " + host);
  if (::listen(listen_fd_, 16) != 0) io_error("listen");
  set_nonblocking(listen_fd_);
  socklen_t len = sizeof addr;
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  return ntohs(addr.sin_port);
}

void TcpRuntime::connect(const std::string& host, std::uint16_t port, const std::string& peer_name) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) io_error("socket");
  auto addr = resolve(host, port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    io_error("connect " + host + ":" + std::to_string(port));
  }
  set_nodelay(fd);
  set_nonblocking(fd);
  auto conn = std::make_unique<Conn>();
  conn->fd = fd;
  conn->peer = peer_name;
  conns_.push_back(std::move(conn));
  post([this, peer_name] {
    if (handler_) handler_->on_link_up(peer_name);
  });
}

void TcpRuntime::disconnect(const std::string& peer) {
  if (auto* c = find_peer(peer)) drop(*c, "closed locally");
}

TcpRuntime::Conn* TcpRuntime::find_peer(const std::string& peer) {
  for (auto& c : conns_) {
    if (c->fd >= 0 && !c->broken && c->peer == peer) return c.get();
  }
  return nullptr;
}

void TcpRuntime::drop(Conn& conn, const char* reason) {
  if (conn.broken) return;
  conn.broken = true;
  if (conn.fd >= 0) ::close(conn.fd);
  conn.fd = -1;
  const auto peer = conn.peer;
  if (peer.empty()) return;
  trace("tcp_link_down", {{"peer", peer}, {"reason", reason}});
  post([this, peer] {
    if (handler_) handler_->on_link_down(peer);
  });
}

bool TcpRuntime::send(const std::string& peer, const Frame& frame, const std::optional<TaskInstanceId>&,
                      std::function<void(double)> on_sent) {
  auto* conn = find_peer(peer);
  if (!conn) return false;
  conn->outbox.push_back({encode_frame(frame), 0, now(), std::move(on_sent)});
  flush(*conn);
  return true;
}

void TcpRuntime::flush(Conn& conn) {
  while (!conn.broken && !conn.outbox.empty()) {
    auto& out = conn.outbox.front();
    const auto n = ::send(conn.fd, out.bytes.data() + out.offset, out.bytes.size() - out.offset, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK) return;
      if (errno == EINTR) continue;
      drop(conn, "send failed");
      return;
    }
    out.offset += static_cast<std::size_t>(n);
    if (out.offset == out.bytes.size()) {
      if (out.on_sent) {
        const double elapsed = now() - out.queued_s;
        post([cb = std::move(out.on_sent), elapsed] { cb(elapsed); });
      }
      conn.outbox.pop_front();
    }
  }
}

void TcpRuntime::read(Conn& conn) {
  std::uint8_t buf[65536];
  const char* failure = nullptr;
  for (;;) {
    const auto n = ::recv(conn.fd, buf, sizeof buf, 0);
    if (n > 0) {
      conn.decoder.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
      continue;
    }
    if (n == 0) {
      failure = "peer closed";
    } else if (errno == EINTR) {
      continue;
    } else if (errno != EAGAIN && errno != EWOULDBLOCK) {
      failure = "recv failed";
    }
    break;
  }
  // Frames that arrived before a close are still delivered, ahead of the link-down.
  for (;;) {
    std::optional<Frame> frame;
    try {
      frame = conn.decoder.next();
    } catch (const Error& e) {
      trace("protocol_error", {{"peer", conn.peer}, {"error", e.what()}});
      drop(conn, "malformed frame");
      return;
    }
    if (!frame) break;
    if (conn.peer.empty()) {
      std::string name;
      try {
        if (frame->kind == MessageKind::HELLO) name = parse_hello(*frame).device_id;
      } catch (const Error&) {
      }
      if (name.empty()) {
        drop(conn, "first frame is not a valid HELLO");
        return;
      }
      if (find_peer(name)) {
        drop(conn, "duplicate device id");
        return;
      }
      conn.peer = name;
      post([this, name] {
        if (handler_) handler_->on_link_up(name);
      });
    }
    post([this, peer = conn.peer, f = std::move(*frame)] {
      if (handler_) handler_->on_frame(peer, f);
    });
  }
  if (failure) drop(conn, failure);
}

TimerId TcpRuntime::start_timer(double delay_s, std::function<void()> fn) {
  const auto id = next_timer_++;
  const double at = now() + std::max(0.0, delay_s);
  timers_.emplace(id, std::make_pair(at, std::move(fn)));
  timer_order_.emplace(at, id);
  return id;
}

void TcpRuntime::cancel_timer(TimerId id) {
  auto it = timers_.find(id);
  if (it == timers_.end()) return;
  timer_order_.erase({it->second.first, id});
  timers_.erase(it);
}

ComputeId TcpRuntime::compute(double model_s, const std::optional<TaskInstanceId>&, std::function<void()> work,
                              std::function<void(double)> done) {
  const auto id = next_compute_++;
  computes_.emplace(id, std::move(done));
  const double min_s = pace_ ? model_s : 0.0;
  workers_.emplace(id, std::thread([this, id, min_s, work = std::move(work)] {
    const auto t0 = std::chrono::steady_clock::now();
    work();
    std::this_thread::sleep_until(t0 + std::chrono::duration<double>(min_s));
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    {
      std::lock_guard lock(done_mu_);
      done_.push_back({id, elapsed});
    }
    wake();
  }));
  return id;
}

void TcpRuntime::cancel_compute(ComputeId id) { computes_.erase(id); }

void TcpRuntime::wake() {
  const std::uint8_t b = 1;
  [[maybe_unused]] const auto n = ::write(wake_wr_, &b, 1);
}

void TcpRuntime::trace(std::string_view event_kind, TraceDetail detail) {
  nlohmann::ordered_json line{{"time_s", now()}, {"device", device_}, {"event_kind", event_kind}, {"detail", std::move(detail)}};
  auto text = line.dump();
  if (sink_) {
    sink_(text);
  } else {
    trace_lines_.push_back(std::move(text));
  }
}

bool TcpRuntime::run_until(const std::function<bool()>& stop, double timeout_s) {
  const double deadline = now() + timeout_s;
  for (;;) {
    if (stop && stop()) return true;
    if (!deferred_.empty()) {
      auto fn = std::move(deferred_.front());
      deferred_.pop_front();
      fn();
      continue;
    }
    if (!timer_order_.empty() && timer_order_.begin()->first <= now()) {
      const auto id = timer_order_.begin()->second;
      timer_order_.erase(timer_order_.begin());
      auto fn = std::move(timers_.at(id).second);
      timers_.erase(id);
      fn();
      continue;
    }
    {
      std::vector<Completion> ready;
      {
        std::lock_guard lock(done_mu_);
        ready.swap(done_);
      }
      for (const auto& c : ready) {
        if (auto w = workers_.find(c.id); w != workers_.end()) {
          w->second.join();
          workers_.erase(w);
        }
        auto it = computes_.find(c.id);
        if (it == computes_.end()) continue;
        auto cb = std::move(it->second);
        computes_.erase(it);
        post([cb = std::move(cb), e = c.elapsed_s] { cb(e); });
      }
      if (!ready.empty()) continue;
    }
    const double t = now();
    if (t >= deadline) return false;

    double wait_s = deadline - t;
    if (!timer_order_.empty()) wait_s = std::min(wait_s, timer_order_.begin()->first - t);
    std::vector<pollfd> fds;
    fds.push_back({wake_rd_, POLLIN, 0});
    if (listen_fd_ >= 0) fds.push_back({listen_fd_, POLLIN, 0});
    std::vector<Conn*> polled;
    for (auto& c : conns_) {
      if (c->broken) continue;
      fds.push_back({c->fd, static_cast<short>(POLLIN | (c->outbox.empty() ? 0 : POLLOUT)), 0});
      polled.push_back(c.get());
    }
    const int timeout_ms = static_cast<int>(std::ceil(std::max(0.0, wait_s) * 1000.0));
    const int rc = ::poll(fds.data(), fds.size(), timeout_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      io_error("poll");
    }
    std::size_t i = 0;
    if (fds[i++].revents & POLLIN) {
      std::uint8_t buf[256];
      while (::read(wake_rd_, buf, sizeof buf) > 0) {
      }
    }
    if (listen_fd_ >= 0 && (fds[i++].revents & POLLIN)) {
      for (;;) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) break;
        set_nodelay(fd);
        set_nonblocking(fd);
        auto conn = std::make_unique<Conn>();
        conn->fd = fd;
        conns_.push_back(std::move(conn));
      }
    }
    for (auto* c : polled) {
      const auto ev = fds[i++].revents;
      if (c->broken) continue;
      if (ev & POLLOUT) flush(*c);
      if (ev & (POLLIN | POLLHUP | POLLERR)) read(*c);
    }
    std::erase_if(conns_, [](const std::unique_ptr<Conn>& c) { return c->broken; });
  }
}

}  // namespace offload
