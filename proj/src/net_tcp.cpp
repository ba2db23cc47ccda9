#include "optikv/net_tcp.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

#include "optikv/errors.hpp"

namespace optikv {

namespace {

std::pair<std::string, int> split_addr(const std::string& addr) {
  auto pos = addr.rfind(':');
  if (pos == std::string::npos) throw ConfigError("address must be host:port: " + addr);
  return {addr.substr(0, pos), std::stoi(addr.substr(pos + 1))};
}

}  // namespace

struct TcpHost::Conn {
  int fd = -1;
  std::string name;  // "conn:<n>"
  std::thread reader;
  std::thread writer;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> outq;  // framed bytes
  bool closed = false;
  static constexpr size_t kQueueCap = 1024;

  void close_fd() {
    std::lock_guard<std::mutex> lk(mu);
    if (fd >= 0) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
      fd = -1;
    }
    closed = true;
    cv.notify_all();
  }

  void drain() {
    std::unique_lock<std::mutex> lk(mu);
    for (;;) {
      cv.wait(lk, [&] { return closed || !outq.empty(); });
      if (closed && outq.empty()) return;
      std::string frame = std::move(outq.front());
      outq.pop_front();
      int fd2 = fd;
      lk.unlock();
      cv.notify_all();
      if (fd2 >= 0) {
        size_t off = 0;
        while (off < frame.size()) {
          ssize_t n = ::send(fd2, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
          if (n <= 0) break;
          off += static_cast<size_t>(n);
        }
      }
      lk.lock();
    }
  }
};

TcpHost::TcpHost(std::string id, const std::string& listen_addr) : id_(std::move(id)) {
  if (listen_addr.empty()) return;
  auto [host, port] = split_addr(listen_addr);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw ConfigError("socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
    throw ConfigError("bad listen host: " + host);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0)
    throw ConfigError("bind failed for " + listen_addr);
  if (::listen(listen_fd_, 64) != 0) throw ConfigError("listen failed");
  sockaddr_in actual{};
  socklen_t len = sizeof(actual);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&actual), &len);
  bound_ = host + ":" + std::to_string(ntohs(actual.sin_port));
}

TcpHost::~TcpHost() { stop(); }

std::string TcpHost::bound_address() const { return bound_; }

void TcpHost::set_handler(Handler h) {
  std::lock_guard<std::mutex> lk(mu_);
  handler_ = std::move(h);
}

Millis TcpHost::now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
}

void TcpHost::start() {
  running_ = true;
  executor_ = std::thread([this] { executor_loop(); });
  if (listen_fd_ >= 0) acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpHost::stop() {
  if (!running_.exchange(false)) return;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  {
    std::lock_guard<std::mutex> lk(conns_mu_);
    for (auto& c : conns_) c->close_fd();
  }
  cv_.notify_all();
  if (acceptor_.joinable()) acceptor_.join();
  if (executor_.joinable()) executor_.join();
  std::vector<std::shared_ptr<Conn>> conns;
  {
    std::lock_guard<std::mutex> lk(conns_mu_);
    conns.swap(conns_);
    by_name_.clear();
  }
  for (auto& c : conns) {
    if (c->reader.joinable()) c->reader.join();
    if (c->writer.joinable()) c->writer.join();
  }
}

std::uint64_t TcpHost::set_timer(Millis delay, std::function<void()> fn) {
  std::lock_guard<std::mutex> lk(mu_);
  std::uint64_t id = next_timer_++;
  timers_.push(TimerEntry{now_ms() + delay, id, std::move(fn)});
  cv_.notify_all();
  return id;
}

void TcpHost::cancel_timer(std::uint64_t id) {
  std::lock_guard<std::mutex> lk(mu_);
  cancelled_.insert(id);
}

void TcpHost::executor_loop() {
  std::unique_lock<std::mutex> lk(mu_);
  while (running_) {
    Millis now = now_ms();
    // fire due timers
    while (!timers_.empty() && timers_.top().at <= now) {
      TimerEntry e = timers_.top();
      timers_.pop();
      if (cancelled_.erase(e.id)) continue;
      lk.unlock();
      e.fn();
      lk.lock();
      now = now_ms();
    }
    if (!inbox_.empty()) {
      auto [from, m] = std::move(inbox_.front());
      inbox_.pop_front();
      Handler h = handler_;
      lk.unlock();
      if (h) h(from, m);
      lk.lock();
      continue;
    }
    if (timers_.empty()) {
      cv_.wait_for(lk, std::chrono::milliseconds(50));
    } else {
      Millis wait = std::max<Millis>(1, timers_.top().at - now_ms());
      cv_.wait_for(lk, std::chrono::milliseconds(wait));
    }
  }
}

void TcpHost::accept_loop() {
  while (running_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) break;
    auto c = std::make_shared<Conn>();
    c->fd = fd;
    {
      std::lock_guard<std::mutex> lk(conns_mu_);
      c->name = "conn:" + std::to_string(next_conn_++);
      conns_.push_back(c);
    }
    c->reader = std::thread([this, c] { reader_loop(c); });
    c->writer = std::thread([c] { c->drain(); });
  }
}

void TcpHost::reader_loop(std::shared_ptr<Conn> c) {
  FrameReader fr;
  char buf[16384];
  for (;;) {
    ssize_t n = ::recv(c->fd, buf, sizeof(buf), 0);
    if (n <= 0) break;
    try {
      fr.feed(buf, static_cast<size_t>(n));
      while (auto m = fr.next()) {
        std::lock_guard<std::mutex> lk(mu_);
        inbox_.emplace_back(c->name, std::move(*m));
        cv_.notify_all();
      }
    } catch (const std::exception&) {
      break;  // corrupt stream: drop the connection
    }
  }
  c->close_fd();
}

std::shared_ptr<TcpHost::Conn> TcpHost::outbound(const std::string& addr) {
  {
    std::lock_guard<std::mutex> lk(conns_mu_);
    auto it = by_name_.find(addr);
    if (it != by_name_.end() && !it->second->closed) return it->second;
  }
  auto [host, port] = split_addr(addr);
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return nullptr;
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1 ||
      ::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
    ::close(fd);
    return nullptr;
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  auto c = std::make_shared<Conn>();
  c->fd = fd;
  {
    std::lock_guard<std::mutex> lk(conns_mu_);
    c->name = "conn:" + std::to_string(next_conn_++);
    conns_.push_back(c);
    by_name_[addr] = c;
  }
  c->reader = std::thread([this, c] { reader_loop(c); });
  c->writer = std::thread([c] { c->drain(); });
  return c;
}

void TcpHost::enqueue_frame(const std::shared_ptr<Conn>& c, std::string frame) {
  std::unique_lock<std::mutex> lk(c->mu);
  // bounded queue: block the producer rather than drop (candidate traffic
  // must stay complete)
  c->cv.wait(lk, [&] { return c->closed || c->outq.size() < Conn::kQueueCap; });
  if (c->closed) return;
  c->outq.push_back(std::move(frame));
  c->cv.notify_all();
}

void TcpHost::send(const std::string& to, Message m) {
  std::string frame = encode_frame(m);
  if (to.rfind("conn:", 0) == 0) {
    std::shared_ptr<Conn> c;
    {
      std::lock_guard<std::mutex> lk(conns_mu_);
      for (auto& cc : conns_)
        if (cc->name == to) c = cc;
    }
    if (c && !c->closed) enqueue_frame(c, std::move(frame));
    return;
  }
  auto c = outbound(to);
  if (c) enqueue_frame(c, std::move(frame));
}

}  // namespace optikv
