#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <queue>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "optikv/env.hpp"

namespace optikv {

/// One network endpoint hosting one protocol participant over TCP.
///
/// Frames are the wire protocol's length-prefixed JSON records. Incoming
/// frames are dispatched on a single executor thread together with timers,
/// so handlers and coroutine resumptions stay single-threaded per node, the
/// same discipline the simulator enforces. Replies travel back over the
/// connection the request arrived on (the handler sees from = "conn:<n>");
/// addresses of the form host:port open (and cache) outbound connections
/// with a bounded send queue per connection — a slow peer eventually blocks
/// the producer instead of dropping.
class TcpHost final : public NodeEnv {
 public:
  TcpHost(std::string id, const std::string& listen_addr);  // "" = no listener
  ~TcpHost() override;

  using Handler = std::function<void(const std::string&, const Message&)>;
  void set_handler(Handler h);
  void start();
  void stop();

  std::string bound_address() const;  // actual host:port after bind

  // NodeEnv
  const std::string& id() const override { return id_; }
  void send(const std::string& to, Message m) override;
  std::uint64_t set_timer(Millis delay, std::function<void()> fn) override;
  void cancel_timer(std::uint64_t id) override;
  Millis now_ms() override;

  // run fn on the executor thread (thread-safe); used by blocking clients
  void post(std::function<void()> fn) { (void)set_timer(0, std::move(fn)); }

 private:
  struct Conn;
  void executor_loop();
  void accept_loop();
  void reader_loop(std::shared_ptr<Conn> c);
  std::shared_ptr<Conn> outbound(const std::string& addr);
  void enqueue_frame(const std::shared_ptr<Conn>& c, std::string frame);

  std::string id_;
  int listen_fd_ = -1;
  std::string bound_;
  std::atomic<bool> running_{false};

  Handler handler_;
  std::mutex mu_;
  std::condition_variable cv_;
  struct TimerEntry {
    Millis at;
    std::uint64_t id;
    std::function<void()> fn;
    bool operator>(const TimerEntry& o) const { return at > o.at; }
  };
  std::priority_queue<TimerEntry, std::vector<TimerEntry>, std::greater<TimerEntry>>
      timers_;
  std::deque<std::pair<std::string, Message>> inbox_;
  std::set<std::uint64_t> cancelled_;
  std::uint64_t next_timer_ = 1;

  std::thread executor_;
  std::thread acceptor_;
  std::mutex conns_mu_;
  std::map<std::string, std::shared_ptr<Conn>> by_name_;  // outbound by addr
  std::vector<std::shared_ptr<Conn>> conns_;
  std::uint64_t next_conn_ = 1;
};

}  // namespace optikv
