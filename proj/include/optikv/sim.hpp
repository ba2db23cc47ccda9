#pragma once

#include <coroutine>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "optikv/env.hpp"
#include "optikv/hash.hpp"
#include "optikv/time.hpp"
#include "optikv/wire.hpp"

namespace optikv {

/// Deterministic discrete-event loop over virtual milliseconds.
///
/// Events are ordered by (time, lane, per-lane sequence). A lane is one
/// message channel or one per-node timer class. Same-lane events are FIFO;
/// cross-lane ties break on the lane name. Because lanes carry independent
/// sequence counters and rng streams, adding traffic on one lane (e.g.
/// detector->monitor candidates) cannot reorder events on any other lane —
/// which is what makes differential runs bit-identical.
class Simulation {
 public:
  using TimerId = std::uint64_t;

  Millis now() const { return now_; }

  void schedule(Millis delay, const std::string& lane, std::function<void()> fn);
  // schedule_at with cancellation, for request timeouts
  TimerId schedule_cancellable(Millis delay, const std::string& lane,
                               std::function<void()> fn);
  void cancel(TimerId id);

  bool step();
  void run_until_idle();
  void run_until(Millis t);  // runs events with time <= t, then sets now = t

  std::uint64_t events_dispatched() const { return dispatched_; }

 private:
  bool step_bounded(const Millis* bound);

  struct Key {
    Millis at;
    std::string lane;
    std::uint64_t seq;
    bool operator<(const Key& o) const {
      if (at != o.at) return at < o.at;
      if (lane != o.lane) return lane < o.lane;
      return seq < o.seq;
    }
  };
  struct Entry {
    std::function<void()> fn;
    TimerId id = 0;
  };
  Millis now_ = 0;
  std::map<Key, Entry> queue_;
  std::map<std::string, std::uint64_t> lane_seq_;
  std::set<TimerId> cancelled_;
  TimerId next_timer_id_ = 1;
  std::uint64_t dispatched_ = 0;
};

class SimClock final : public ClockSource {
 public:
  explicit SimClock(Simulation* sim) : sim_(sim) {}
  Millis now_ms() override { return sim_->now(); }

 private:
  Simulation* sim_;
};

/// Deterministic per-lane random stream (splitmix64 seeded from the global
/// seed and the lane name).
class LaneRng {
 public:
  LaneRng(std::uint64_t seed, const std::string& lane)
      : state_(fnv1a64(lane, seed * 0x9e3779b97f4a7c15ull + 1)) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  Millis uniform(Millis lo, Millis hi) {  // inclusive bounds
    if (hi <= lo) return lo;
    return lo + static_cast<Millis>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

class SimNode {
 public:
  virtual ~SimNode() = default;
  virtual void on_message(const std::string& from, const Message& m) = 0;
};

struct MessageRecord {
  Millis at;
  std::string from, to, type;
  std::uint64_t request_id;
};

/// Message fabric between SimNodes: per-link random delays (FIFO preserved),
/// plus the fault controls the workloads script against it.
class SimNet {
 public:
  SimNet(Simulation* sim, std::uint64_t seed, Millis min_delay = 2, Millis max_delay = 8)
      : sim_(sim), seed_(seed), min_delay_(min_delay), max_delay_(max_delay) {}

  void add_node(const std::string& id, SimNode* node) { nodes_[id] = node; }
  bool has_node(const std::string& id) const { return nodes_.count(id) > 0; }

  void send(const std::string& from, const std::string& to, Message m);

  // fault injection
  void set_link_delay(const std::string& from, const std::string& to, Millis delay);
  void clear_link_delay(const std::string& from, const std::string& to);
  void drop_next(const std::string& from, const std::string& to, int count);
  void blackhole(const std::string& node_id) { blackholed_.insert(node_id); }

  // scripted per-message delays (adversarial replication schedules); a
  // delayed message travels on its own side lane, off the link's FIFO
  using DelayRule =
      std::function<std::optional<Millis>(const std::string&, const std::string&,
                                          const Message&)>;
  void set_delay_rule(DelayRule rule) { delay_rule_ = std::move(rule); }

  void enable_log(bool on) { log_enabled_ = on; }
  const std::vector<MessageRecord>& log() const { return log_; }

  Millis max_delay() const { return max_delay_; }
  Millis min_delay() const { return min_delay_; }

 private:
  Simulation* sim_;
  std::uint64_t seed_;
  Millis min_delay_, max_delay_;
  std::map<std::string, SimNode*> nodes_;
  std::map<std::string, std::unique_ptr<LaneRng>> lane_rngs_;
  std::map<std::string, Millis> fifo_floor_;  // per lane: earliest next delivery
  std::map<std::pair<std::string, std::string>, Millis> fixed_delay_;
  std::map<std::pair<std::string, std::string>, int> drops_;
  std::set<std::string> blackholed_;
  DelayRule delay_rule_;
  bool log_enabled_ = false;
  std::vector<MessageRecord> log_;
};

/// Fire-and-forget coroutine used for workload client loops; runs eagerly
/// until its first await and frees itself on completion.
struct Task {
  struct promise_type {
    Task get_return_object() { return {}; }
    std::suspend_never initial_suspend() noexcept { return {}; }
    std::suspend_never final_suspend() noexcept { return {}; }
    void return_void() {}
    void unhandled_exception() { std::terminate(); }
  };
};

/// Single-shot value a coroutine can await; completed from a callback.
template <typename T>
class Future {
 public:
  Future() : state_(std::make_shared<State>()) {}

  void set(T v) const {
    state_->value = std::move(v);
    if (state_->waiter) {
      auto h = state_->waiter;
      state_->waiter = nullptr;
      h.resume();
    }
  }

  std::function<void(T)> setter() const {
    auto st = state_;
    return [st](T v) {
      Future f;
      f.state_ = st;
      f.set(std::move(v));
    };
  }

  bool await_ready() const noexcept { return state_->value.has_value(); }
  void await_suspend(std::coroutine_handle<> h) const { state_->waiter = h; }
  T await_resume() const { return std::move(*state_->value); }

 private:
  struct State {
    std::optional<T> value;
    std::coroutine_handle<> waiter;
  };
  std::shared_ptr<State> state_;
};

/// NodeEnv over the simulator: sends go through SimNet, timers run on the
/// node's own lane.
class SimEnv final : public NodeEnv, public SimNode {
 public:
  SimEnv(Simulation* sim, SimNet* net, std::string id)
      : sim_(sim), net_(net), id_(std::move(id)) {
    net_->add_node(id_, this);
  }

  const std::string& id() const override { return id_; }
  void send(const std::string& to, Message m) override {
    net_->send(id_, to, std::move(m));
  }
  std::uint64_t set_timer(Millis delay, std::function<void()> fn) override {
    return sim_->schedule_cancellable(delay, id_ + ":timer", std::move(fn));
  }
  void cancel_timer(std::uint64_t id) override { sim_->cancel(id); }
  Millis now_ms() override { return sim_->now(); }

  using Handler = std::function<void(const std::string&, const Message&)>;
  void set_handler(Handler h) { handler_ = std::move(h); }
  void on_message(const std::string& from, const Message& m) override {
    if (handler_) handler_(from, m);
  }

  Simulation* sim() { return sim_; }

 private:
  Simulation* sim_;
  SimNet* net_;
  std::string id_;
  Handler handler_;
};

/// co_await sleep_in(sim, lane, ms)
struct SleepAwaiter {
  Simulation* sim;
  std::string lane;
  Millis delay;
  bool await_ready() const noexcept { return false; }
  void await_suspend(std::coroutine_handle<> h) const {
    sim->schedule(delay, lane, [h] { h.resume(); });
  }
  void await_resume() const noexcept {}
};

inline SleepAwaiter sleep_in(Simulation& sim, const std::string& lane, Millis delay) {
  return SleepAwaiter{&sim, lane, delay};
}

/// co_await sleep_on(env, ms) — transport-agnostic, runs on the node's timer
struct EnvSleepAwaiter {
  NodeEnv* env;
  Millis delay;
  bool await_ready() const noexcept { return false; }
  void await_suspend(std::coroutine_handle<> h) const {
    env->set_timer(delay, [h] { h.resume(); });
  }
  void await_resume() const noexcept {}
};

inline EnvSleepAwaiter sleep_on(NodeEnv& env, Millis delay) {
  return EnvSleepAwaiter{&env, delay};
}

}  // namespace optikv
