#include "optikv/sim.hpp"

#include "optikv/errors.hpp"

namespace optikv {

void Simulation::schedule(Millis delay, const std::string& lane,
                          std::function<void()> fn) {
  if (delay < 0) throw ConfigError("negative delay");
  Key k{now_ + delay, lane, lane_seq_[lane]++};
  queue_.emplace(std::move(k), Entry{std::move(fn), 0});
}

Simulation::TimerId Simulation::schedule_cancellable(Millis delay,
                                                     const std::string& lane,
                                                     std::function<void()> fn) {
  if (delay < 0) throw ConfigError("negative delay");
  TimerId id = next_timer_id_++;
  Key k{now_ + delay, lane, lane_seq_[lane]++};
  queue_.emplace(std::move(k), Entry{std::move(fn), id});
  return id;
}

void Simulation::cancel(TimerId id) { cancelled_.insert(id); }

bool Simulation::step_bounded(const Millis* bound) {
  while (!queue_.empty()) {
    auto it = queue_.begin();
    if (bound && it->first.at > *bound) return false;
    Key k = it->first;
    Entry e = std::move(it->second);
    queue_.erase(it);
    if (e.id != 0 && cancelled_.count(e.id)) {
      cancelled_.erase(e.id);
      continue;
    }
    now_ = k.at;
    ++dispatched_;
    e.fn();
    return true;
  }
  return false;
}

bool Simulation::step() { return step_bounded(nullptr); }

void Simulation::run_until_idle() {
  while (step()) {
  }
}

void Simulation::run_until(Millis t) {
  while (step_bounded(&t)) {
  }
  if (now_ < t) now_ = t;
}

void SimNet::send(const std::string& from, const std::string& to, Message m) {
  auto it = nodes_.find(to);
  if (it == nodes_.end()) return;  // unknown destination: dropped
  if (blackholed_.count(to) || blackholed_.count(from)) return;

  auto link = std::make_pair(from, to);
  auto d = drops_.find(link);
  if (d != drops_.end() && d->second > 0) {
    --d->second;
    return;
  }

  std::string lane = from + ">" + to;
  Millis delay;
  bool off_fifo = false;
  std::optional<Millis> scripted;
  if (delay_rule_) scripted = delay_rule_(from, to, m);
  auto fx = fixed_delay_.find(link);
  if (scripted.has_value()) {
    delay = *scripted;
    off_fifo = true;  // scripted messages travel on their own side lane
    lane += ":slow";
  } else if (fx != fixed_delay_.end()) {
    delay = fx->second;
  } else {
    auto& rng = lane_rngs_[lane];
    if (!rng) rng = std::make_unique<LaneRng>(seed_, lane);
    delay = rng->uniform(min_delay_, max_delay_);
  }

  // FIFO per link: never deliver before an earlier send on the same lane
  Millis at = sim_->now() + delay;
  if (!off_fifo) {
    auto& floor = fifo_floor_[lane];
    if (at < floor) at = floor;
    floor = at;
  }

  if (log_enabled_) log_.push_back({at, from, to, m.type, m.request_id});

  SimNode* dst = it->second;
  sim_->schedule(at - sim_->now(), lane,
                 [dst, from, m = std::move(m)] { dst->on_message(from, m); });
}

void SimNet::set_link_delay(const std::string& from, const std::string& to,
                            Millis delay) {
  fixed_delay_[{from, to}] = delay;
}

void SimNet::clear_link_delay(const std::string& from, const std::string& to) {
  fixed_delay_.erase({from, to});
}

void SimNet::drop_next(const std::string& from, const std::string& to, int count) {
  drops_[{from, to}] += count;
}

}  // namespace optikv
