#include "optikv/rollback.hpp"

#include <algorithm>

#include "optikv/errors.hpp"

namespace optikv {

RollbackPolicy RollbackPolicy::parse(const std::string& text) {
  RollbackPolicy p;
  if (text == "restart") {
    p.kind = Kind::Restart;
    return p;
  }
  const std::string prefix = "periodic:";
  if (text.rfind(prefix, 0) == 0) {
    p.kind = Kind::Periodic;
    try {
      p.interval_ms = std::stoll(text.substr(prefix.size()));
    } catch (const std::exception&) {
      throw ConfigError("bad periodic interval in policy: " + text);
    }
    if (p.interval_ms <= 0) throw ConfigError("checkpoint interval must be positive");
    return p;
  }
  throw ConfigError("unknown rollback policy: " + text);
}

double RollbackPolicy::parse_threshold(const std::string& text) {
  auto pos = text.find("/min");
  if (pos == std::string::npos) throw ConfigError("threshold must be '<n>/min'");
  try {
    return std::stod(text.substr(0, pos));
  } catch (const std::exception&) {
    throw ConfigError("bad threshold: " + text);
  }
}

ConsistencyAdvice advise_consistency(const std::vector<Millis>& violation_times,
                                     Millis now, Millis window_ms,
                                     double threshold_per_min) {
  int in_window = 0;
  for (Millis t : violation_times)
    if (t > now - window_ms && t <= now) ++in_window;
  double per_min =
      static_cast<double>(in_window) * 60000.0 / static_cast<double>(window_ms);
  return per_min > threshold_per_min ? ConsistencyAdvice::UpgradeToSequential
                                     : ConsistencyAdvice::Stay;
}

Coordinator::Coordinator(NodeEnv* env, Peers peers, RollbackPolicy policy)
    : env_(env), peers_(std::move(peers)), policy_(policy) {}

void Coordinator::start() {
  if (policy_.kind == RollbackPolicy::Kind::Periodic) {
    env_->set_timer(policy_.interval_ms, [this] {
      if (state_ == State::Idle && !halted_) take_checkpoint();
      if (!halted_) start();
    });
  }
}

void Coordinator::broadcast(const std::vector<std::string>& to, const Message& m) {
  for (const auto& addr : to) env_->send(addr, m);
}

const std::vector<std::string>* Coordinator::expected_peers() const {
  static const std::vector<std::string> empty;
  switch (state_) {
    case State::CkptPause:
    case State::RbPause:
      return nullptr;  // servers + clients
    case State::CkptSnapshot:
    case State::RbRestore:
    case State::RbResumeServers:
    case State::CkptResume:
      return &peers_.servers;
    case State::RbResumeClients:
    case State::CkptResumeClients:
      return &peers_.clients;
    case State::Idle:
      return &empty;
  }
  return &empty;
}

bool Coordinator::expects_ack_from(const std::string& from) const {
  const auto* set = expected_peers();
  if (set == nullptr) {
    return std::find(peers_.servers.begin(), peers_.servers.end(), from) !=
               peers_.servers.end() ||
           std::find(peers_.clients.begin(), peers_.clients.end(), from) !=
               peers_.clients.end();
  }
  return std::find(set->begin(), set->end(), from) != set->end();
}

int Coordinator::expected_acks() const {
  const auto* set = expected_peers();
  if (set == nullptr)
    return static_cast<int>(peers_.servers.size() + peers_.clients.size());
  return static_cast<int>(set->size());
}

void Coordinator::arm_abort_timer() {
  std::uint64_t gen = ++phase_gen_;
  env_->set_timer(phase_timeout_ms_, [this, gen] {
    if (gen != phase_gen_ || halted_ || state_ == State::Idle) return;
    if (state_ == State::CkptPause || state_ == State::CkptSnapshot) {
      // a server is unreachable: abort, keep the previous checkpoint
      ++checkpoints_aborted_;
      state_ = State::CkptResume;
      acks_.clear();
      ack_count_ = 0;
      Message res{msg::kResume, 0, {{"epoch", epoch_}}};
      broadcast(peers_.servers, res);
      arm_abort_timer();
    } else if (state_ == State::CkptResume || state_ == State::CkptResumeClients) {
      // go idle even if an unreachable peer never acks the resume
      state_ = State::Idle;
      if (!window_.empty()) begin_rollback();
    } else {
      // a rollback phase stalled: a peer is unreachable mid-restore, and
      // resuming an inconsistent system is never an option
      halted_ = true;
    }
  });
}

void Coordinator::take_checkpoint() {
  if (state_ != State::Idle || halted_) return;
  state_ = State::CkptPause;
  acks_.clear();
  ack_count_ = 0;
  pending_ckpt_ = Checkpoint{};
  pending_ckpt_.id = next_ckpt_id_;
  Message m{msg::kPause, pending_ckpt_.id, {{"reason", "checkpoint"}}};
  broadcast(peers_.servers, m);
  broadcast(peers_.clients, m);
  arm_abort_timer();
}

void Coordinator::on_violation(const Violation& v) {
  if (halted_) return;
  if (v.epoch < epoch_) return;  // stale report from an erased execution
  violation_times_.push_back(v.detected_at);
  std::uint64_t id = next_violation_id_++;

  if (state_ != State::Idle) {
    // coalesce: either into the open rollback window (one restore serves
    // all) or queued behind the checkpoint in progress
    window_.emplace_back(id, v);
    window_t_violate_ = std::min(window_t_violate_, v.t_violate);
    return;
  }
  window_.clear();
  window_.emplace_back(id, v);
  window_t_violate_ = v.t_violate;
  begin_rollback();
}

void Coordinator::begin_rollback() {
  state_ = State::RbPause;
  acks_.clear();
  ack_count_ = 0;
  Message m{msg::kPause, window_.front().first, {{"reason", "violation"}}};
  broadcast(peers_.servers, m);
  broadcast(peers_.clients, m);
  arm_abort_timer();
}

void Coordinator::on_message(const std::string& from, const Message& m) {
  if (m.type == msg::kViolation) {
    Violation v;
    v.predicate_id = m.payload.value("predicate-id", 0);
    v.clause_id = m.payload.value("clause-id", 0);
    v.t_violate = m.payload.value("t-violate", Millis{0});
    v.detected_at = m.payload.value("detected-at", Millis{0});
    v.latency_ms = m.payload.value("latency-ms", Millis{0});
    v.epoch = m.payload.value("epoch", 0ull);
    on_violation(v);
    return;
  }
  if (m.type == msg::kPauseAck || m.type == msg::kSnapshotResp ||
      m.type == msg::kRestoreAck || m.type == msg::kResumeAck) {
    advance(from, m);
  }
}

void Coordinator::advance(const std::string& from, const Message& m) {
  if (state_ == State::Idle || halted_) return;
  if (!expects_ack_from(from)) return;
  if (acks_[from]) return;  // duplicate
  acks_[from] = true;
  ++ack_count_;

  if (m.type == msg::kSnapshotResp && state_ == State::CkptSnapshot) {
    pending_ckpt_.images[m.payload.at("server-id").get<int>()] =
        base64_decode(m.payload.at("image").get<std::string>());
  }
  if (m.type == msg::kPauseAck && m.payload.contains("progress")) {
    pending_ckpt_.progress[from] = m.payload.at("progress").get<std::int64_t>();
  }
  if (m.type == msg::kRestoreAck &&
      m.payload.value("status", std::string(status::kOk)) != status::kOk) {
    // never resume into a partially restored system
    halted_ = true;
    return;
  }

  if (ack_count_ < expected_acks()) return;
  acks_.clear();
  ack_count_ = 0;

  switch (state_) {
    case State::CkptPause: {
      state_ = State::CkptSnapshot;
      Message snap{msg::kSnapshot, pending_ckpt_.id, {}};
      broadcast(peers_.servers, snap);
      break;
    }
    case State::CkptSnapshot: {
      pending_ckpt_.taken_at = env_->now_ms();
      checkpoints_.push_back(pending_ckpt_);
      if (checkpoints_.size() > 16) checkpoints_.pop_front();
      ++next_ckpt_id_;
      state_ = State::CkptResume;
      // same epoch: nothing was erased, so monitors keep their streams
      Message res{msg::kResume, pending_ckpt_.id, {{"epoch", epoch_}}};
      broadcast(peers_.servers, res);
      break;
    }
    case State::CkptResume: {
      state_ = State::CkptResumeClients;
      Message res{msg::kResume, 0, {{"epoch", epoch_}}};
      res.payload["progress"] = nlohmann::json();  // null: keep going
      broadcast(peers_.clients, res);
      break;
    }
    case State::CkptResumeClients: {
      state_ = State::Idle;
      // violations that arrived during the checkpoint still need a restore
      if (!window_.empty()) begin_rollback();
      break;
    }
    case State::RbPause: {
      // restore target: the most recent checkpoint taken no later than the
      // violation onset; none -> restart from scratch
      restore_target_.reset();
      if (policy_.kind == RollbackPolicy::Kind::Periodic) {
        for (auto it = checkpoints_.rbegin(); it != checkpoints_.rend(); ++it) {
          if (it->taken_at <= window_t_violate_) {
            restore_target_ = *it;
            break;
          }
        }
      }
      state_ = State::RbRestore;
      for (size_t sid = 0; sid < peers_.servers.size(); ++sid) {
        Message r{msg::kRestore, window_.front().first, {}};
        if (restore_target_.has_value())
          r.payload["image"] =
              base64_encode(restore_target_->images.at(static_cast<int>(sid)));
        env_->send(peers_.servers[sid], r);
      }
      break;
    }
    case State::RbRestore: {
      // every server acked its restore and nothing has resumed yet: the
      // integrity hook sees exactly the restored images
      if (on_rollback_complete_)
        on_rollback_complete_(restore_target_.has_value() ? &*restore_target_
                                                          : nullptr);
      state_ = State::RbResumeServers;
      ++epoch_;
      // checkpoints from the erased execution are no longer restorable
      checkpoints_.clear();
      Message res{msg::kResume, window_.front().first, {{"epoch", epoch_}}};
      broadcast(peers_.servers, res);
      broadcast(peers_.monitors, res);
      break;
    }
    case State::RbResumeServers: {
      state_ = State::RbResumeClients;
      Message res{msg::kResume, 0, {{"epoch", epoch_}}};
      nlohmann::json prog = nlohmann::json::object();
      if (restore_target_.has_value())
        for (const auto& [cid, it] : restore_target_->progress) prog[cid] = it;
      res.payload["progress"] = prog;  // absent client keys mean iteration 0
      broadcast(peers_.clients, res);
      break;
    }
    case State::RbResumeClients: {
      finish_rollback();
      break;
    }
    case State::Idle:
      break;
  }
  if (state_ != State::Idle) arm_abort_timer();
}

void Coordinator::finish_rollback() {
  // one restore serves every violation coalesced into the window
  for (const auto& [id, v] : window_) {
    RollbackReport r;
    r.violation_id = id;
    r.policy = policy_.kind == RollbackPolicy::Kind::Periodic ? "periodic" : "restart";
    r.checkpoint_id = restore_target_.has_value()
                          ? static_cast<std::int64_t>(restore_target_->id)
                          : -1;
    Millis base = restore_target_.has_value() ? restore_target_->taken_at : 0;
    r.wasted_ms = std::max<Millis>(0, v.detected_at - base);
    reports_.push_back(r);
  }
  window_.clear();
  state_ = State::Idle;
  ++phase_gen_;  // no abort timer may fire for the finished window
}

ConsistencyAdvice Coordinator::advice() const {
  return advise_consistency(violation_times_, env_->now_ms(), 60000,
                            policy_.threshold_per_min);
}

std::string Coordinator::csv_header() {
  return "violation_id,policy,checkpoint_id,wasted_ms";
}

std::string Coordinator::csv_row(const RollbackReport& r) {
  return std::to_string(r.violation_id) + "," + r.policy + "," +
         std::to_string(r.checkpoint_id) + "," + std::to_string(r.wasted_ms);
}

}  // namespace optikv
