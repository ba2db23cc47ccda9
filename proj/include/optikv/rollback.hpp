#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optikv/env.hpp"
#include "optikv/monitor.hpp"

namespace optikv {

struct RollbackPolicy {
  enum class Kind { Restart, Periodic };
  Kind kind = Kind::Restart;
  Millis interval_ms = 0;          // checkpoint period when periodic
  double threshold_per_min = 10;   // escalation advice threshold

  // "restart" or "periodic:<interval-ms>"
  static RollbackPolicy parse(const std::string& text);
  // "10/min"
  static double parse_threshold(const std::string& text);
};

struct Checkpoint {
  std::uint64_t id = 0;
  Millis taken_at = 0;
  std::map<int, std::string> images;                 // server -> state image
  std::map<std::string, std::int64_t> progress;      // client -> iteration
};

struct RollbackReport {
  std::uint64_t violation_id = 0;
  std::string policy;
  std::int64_t checkpoint_id = -1;  // -1 = restart from scratch
  Millis wasted_ms = 0;
};

enum class ConsistencyAdvice { Stay, UpgradeToSequential };

// Upgrade is advised iff the violation rate over the trailing window
// strictly exceeds the threshold.
ConsistencyAdvice advise_consistency(const std::vector<Millis>& violation_times,
                                     Millis now, Millis window_ms,
                                     double threshold_per_min);

/// The rollback coordinator: periodic stop-the-world checkpoints and
/// violation-triggered restores. PAUSE / RESTORE / RESUME each complete on
/// all acks before the next phase; servers are resumed into the new epoch
/// before any client is, so no successful client operation can span two
/// epochs. Violations arriving while a window is open are coalesced into it.
class Coordinator {
 public:
  struct Peers {
    std::vector<std::string> servers;   // addresses, index = server id
    std::vector<std::string> clients;
    std::vector<std::string> monitors;
  };

  Coordinator(NodeEnv* env, Peers peers, RollbackPolicy policy);

  void start();  // begins the checkpoint timer under the periodic policy
  void on_message(const std::string& from, const Message& m);

  void take_checkpoint();                 // manual trigger (also used by timer)
  void on_violation(const Violation& v);  // direct feed (tests)

  const std::vector<RollbackReport>& reports() const { return reports_; }
  const Checkpoint* last_checkpoint() const {
    return checkpoints_.empty() ? nullptr : &checkpoints_.back();
  }
  std::uint64_t epoch() const { return epoch_; }
  bool halted() const { return halted_; }
  bool idle() const { return state_ == State::Idle; }
  std::uint64_t checkpoints_aborted() const { return checkpoints_aborted_; }
  ConsistencyAdvice advice() const;
  const std::vector<Millis>& violation_times() const { return violation_times_; }
  void set_phase_timeout(Millis t) { phase_timeout_ms_ = t; }
  // fires when a restore window closes, before client traffic resumes; the
  // argument is the restored checkpoint (null for restart-from-scratch)
  void set_on_rollback_complete(std::function<void(const Checkpoint*)> cb) {
    on_rollback_complete_ = std::move(cb);
  }

  static std::string csv_header();
  static std::string csv_row(const RollbackReport& r);

 private:
  enum class State {
    Idle,
    CkptPause,
    CkptSnapshot,
    CkptResume,
    CkptResumeClients,
    RbPause,
    RbRestore,
    RbResumeServers,
    RbResumeClients
  };

  void broadcast(const std::vector<std::string>& to, const Message& m);
  void begin_rollback();
  void finish_rollback();
  void arm_abort_timer();
  const std::vector<std::string>* expected_peers() const;
  bool expects_ack_from(const std::string& from) const;
  int expected_acks() const;
  void advance(const std::string& from, const Message& m);

  NodeEnv* env_;
  Peers peers_;
  RollbackPolicy policy_;
  State state_ = State::Idle;
  std::uint64_t epoch_ = 0;
  std::uint64_t next_ckpt_id_ = 1;
  std::uint64_t next_violation_id_ = 1;
  bool halted_ = false;
  Millis phase_timeout_ms_ = 5000;
  std::uint64_t phase_gen_ = 0;
  std::uint64_t checkpoints_aborted_ = 0;

  std::deque<Checkpoint> checkpoints_;
  Checkpoint pending_ckpt_;
  std::map<std::string, bool> acks_;
  int ack_count_ = 0;

  // rollback window
  std::vector<std::pair<std::uint64_t, Violation>> window_;  // id, violation
  Millis window_t_violate_ = 0;
  std::optional<Checkpoint> restore_target_;

  std::vector<RollbackReport> reports_;
  std::vector<Millis> violation_times_;
  std::function<void(const Checkpoint*)> on_rollback_complete_;
};

}  // namespace optikv
