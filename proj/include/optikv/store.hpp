#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optikv/config.hpp"
#include "optikv/detector.hpp"
#include "optikv/env.hpp"
#include "optikv/version.hpp"

namespace optikv {

/// One storage server: a versioned key table, quorum request handlers, the
/// detector hook on the PUT path, and snapshot/restore for the rollback
/// coordinator. PUTs are the only state-changing operations and the only
/// clock events (plus heartbeat ticks when a detector is installed).
class StoreServer {
 public:
  StoreServer(NodeEnv* env, int id, StoreMetadata meta, Millis epsilon);

  // Wires up the local detector for every clause owned by this server and
  // starts the heartbeat.
  void install_detector(const std::vector<PredicateConfig>& predicates,
                        const std::map<std::string, int>& variable_owners,
                        Millis heartbeat_ms, Millis detector_cost_ms = 0);

  void on_message(const std::string& from, const Message& m);

  // direct handler APIs (used by unit tests; the message path calls these)
  struct PutOutcome {
    std::string status;  // status::kOk / kRetryAfterRestore / kError
    std::string error;
    Hvc hvc_after;
  };
  PutOutcome handle_put(const std::string& key, const std::string& value,
                        const VersionVector& version,
                        const std::vector<Millis>* ctx_entries,
                        std::uint64_t req_epoch);
  std::vector<Sibling> handle_get(const std::string& key) const;
  const StoreMetadata& get_metadata() const { return meta_; }

  std::string snapshot_state() const;
  void restore_state(const std::string& image);
  void reset_to_empty();

  void pause() { paused_ = true; }
  void resume(std::uint64_t new_epoch);
  bool paused() const { return paused_; }
  std::uint64_t epoch() const { return epoch_; }
  const Hvc& clock() const { return clock_; }

  std::uint64_t detector_faults() const { return detector_faults_; }

  // test/ground-truth instrumentation: observes every applied write with the
  // post-reconciliation resolved value
  using ApplyObserver =
      std::function<void(const std::string&, const std::string&, Millis)>;
  void set_apply_observer(ApplyObserver f) { apply_observer_ = std::move(f); }

 private:
  void heartbeat();
  void emit_candidates(std::vector<Candidate> cands);
  Millis monotonic_now() const;

  NodeEnv* env_;
  int id_;
  StoreMetadata meta_;
  Hvc clock_;
  std::uint64_t epoch_ = 0;
  bool paused_ = false;
  std::map<std::string, VersionedValue> table_;

  std::optional<LocalDetector> detector_;
  std::map<int, std::string> monitor_of_predicate_;
  Millis heartbeat_ms_ = 0;
  Millis detector_cost_ms_ = 0;
  std::uint64_t detector_faults_ = 0;
  ApplyObserver apply_observer_;
};

}  // namespace optikv
