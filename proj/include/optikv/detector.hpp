#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "optikv/hvc.hpp"
#include "optikv/predicate.hpp"

namespace optikv {

/// Server-local evidence sent to a monitor: an HVC interval during which the
/// carried variable values were in effect, plus those values.
struct Candidate {
  int predicate_id = 0;
  int clause_id = 0;
  int server_id = 0;
  std::uint64_t seq = 0;  // per (server, predicate), gapless from 1
  std::uint64_t epoch = 0;
  Hvc start, end;
  std::map<std::string, std::string> state;

  nlohmann::json to_json() const;
  static Candidate from_json(const nlohmann::json& j);
};

/// Local predicate detector embedded in a server's PUT path. Tracks the
/// server-local sub-conjunction of each monitored clause and tiles the
/// timeline with candidates:
///
///  - every relevant PUT closes the current window [window-start,
///    hvc-before] carrying the pre-PUT values, then opens a new window at
///    hvc-after. Linear clauses only emit windows during which the local
///    sub-conjunction held; semilinear clauses emit unconditionally.
///  - heartbeat flushes split still-open windows so long-held states reach
///    the monitor within one heartbeat.
class LocalDetector {
 public:
  explicit LocalDetector(int server_id) : server_id_(server_id) {}

  void add_clause(int predicate_id, DetectionClass cls, const LocalClause& lc,
                  const Hvc& initial_clock);

  bool relevant(const std::string& key) const { return by_key_.count(key) > 0; }

  std::vector<Candidate> on_put(const std::string& key, const std::string& value,
                                const Hvc& hvc_before, const Hvc& hvc_after);

  std::vector<Candidate> flush(const Hvc& now);

  // rebuild caches after a state restore
  void reset(const std::map<std::string, std::string>& values, const Hvc& clock);

  void set_epoch(std::uint64_t e) { epoch_ = e; }

 private:
  struct ClauseCache {
    int predicate_id = 0;
    int clause_id = 0;
    DetectionClass cls = DetectionClass::Linear;
    std::vector<Term> terms;
    std::map<std::string, std::string> values;  // current local values
    bool truth = false;  // local sub-conjunction holds on values
    Hvc window_start;
  };

  bool eval_local(const ClauseCache& c) const;
  Candidate make_candidate(const ClauseCache& c, const Hvc& start, const Hvc& end);

  int server_id_;
  std::uint64_t epoch_ = 0;
  std::vector<ClauseCache> clauses_;
  std::map<std::string, std::vector<size_t>> by_key_;   // key -> clause indexes
  std::map<int, std::uint64_t> seq_;                    // predicate -> next-1
};

}  // namespace optikv
