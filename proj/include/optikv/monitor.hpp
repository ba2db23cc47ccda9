#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optikv/config.hpp"
#include "optikv/detector.hpp"
#include "optikv/env.hpp"
#include "optikv/predicate.hpp"

namespace optikv {

enum class IntervalRelation { HappenedBefore, Concurrent };

/// Causality between two candidates' HVC intervals from distinct servers,
/// under clock synchronization bound eps:
///  - overlapping intervals are concurrent;
///  - an interval strictly before another (vector order on endpoints) is
///    HappenedBefore only when the physical gap clears eps
///    (end1[S1] <= start2[S2] - eps); otherwise the ordering is uncertain
///    and the pair is treated as concurrent so no possible violation is
///    missed. eps = infinity therefore never orders a pair.
/// The test is symmetric in its arguments.
IntervalRelation interval_relation(const Candidate& c1, const Candidate& c2,
                                   Millis eps);
// directed form: does a's interval happen before b's?
bool happened_before(const Candidate& a, const Candidate& b, Millis eps);

struct Violation {
  int predicate_id = 0;
  int clause_id = 0;
  std::vector<Candidate> cut;  // one per participating server, ascending id
  Millis t_violate = 0;
  Millis detected_at = 0;
  Millis latency_ms = 0;  // detected_at minus the latest cut-interval start
  std::uint64_t epoch = 0;

  nlohmann::json to_json() const;
};

// Safe (early) estimate of the violation's physical start: the earliest
// interval start among the cut, minus eps, clamped at zero.
Millis estimate_t_violate(const std::vector<Candidate>& cut, Millis eps);

/// Online detector for one clause of one predicate.
///
/// Feeding order is per-server FIFO (the wire contract); across servers any
/// arrival order yields the same reported set: every consumed candidate is
/// joined against the retained histories of the other participants, and each
/// pairwise-concurrent, clause-true combination is reported exactly once,
/// when its last member is consumed. The lattice-theoretic forbidden-state
/// rule survives as the pruning condition: a candidate that happened-before
/// the latest consumed candidate of every other participant can never join
/// a future cut and is dropped.
class ClauseMonitor {
 public:
  ClauseMonitor(int predicate_id, Clause clause, DetectionClass cls,
                const std::map<std::string, int>& owners, Millis eps);

  // returns the cuts completed by this candidate, lexicographic by stream
  // index (participants in ascending server order)
  std::vector<std::vector<Candidate>> consume(const Candidate& c);

  const std::vector<int>& participants() const { return participants_; }
  bool single_server() const { return participants_.size() == 1; }
  int clause_id() const { return clause_.id; }
  void clear();  // rollback: the observed execution was erased

  size_t retained() const;

 private:
  struct Stored {
    Candidate c;
    std::uint64_t index;  // position in its stream, 0-based
  };

  bool locally_true(const Candidate& c) const;
  void prune();

  int predicate_id_;
  Clause clause_;
  DetectionClass cls_;
  Millis eps_;
  std::vector<int> participants_;
  std::map<int, std::vector<Term>> local_terms_;
  std::map<int, std::vector<Stored>> history_;      // locally-true, not pruned
  std::map<int, std::uint64_t> consumed_count_;     // stream positions
  std::map<int, std::optional<Candidate>> last_;    // latest consumed per server
};

/// Per-server candidate streams, in sequence order.
using CandidateStreams = std::map<int, std::vector<Candidate>>;

// Detection over recorded streams for a single linear (conjunctive) clause:
// every pairwise-concurrent assignment of one candidate per participating
// server is a violation (the detector only ships candidates while the local
// sub-conjunction holds). Returns the full violation summary for the clause;
// an exhausted stream simply ends the search.
std::vector<Violation> run_linear(int predicate_id, const Clause& clause,
                                  const std::map<std::string, int>& owners,
                                  const CandidateStreams& streams, Millis eps);

// Semilinear detection over recorded streams: the DNF is decomposed per
// clause and a cut must also evaluate the clause true (candidates arrive on
// every relevant PUT, truth not pre-filtered).
std::vector<Violation> run_semilinear(int predicate_id, const PredicateSpec& spec,
                                      const std::map<std::string, int>& owners,
                                      const CandidateStreams& streams, Millis eps);

/// One monitor process: buffers per-server candidate streams for one
/// predicate, runs the clause detectors, reports violations to the
/// coordinator and a callback, and keeps a violations.csv-ready record.
class Monitor {
 public:
  Monitor(NodeEnv* env, const PredicateConfig& pc,
          const std::map<std::string, int>& owners, Millis eps,
          std::string coordinator = "");

  void on_message(const std::string& from, const Message& m);
  // direct feed, shared by the wire path and deterministic replay
  void consume(const Candidate& c, Millis now, bool live = true);

  const std::vector<Violation>& violations() const { return violations_; }
  void set_on_violation(std::function<void(const Violation&)> cb) {
    on_violation_ = std::move(cb);
  }
  // candidate capture for --record and offline replay
  void set_on_candidate(std::function<void(const Candidate&)> cb) {
    on_candidate_ = std::move(cb);
  }
  std::uint64_t epoch() const { return epoch_; }

  static std::string csv_header();
  static std::string csv_row(const Violation& v);

 private:
  NodeEnv* env_;
  int predicate_id_;
  Millis eps_;
  std::string coordinator_;
  std::uint64_t epoch_ = 0;
  std::vector<ClauseMonitor> clauses_;
  std::vector<Violation> violations_;
  std::function<void(const Violation&)> on_violation_;
  std::function<void(const Candidate&)> on_candidate_;
  std::map<std::pair<int, int>, std::uint64_t> last_seq_;  // FIFO audit
};

}  // namespace optikv
