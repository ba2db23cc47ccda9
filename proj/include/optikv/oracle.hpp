#pragma once

#include <map>
#include <string>
#include <vector>

#include "optikv/monitor.hpp"

namespace optikv {

/// Candidate streams as recorded on the wire, one per (predicate, server),
/// in sequence order. Test instrument for monitor correctness.
struct CandidateLog {
  Millis epsilon = kEpsilonInfinity;
  std::map<std::pair<int, int>, std::vector<Candidate>> streams;

  void add(const Candidate& c) { streams[{c.predicate_id, c.server_id}].push_back(c); }
  size_t total() const;

  // one CANDIDATE wire record per line (the exact on-wire JSON)
  void save(const std::string& path) const;
  static CandidateLog load(const std::string& path);
};

/// Exhaustive possibility detection: for each clause, every combination of
/// one candidate per participating server is tested for pairwise concurrency
/// (the monitor's own interval relation) and clause truth. Cuts come back in
/// lexicographic stream-index order, participants ascending by server id.
/// Refuses logs whose per-clause combination count exceeds 10^6.
std::vector<Violation> enumerate_violations(const CandidateLog& log,
                                            const PredicateSpec& spec,
                                            const std::map<std::string, int>& owners,
                                            int predicate_id, Millis eps);

/// Feeds a recorded log through the real monitor deterministically (no
/// timers, round-robin across server streams).
std::vector<Violation> replay(const CandidateLog& log, const PredicateSpec& spec,
                              const std::map<std::string, int>& owners,
                              int predicate_id, Millis eps);

}  // namespace optikv
