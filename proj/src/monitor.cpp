#include "optikv/monitor.hpp"

#include <algorithm>

#include "optikv/errors.hpp"

namespace optikv {

bool happened_before(const Candidate& a, const Candidate& b, Millis eps) {
  if (a.server_id == b.server_id)
    throw ConfigError("interval relation is defined across distinct servers");
  if (!epsilon_finite(eps)) return false;  // uncertainty covers everything
  if (compare(a.end, b.start) != CausalOrder::Before) return false;
  return a.end.own_entry() <= b.start.entry(b.server_id) - eps;
}

IntervalRelation interval_relation(const Candidate& c1, const Candidate& c2,
                                   Millis eps) {
  if (happened_before(c1, c2, eps) || happened_before(c2, c1, eps))
    return IntervalRelation::HappenedBefore;
  return IntervalRelation::Concurrent;
}

Millis estimate_t_violate(const std::vector<Candidate>& cut, Millis eps) {
  if (cut.empty()) throw ConfigError("empty cut");
  Millis t = cut[0].start.own_entry();
  for (const auto& c : cut) t = std::min(t, c.start.own_entry());
  if (!epsilon_finite(eps)) return 0;
  return std::max<Millis>(0, t - eps);
}

nlohmann::json Violation::to_json() const {
  nlohmann::json cut_j = nlohmann::json::array();
  for (const auto& c : cut)
    cut_j.push_back({{"server-id", c.server_id}, {"seq", c.seq}});
  return {{"predicate-id", predicate_id}, {"clause-id", clause_id},
          {"cut", cut_j},                 {"t-violate", t_violate},
          {"detected-at", detected_at},   {"latency-ms", latency_ms},
          {"epoch", epoch}};
}

ClauseMonitor::ClauseMonitor(int predicate_id, Clause clause, DetectionClass cls,
                             const std::map<std::string, int>& owners, Millis eps)
    : predicate_id_(predicate_id), clause_(std::move(clause)), cls_(cls), eps_(eps) {
  for (const auto& t : clause_.terms) {
    auto it = owners.find(t.variable);
    if (it == owners.end())
      throw ConfigError("variable '" + t.variable + "' is mapped to no server");
    local_terms_[it->second].push_back(t);
  }
  for (const auto& [sid, terms] : local_terms_) participants_.push_back(sid);
  std::sort(participants_.begin(), participants_.end());
}

bool ClauseMonitor::locally_true(const Candidate& c) const {
  auto it = local_terms_.find(c.server_id);
  if (it == local_terms_.end()) return false;
  for (const auto& t : it->second) {
    auto v = c.state.find(t.variable);
    if (v == c.state.end() || v->second != t.value) return false;
  }
  return true;
}

std::vector<std::vector<Candidate>> ClauseMonitor::consume(const Candidate& c) {
  std::vector<std::vector<Candidate>> found;
  if (c.clause_id != clause_.id) return found;         // another clause's stream
  if (!local_terms_.count(c.server_id)) return found;  // not a participant
  std::uint64_t index = consumed_count_[c.server_id]++;
  last_[c.server_id] = c;

  bool usable = locally_true(c);

  if (usable) {
    // every participant other than c's server must contribute one retained
    // candidate; enumerate combinations in ascending server order so cuts
    // come out in lexicographic stream-index order
    std::vector<int> others;
    for (int sid : participants_)
      if (sid != c.server_id) others.push_back(sid);

    std::vector<const Stored*> chosen;
    std::function<void(size_t)> rec = [&](size_t oi) {
      if (oi == others.size()) {
        std::vector<Candidate> cut;
        for (int sid : participants_) {
          if (sid == c.server_id) {
            cut.push_back(c);
          } else {
            for (const Stored* s : chosen)
              if (s->c.server_id == sid) cut.push_back(s->c);
          }
        }
        found.push_back(std::move(cut));
        return;
      }
      for (const Stored& s : history_[others[oi]]) {
        bool ok = !happened_before(s.c, c, eps_) && !happened_before(c, s.c, eps_);
        if (!ok) continue;
        for (const Stored* prev : chosen) {
          if (happened_before(prev->c, s.c, eps_) ||
              happened_before(s.c, prev->c, eps_)) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;
        chosen.push_back(&s);
        rec(oi + 1);
        chosen.pop_back();
      }
    };
    rec(0);

    // single-server clauses need no joins; anything true is a cut already
    if (participants_.size() > 1) history_[c.server_id].push_back(Stored{c, index});
  }

  prune();
  return found;
}

void ClauseMonitor::prune() {
  // forbidden-state rule: a retained candidate that happened-before the
  // latest consumed candidate of every other participant cannot be
  // concurrent with anything still to come (streams are monotone)
  for (int sid : participants_) {
    auto& hist = history_[sid];
    auto dead = [&](const Stored& s) {
      for (int other : participants_) {
        if (other == sid) continue;
        const auto& lc = last_[other];
        if (!lc.has_value() || !happened_before(s.c, *lc, eps_)) return false;
      }
      return participants_.size() > 1;
    };
    hist.erase(std::remove_if(hist.begin(), hist.end(), dead), hist.end());
  }
}

void ClauseMonitor::clear() {
  history_.clear();
  consumed_count_.clear();
  last_.clear();
}

size_t ClauseMonitor::retained() const {
  size_t n = 0;
  for (const auto& [sid, h] : history_) n += h.size();
  return n;
}

namespace {

std::vector<Violation> run_streams(int predicate_id, const PredicateSpec& spec,
                                   const std::map<std::string, int>& owners,
                                   const CandidateStreams& streams, Millis eps) {
  PredicateConfig pc;
  pc.id = predicate_id;
  pc.spec = spec;
  Monitor mon(nullptr, pc, owners, eps);
  std::vector<size_t> pos(streams.size(), 0);
  std::vector<const std::vector<Candidate>*> ss;
  for (const auto& [sid, s] : streams) ss.push_back(&s);
  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (size_t i = 0; i < ss.size(); ++i) {
      if (pos[i] < ss[i]->size()) {
        mon.consume((*ss[i])[pos[i]++], 0, /*live=*/false);
        progressed = true;
      }
    }
  }
  return mon.violations();
}

}  // namespace

std::vector<Violation> run_linear(int predicate_id, const Clause& clause,
                                  const std::map<std::string, int>& owners,
                                  const CandidateStreams& streams, Millis eps) {
  PredicateSpec spec;
  spec.cls = DetectionClass::Linear;
  spec.clauses.push_back(clause);
  return run_streams(predicate_id, spec, owners, streams, eps);
}

std::vector<Violation> run_semilinear(int predicate_id, const PredicateSpec& spec,
                                      const std::map<std::string, int>& owners,
                                      const CandidateStreams& streams, Millis eps) {
  return run_streams(predicate_id, spec, owners, streams, eps);
}

Monitor::Monitor(NodeEnv* env, const PredicateConfig& pc,
                 const std::map<std::string, int>& owners, Millis eps,
                 std::string coordinator)
    : env_(env), predicate_id_(pc.id), eps_(eps), coordinator_(std::move(coordinator)) {
  for (const auto& cl : pc.spec.clauses)
    clauses_.emplace_back(pc.id, cl, pc.spec.cls, owners, eps);
}

void Monitor::on_message(const std::string&, const Message& m) {
  if (m.type == msg::kCandidate) {
    Candidate c = Candidate::from_json(m.payload);
    if (c.epoch < epoch_) return;  // stale candidate from an erased execution
    consume(c, env_ ? env_->now_ms() : 0, true);
  } else if (m.type == msg::kResume) {
    epoch_ = m.payload.at("epoch").get<std::uint64_t>();
    for (auto& cm : clauses_) cm.clear();
    if (env_) {
      Message ack{msg::kResumeAck, m.request_id, {{"node", env_->id()}}};
      env_->send(coordinator_, std::move(ack));
    }
  }
}

void Monitor::consume(const Candidate& c, Millis now, bool live) {
  // FIFO contract per (server, predicate): duplicates and reordered
  // deliveries are dropped
  auto key = std::make_pair(c.server_id, c.predicate_id);
  auto it = last_seq_.find(key);
  if (it != last_seq_.end() && c.seq <= it->second) return;
  last_seq_[key] = c.seq;
  if (on_candidate_) on_candidate_(c);

  for (auto& cm : clauses_) {
    for (auto& cut : cm.consume(c)) {
      Violation v;
      v.predicate_id = predicate_id_;
      v.clause_id = cm.clause_id();
      v.cut = std::move(cut);
      v.t_violate = estimate_t_violate(v.cut, eps_);
      Millis start_max = v.cut[0].start.own_entry();
      Millis end_max = v.cut[0].end.own_entry();
      for (const auto& member : v.cut) {
        start_max = std::max(start_max, member.start.own_entry());
        end_max = std::max(end_max, member.end.own_entry());
      }
      v.detected_at = live ? now : end_max;
      v.latency_ms = v.detected_at - start_max;
      v.epoch = epoch_;
      violations_.push_back(v);
      if (on_violation_) on_violation_(v);
      if (env_ && !coordinator_.empty()) {
        Message vm{msg::kViolation, static_cast<std::uint64_t>(violations_.size()),
                   v.to_json()};
        env_->send(coordinator_, std::move(vm));
      }
    }
  }
}

std::string Monitor::csv_header() {
  return "predicate,clause,t_violate,detected_at,latency_ms";
}

std::string Monitor::csv_row(const Violation& v) {
  return std::to_string(v.predicate_id) + "," + std::to_string(v.clause_id) + "," +
         std::to_string(v.t_violate) + "," + std::to_string(v.detected_at) + "," +
         std::to_string(v.latency_ms);
}

}  // namespace optikv
