#include "optikv/oracle.hpp"

#include <fstream>

#include "optikv/errors.hpp"
#include "optikv/wire.hpp"

namespace optikv {

size_t CandidateLog::total() const {
  size_t n = 0;
  for (const auto& [k, v] : streams) n += v.size();
  return n;
}

void CandidateLog::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.good()) throw ConfigError("cannot write log: " + path);
  for (const auto& [key, stream] : streams) {
    for (const auto& c : stream) {
      Message m{msg::kCandidate, c.seq, c.to_json()};
      nlohmann::json j{{"type", m.type}, {"request-id", m.request_id},
                       {"payload", m.payload}};
      out << j.dump() << "\n";
    }
  }
}

CandidateLog CandidateLog::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw ConfigError("cannot read log: " + path);
  CandidateLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Message m = parse_message(line);
    if (m.type != msg::kCandidate)
      throw ProtocolError("log contains a non-candidate record");
    log.add(Candidate::from_json(m.payload));
  }
  // streams must be in sequence order with gapless numbering
  for (auto& [key, stream] : log.streams) {
    std::sort(stream.begin(), stream.end(),
              [](const Candidate& a, const Candidate& b) { return a.seq < b.seq; });
  }
  return log;
}

std::vector<Violation> enumerate_violations(const CandidateLog& log,
                                            const PredicateSpec& spec,
                                            const std::map<std::string, int>& owners,
                                            int predicate_id, Millis eps) {
  std::vector<Violation> out;
  for (const auto& clause : spec.clauses) {
    // participating servers, ascending
    std::map<int, std::vector<Term>> local;
    for (const auto& t : clause.terms) {
      auto it = owners.find(t.variable);
      if (it == owners.end())
        throw ConfigError("variable '" + t.variable + "' is mapped to no server");
      local[it->second].push_back(t);
    }

    std::vector<int> participants;
    std::vector<std::vector<const Candidate*>> streams;
    bool empty_stream = false;
    size_t product = 1;
    for (const auto& [sid, terms] : local) {
      participants.push_back(sid);
      std::vector<const Candidate*> s;
      auto it = log.streams.find({predicate_id, sid});
      if (it != log.streams.end()) {
        for (const auto& c : it->second)
          if (c.clause_id == clause.id) s.push_back(&c);
      }
      if (s.empty()) empty_stream = true;
      product *= std::max<size_t>(1, s.size());
      if (product > 1000000)
        throw ConfigError("candidate log too large for exhaustive enumeration");
      streams.push_back(std::move(s));
    }
    if (empty_stream) continue;  // a cut needs one candidate per participant

    std::vector<const Candidate*> pick(participants.size(), nullptr);
    std::function<void(size_t)> rec = [&](size_t i) {
      if (i == participants.size()) {
        // clause truth on the union of states
        GlobalView view;
        for (const Candidate* c : pick)
          for (const auto& [var, val] : c->state)
            view[var] = ViewEntry{val, c->server_id, c->start, c->end};
        if (eval_clause(clause, view) != Truth::True) return;
        Violation v;
        v.predicate_id = predicate_id;
        v.clause_id = clause.id;
        for (const Candidate* c : pick) v.cut.push_back(*c);
        v.t_violate = estimate_t_violate(v.cut, eps);
        Millis start_max = v.cut[0].start.own_entry(), end_max = v.cut[0].end.own_entry();
        for (const auto& m : v.cut) {
          start_max = std::max(start_max, m.start.own_entry());
          end_max = std::max(end_max, m.end.own_entry());
        }
        v.detected_at = end_max;
        v.latency_ms = end_max - start_max;
        out.push_back(std::move(v));
        return;
      }
      for (const Candidate* c : streams[i]) {
        bool ok = true;
        for (size_t j = 0; j < i; ++j) {
          if (happened_before(*pick[j], *c, eps) || happened_before(*c, *pick[j], eps)) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;
        pick[i] = c;
        rec(i + 1);
      }
    };
    rec(0);
  }
  return out;
}

std::vector<Violation> replay(const CandidateLog& log, const PredicateSpec& spec,
                              const std::map<std::string, int>& owners,
                              int predicate_id, Millis eps) {
  PredicateConfig pc;
  pc.id = predicate_id;
  pc.spec = spec;
  Monitor mon(nullptr, pc, owners, eps);

  // deterministic round-robin across this predicate's server streams
  std::vector<const std::vector<Candidate>*> streams;
  for (const auto& [key, stream] : log.streams)
    if (key.first == predicate_id) streams.push_back(&stream);
  std::vector<size_t> pos(streams.size(), 0);
  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (size_t i = 0; i < streams.size(); ++i) {
      if (pos[i] < streams[i]->size()) {
        mon.consume((*streams[i])[pos[i]++], 0, /*live=*/false);
        progressed = true;
      }
    }
  }
  return mon.violations();
}

}  // namespace optikv
