#include "optikv/detector.hpp"

#include "optikv/errors.hpp"
#include "optikv/wire.hpp"

namespace optikv {

nlohmann::json Candidate::to_json() const {
  nlohmann::json st = nlohmann::json::object();
  for (const auto& [k, v] : state) st[k] = v;
  return nlohmann::json{{"predicate-id", predicate_id},
                        {"clause-id", clause_id},
                        {"server-id", server_id},
                        {"seq", seq},
                        {"epoch", epoch},
                        {"interval",
                         {{"start", hvc_to_json(start)}, {"end", hvc_to_json(end)}}},
                        {"state", st}};
}

Candidate Candidate::from_json(const nlohmann::json& j) {
  Candidate c;
  c.predicate_id = j.at("predicate-id").get<int>();
  c.clause_id = j.at("clause-id").get<int>();
  c.server_id = j.at("server-id").get<int>();
  c.seq = j.at("seq").get<std::uint64_t>();
  c.epoch = j.value("epoch", 0ull);
  c.start = hvc_from_json(j.at("interval").at("start"), c.server_id);
  c.end = hvc_from_json(j.at("interval").at("end"), c.server_id);
  for (auto it = j.at("state").begin(); it != j.at("state").end(); ++it)
    c.state[it.key()] = it.value().get<std::string>();
  return c;
}

void LocalDetector::add_clause(int predicate_id, DetectionClass cls,
                               const LocalClause& lc, const Hvc& initial_clock) {
  if (lc.server_id != server_id_)
    throw ConfigError("local clause belongs to server " +
                      std::to_string(lc.server_id));
  ClauseCache c;
  c.predicate_id = predicate_id;
  c.clause_id = lc.clause_id;
  c.cls = cls;
  c.terms = lc.terms;
  c.window_start = initial_clock;
  clauses_.push_back(std::move(c));
  size_t idx = clauses_.size() - 1;
  for (const auto& t : lc.terms) by_key_[t.variable].push_back(idx);
}

bool LocalDetector::eval_local(const ClauseCache& c) const {
  for (const auto& t : c.terms) {
    auto it = c.values.find(t.variable);
    if (it == c.values.end() || it->second != t.value) return false;
  }
  return true;
}

Candidate LocalDetector::make_candidate(const ClauseCache& c, const Hvc& start,
                                        const Hvc& end) {
  Candidate out;
  out.predicate_id = c.predicate_id;
  out.clause_id = c.clause_id;
  out.server_id = server_id_;
  out.seq = ++seq_[c.predicate_id];
  out.epoch = epoch_;
  out.start = start;
  out.end = end;
  out.state = c.values;
  return out;
}

std::vector<Candidate> LocalDetector::on_put(const std::string& key,
                                             const std::string& value,
                                             const Hvc& hvc_before,
                                             const Hvc& hvc_after) {
  std::vector<Candidate> out;
  auto ki = by_key_.find(key);
  if (ki == by_key_.end()) return out;
  for (size_t idx : ki->second) {
    ClauseCache& c = clauses_[idx];
    // close the elapsed window with the pre-PUT values; emission for linear
    // clauses is gated on the local sub-conjunction having held, and is
    // independent of its truth after this PUT
    if (c.cls == DetectionClass::Semilinear || c.truth)
      out.push_back(make_candidate(c, c.window_start, hvc_before));
    c.values[key] = value;
    c.truth = eval_local(c);
    c.window_start = hvc_after;
  }
  return out;
}

std::vector<Candidate> LocalDetector::flush(const Hvc& now) {
  std::vector<Candidate> out;
  for (ClauseCache& c : clauses_) {
    if (compare(c.window_start, now) == CausalOrder::Equal) continue;  // empty split
    if (c.cls == DetectionClass::Semilinear || c.truth)
      out.push_back(make_candidate(c, c.window_start, now));
    // restart the window either way; a later truth interval must not stretch
    // back over known-false time
    c.window_start = now;
  }
  return out;
}

void LocalDetector::reset(const std::map<std::string, std::string>& values,
                          const Hvc& clock) {
  for (ClauseCache& c : clauses_) {
    c.values.clear();
    for (const auto& t : c.terms) {
      auto it = values.find(t.variable);
      if (it != values.end()) c.values[t.variable] = it->second;
    }
    c.truth = eval_local(c);
    c.window_start = clock;
  }
}

}  // namespace optikv
