#pragma once

// Random candidate-log generator honoring the detector contract: per
// (server, clause) streams are monotone window tilings of one server
// timeline (end_k <= start_{k+1} elementwise), sequence numbers are gapless
// per (server, predicate), and linear-clause candidates carry locally-true
// states. Cross-server causality comes from random clock merges, standing in
// for client-carried context.

#include <map>
#include <random>
#include <string>
#include <vector>

#include "optikv/oracle.hpp"

namespace logtest {

struct GeneratedCase {
  optikv::PredicateSpec spec;
  std::map<std::string, int> owners;
  optikv::CandidateLog log;
  int predicate_id = 1;
};

inline GeneratedCase generate_case(std::mt19937_64& rng, int max_servers = 4,
                                   int max_per_server = 8,
                                   bool semilinear = false) {
  using namespace optikv;
  GeneratedCase out;
  int n = 2 + static_cast<int>(rng() % static_cast<unsigned>(max_servers - 1));

  out.spec.cls = semilinear ? DetectionClass::Semilinear : DetectionClass::Linear;
  int n_clauses = semilinear ? 1 + static_cast<int>(rng() % 2) : 1;
  for (int ci = 0; ci < n_clauses; ++ci) {
    Clause cl;
    cl.id = ci;
    // each clause touches a random nonempty subset of servers, one variable
    // per server
    int member_mask = 1 + static_cast<int>(rng() % ((1u << n) - 1));
    for (int s = 0; s < n; ++s) {
      if (!((member_mask >> s) & 1)) continue;
      std::string var = "v" + std::to_string(ci) + "_" + std::to_string(s);
      cl.terms.push_back({var, "1"});
      out.owners[var] = s;
    }
    out.spec.clauses.push_back(std::move(cl));
  }

  // evolve per-server clocks over a shared physical timeline
  std::vector<Hvc> clock;
  for (int s = 0; s < n; ++s) clock.emplace_back(s, n, kEpsilonInfinity);
  Millis t = 0;
  std::map<int, std::uint64_t> seq;  // per server (single predicate)

  int per_server = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_per_server));
  std::vector<int> remaining(static_cast<size_t>(n), per_server);
  int total_left = n * per_server;
  while (total_left > 0) {
    int s = static_cast<int>(rng() % static_cast<unsigned>(n));
    if (remaining[static_cast<size_t>(s)] == 0) continue;
    --remaining[static_cast<size_t>(s)];
    --total_left;

    // which clause does this server report for?
    std::vector<int> my_clauses;
    for (const auto& cl : out.spec.clauses)
      for (const auto& term : cl.terms)
        if (out.owners[term.variable] == s) {
          my_clauses.push_back(cl.id);
          break;
        }
    if (my_clauses.empty()) continue;
    int clause_id = my_clauses[rng() % my_clauses.size()];

    // occasionally learn another server's clock (client-carried causality)
    t += 1 + static_cast<Millis>(rng() % 5);
    if (n > 1 && rng() % 3 == 0) {
      int u = static_cast<int>(rng() % static_cast<unsigned>(n));
      if (u != s)
        clock[static_cast<size_t>(s)] =
            clock[static_cast<size_t>(s)].on_receive(clock[static_cast<size_t>(u)], t);
    }
    clock[static_cast<size_t>(s)] = clock[static_cast<size_t>(s)].tick(t);
    Hvc start = clock[static_cast<size_t>(s)];
    if (rng() % 3 != 0) t += static_cast<Millis>(rng() % 6);
    clock[static_cast<size_t>(s)] = clock[static_cast<size_t>(s)].tick(t);
    Hvc end = clock[static_cast<size_t>(s)];

    Candidate c;
    c.predicate_id = out.predicate_id;
    c.clause_id = clause_id;
    c.server_id = s;
    c.seq = ++seq[s];
    c.start = start;
    c.end = end;
    for (const auto& term : out.spec.clauses[static_cast<size_t>(clause_id)].terms) {
      if (out.owners[term.variable] != s) continue;
      if (semilinear)
        c.state[term.variable] = (rng() % 2) ? term.value : "0";
      else
        c.state[term.variable] = term.value;  // detector sends true windows only
    }
    out.log.add(c);
  }
  return out;
}

}  // namespace logtest
