#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "optikv/hvc.hpp"

namespace optikv {

enum class DetectionClass { Linear, Semilinear };
enum class Truth { True, False, Unknown };

struct Term {
  std::string variable;
  std::string value;
  bool operator==(const Term& o) const {
    return variable == o.variable && value == o.value;
  }
};

struct Clause {
  int id = 0;
  std::vector<Term> terms;
  bool operator==(const Clause& o) const { return id == o.id && terms == o.terms; }
};

/// A monitored predicate (the negation of the safety property), in
/// disjunctive normal form, as given by the XML dialect:
///
///   <predicate>
///     <type>linear|conjunctive|semilinear</type>
///     <conjClause><id>0</id><var><name>x</name><value>1</value></var>...</conjClause>
///     ...
///   </predicate>
///
/// "conjunctive" is accepted as an alias of linear.
struct PredicateSpec {
  DetectionClass cls = DetectionClass::Linear;
  std::string type_token;  // as written, for lossless re-serialization
  std::vector<Clause> clauses;

  const Clause& clause(int id) const;
  bool operator==(const PredicateSpec& o) const {
    return cls == o.cls && clauses == o.clauses;
  }
};

// Throws ParseError naming the offending element and its location.
PredicateSpec parse_predicate(const std::string& xml_text);
std::string serialize_predicate(const PredicateSpec& spec);

struct ViewEntry {
  std::string value;
  int server = -1;
  Hvc interval_start;
  Hvc interval_end;
};

/// Variable values visible to one monitor while judging a cut.
using GlobalView = std::map<std::string, ViewEntry>;

Truth eval_clause(const Clause& c, const GlobalView& v);

/// The sub-conjunction of one clause local to one server.
struct LocalClause {
  int clause_id = 0;
  int server_id = 0;
  std::vector<Term> terms;
};

struct RelevantVariables {
  std::set<std::string> all;
  std::vector<LocalClause> local;  // one entry per (clause, owning server)
};

// owners: variable name -> server id, from the deployment config.
RelevantVariables relevant_variables(
    const PredicateSpec& spec, const std::map<std::string, int>& owners);

}  // namespace optikv
