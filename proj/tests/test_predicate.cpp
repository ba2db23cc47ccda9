#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "optikv/errors.hpp"
#include "optikv/predicate.hpp"

using namespace optikv;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fig3() { return read_file(std::string(OPTIKV_SOURCE_DIR) + "/tests/data/fig3.xml"); }

// Mutations that always produce an invalid document.
std::string mutate(const std::string& doc, std::mt19937_64& rng) {
  switch (rng() % 8) {
    case 0: {  // rename a known tag to an unknown one
      static const char* tags[] = {"type", "conjClause", "var", "name", "value", "id"};
      const char* t = tags[rng() % 6];
      std::string open = "<" + std::string(t) + ">";
      auto pos = doc.find(open);
      if (pos == std::string::npos) return "<predicate></predicate>";
      std::string out = doc;
      out.replace(pos + 1, strlen(t), "bogus");
      return out;
    }
    case 1: {  // invalid type text
      std::string out = doc;
      auto pos = out.find("semilinear");
      if (pos != std::string::npos) out.replace(pos, 10, "cubic");
      return out;
    }
    case 2: {  // duplicate clause id
      std::string out = doc;
      auto pos = out.find("<id>1</id>");
      if (pos != std::string::npos) out.replace(pos, 10, "<id>0</id>");
      return out;
    }
    case 3: {  // remove all vars from a clause
      std::string out = doc;
      auto b = out.find("<var>");
      auto e = out.find("</conjClause>");
      if (b != std::string::npos && e != std::string::npos && b < e)
        out.erase(b, e - b);
      return out;
    }
    case 4: {  // truncate mid-element
      return doc.substr(0, doc.size() / 2 + rng() % (doc.size() / 4));
    }
    case 5: {  // drop the <type> element
      std::string out = doc;
      auto b = out.find("<type>");
      auto e = out.find("</type>");
      if (b != std::string::npos && e != std::string::npos) out.erase(b, e + 7 - b);
      return out;
    }
    case 6: {  // mismatched end tag
      std::string out = doc;
      auto pos = out.find("</var>");
      if (pos != std::string::npos) out.replace(pos, 6, "</rav>");
      return out;
    }
    default: {  // shuffle: move the root close tag inside
      std::string out = doc;
      auto pos = out.find("</predicate>");
      if (pos != std::string::npos) {
        out.erase(pos, 12);
        out.insert(out.find("</type>") + 7, "</predicate>");
      }
      return out;
    }
  }
}

}  // namespace

TEST_CASE("fig3 parses to the documented two-clause semilinear spec") {
  PredicateSpec s = parse_predicate(fig3());
  CHECK(s.cls == DetectionClass::Semilinear);
  REQUIRE(s.clauses.size() == 2);
  CHECK(s.clauses[0].id == 0);
  REQUIRE(s.clauses[0].terms.size() == 2);
  CHECK(s.clauses[0].terms[0].variable == "x2");
  CHECK(s.clauses[0].terms[0].value == "1");
  CHECK(s.clauses[0].terms[1].variable == "y2");
  CHECK(s.clauses[1].id == 1);
  REQUIRE(s.clauses[1].terms.size() == 1);
  CHECK(s.clauses[1].terms[0].variable == "z2");
}

TEST_CASE("fig3 re-serializes losslessly") {
  std::string text = fig3();
  PredicateSpec s = parse_predicate(text);
  CHECK(serialize_predicate(s) == text);
  CHECK(parse_predicate(serialize_predicate(s)) == s);
}

TEST_CASE("conjunctive is an alias of linear") {
  std::string doc =
      "<predicate><type>conjunctive</type><conjClause><id>0</id>"
      "<var><name>x</name><value>1</value></var></conjClause></predicate>";
  PredicateSpec s = parse_predicate(doc);
  CHECK(s.cls == DetectionClass::Linear);
  CHECK(s.clauses.size() == 1);
  // survives a serialize/parse round trip with the original token
  CHECK(parse_predicate(serialize_predicate(s)) == s);
}

TEST_CASE("rejections carry a location and name the element") {
  std::string doc =
      "<predicate><type>cubic</type><conjClause><id>0</id>"
      "<var><name>x</name><value>1</value></var></conjClause></predicate>";
  try {
    parse_predicate(doc);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("type") != std::string::npos);
    CHECK(e.line() >= 1);
  }

  CHECK_THROWS_AS(parse_predicate("<predicate><type>linear</type></predicate>"),
                  ParseError);
  CHECK_THROWS_AS(
      parse_predicate("<predicate><type>linear</type><conjClause><id>0</id>"
                      "</conjClause></predicate>"),
      ParseError);
  // duplicate ids
  CHECK_THROWS_AS(
      parse_predicate("<predicate><type>linear</type>"
                      "<conjClause><id>0</id><var><name>x</name><value>1</value></var></conjClause>"
                      "<conjClause><id>0</id><var><name>y</name><value>1</value></var></conjClause>"
                      "</predicate>"),
      ParseError);
}

TEST_CASE("mutated documents are all rejected with located errors") {
  std::mt19937_64 rng(99);
  std::string doc = fig3();
  int rejected = 0;
  for (int i = 0; i < 200; ++i) {
    std::string bad = mutate(doc, rng);
    try {
      parse_predicate(bad);
    } catch (const ParseError& e) {
      ++rejected;
      CHECK(e.line() >= 1);
      CHECK(e.col() >= 1);
    }
  }
  CHECK(rejected == 200);
}

TEST_CASE("eval_clause tri-state") {
  Clause c{0, {{"x", "1"}, {"y", "1"}}};
  GlobalView both{{"x", {"1", 0, {}, {}}}, {"y", {"1", 1, {}, {}}}};
  CHECK(eval_clause(c, both) == Truth::True);
  GlobalView contra{{"x", {"0", 0, {}, {}}}};
  CHECK(eval_clause(c, contra) == Truth::False);
  GlobalView partial{{"x", {"1", 0, {}, {}}}};
  CHECK(eval_clause(c, partial) == Truth::Unknown);
}

TEST_CASE("eval monotonicity: filling in variables only resolves unknown") {
  std::mt19937_64 rng(31);
  const std::vector<std::string> vars = {"a", "b", "c", "d"};
  for (int iter = 0; iter < 300; ++iter) {
    Clause c;
    c.id = 0;
    for (const auto& v : vars)
      if (rng() % 2) c.terms.push_back({v, std::to_string(rng() % 2)});
    if (c.terms.empty()) c.terms.push_back({"a", "1"});
    GlobalView view;
    for (const auto& v : vars)
      if (rng() % 2) view[v] = {std::to_string(rng() % 2), 0, {}, {}};
    Truth before = eval_clause(c, view);
    GlobalView bigger = view;
    for (const auto& v : vars)
      if (!bigger.count(v) && rng() % 2) bigger[v] = {std::to_string(rng() % 2), 0, {}, {}};
    Truth after = eval_clause(c, bigger);
    if (before == Truth::True) CHECK(after == Truth::True);
    if (before == Truth::False) CHECK(after == Truth::False);
  }
}

TEST_CASE("disjunction over clauses matches a brute-force truth table") {
  // spec with <=4 boolean variables, random DNF; compare against direct
  // evaluation on fully-populated views
  std::mt19937_64 rng(47);
  const std::vector<std::string> vars = {"a", "b", "c", "d"};
  for (int iter = 0; iter < 100; ++iter) {
    PredicateSpec spec;
    spec.cls = DetectionClass::Semilinear;
    int nclauses = 1 + static_cast<int>(rng() % 3);
    for (int ci = 0; ci < nclauses; ++ci) {
      Clause c;
      c.id = ci;
      for (const auto& v : vars)
        if (rng() % 2) c.terms.push_back({v, std::to_string(rng() % 2)});
      if (c.terms.empty()) c.terms.push_back({vars[rng() % 4], "1"});
      spec.clauses.push_back(c);
    }
    for (int assign = 0; assign < 16; ++assign) {
      GlobalView view;
      std::map<std::string, std::string> val;
      for (size_t i = 0; i < vars.size(); ++i) {
        val[vars[i]] = ((assign >> i) & 1) ? "1" : "0";
        view[vars[i]] = {val[vars[i]], 0, {}, {}};
      }
      bool direct = false;
      for (const auto& c : spec.clauses) {
        bool all = true;
        for (const auto& t : c.terms) all = all && (val[t.variable] == t.value);
        direct = direct || all;
      }
      bool via_eval = false;
      for (const auto& c : spec.clauses)
        via_eval = via_eval || (eval_clause(c, view) == Truth::True);
      CHECK(direct == via_eval);
    }
  }
}

TEST_CASE("relevant_variables partitions clauses by owning server") {
  PredicateSpec s = parse_predicate(fig3());
  std::map<std::string, int> owners{{"x2", 1}, {"y2", 1}, {"z2", 2}};
  RelevantVariables r = relevant_variables(s, owners);
  CHECK(r.all == std::set<std::string>{"x2", "y2", "z2"});
  REQUIRE(r.local.size() == 2);
  CHECK(r.local[0].clause_id == 0);
  CHECK(r.local[0].server_id == 1);
  CHECK(r.local[0].terms.size() == 2);
  CHECK(r.local[1].clause_id == 1);
  CHECK(r.local[1].server_id == 2);

  // clause split across two servers yields two local sub-conjunctions
  std::map<std::string, int> split{{"x2", 1}, {"y2", 3}, {"z2", 2}};
  RelevantVariables r2 = relevant_variables(s, split);
  CHECK(r2.local.size() == 3);

  CHECK_THROWS_AS(relevant_variables(s, std::map<std::string, int>{}), ConfigError);
}
