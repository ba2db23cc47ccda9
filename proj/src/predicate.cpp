#include "optikv/predicate.hpp"

#include <algorithm>
#include <sstream>

#include "optikv/errors.hpp"

namespace optikv {

namespace {

struct XmlNode {
  std::string tag;
  std::string text;  // concatenated character data directly inside this node
  std::vector<XmlNode> children;
  int line = 0, col = 0;
};

// Minimal XML reader for the predicate dialect: elements, character data,
// comments, an optional declaration, and the usual five entities. No
// attributes (the dialect has none; they are rejected as malformed).
class XmlParser {
 public:
  explicit XmlParser(const std::string& s) : s_(s) {}

  XmlNode parse_document() {
    skip_prolog();
    XmlNode root = parse_element();
    skip_ws_and_comments();
    if (pos_ != s_.size()) fail("trailing content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError(why, line_, col_);
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }

  char advance() {
    char c = s_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  bool consume(const std::string& lit) {
    if (s_.compare(pos_, lit.size(), lit) != 0) return false;
    for (size_t i = 0; i < lit.size(); ++i) advance();
    return true;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n'))
      advance();
  }

  void skip_ws_and_comments() {
    for (;;) {
      skip_ws();
      if (!eof() && s_.compare(pos_, 4, "<!--") == 0) {
        while (!eof() && s_.compare(pos_, 3, "-->") != 0) advance();
        if (eof()) fail("unterminated comment");
        consume("-->");
        continue;
      }
      break;
    }
  }

  void skip_prolog() {
    skip_ws();
    if (!eof() && s_.compare(pos_, 5, "<?xml") == 0) {
      while (!eof() && s_.compare(pos_, 2, "?>") != 0) advance();
      if (eof()) fail("unterminated xml declaration");
      consume("?>");
    }
    skip_ws_and_comments();
  }

  std::string parse_name() {
    std::string name;
    while (!eof() && (isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                      peek() == '-' || peek() == ':' || peek() == '.'))
      name.push_back(advance());
    if (name.empty()) fail("expected element name");
    return name;
  }

  std::string parse_entity() {
    // '&' already consumed
    std::string ent;
    while (!eof() && peek() != ';' && ent.size() < 8) ent.push_back(advance());
    if (eof() || peek() != ';') fail("unterminated entity");
    advance();
    if (ent == "lt") return "<";
    if (ent == "gt") return ">";
    if (ent == "amp") return "&";
    if (ent == "quot") return "\"";
    if (ent == "apos") return "'";
    fail("unknown entity &" + ent + ";");
  }

  XmlNode parse_element() {
    skip_ws_and_comments();
    if (eof() || peek() != '<') fail("expected element");
    XmlNode node;
    node.line = line_;
    node.col = col_;
    advance();  // '<'
    if (!eof() && (peek() == '/' || peek() == '!'))
      fail("expected start tag");
    node.tag = parse_name();
    skip_ws();
    if (eof()) fail("unterminated start tag <" + node.tag + ">");
    if (peek() != '>') {
      if (consume("/>")) return node;
      fail("malformed start tag <" + node.tag + ">");
    }
    advance();  // '>'
    // content
    for (;;) {
      if (eof()) fail("unterminated element <" + node.tag + ">");
      if (peek() == '<') {
        if (s_.compare(pos_, 4, "<!--") == 0) {
          skip_ws_and_comments();
          continue;
        }
        if (s_.compare(pos_, 2, "</") == 0) {
          int l = line_, c = col_;
          consume("</");
          std::string closing = parse_name();
          skip_ws();
          if (eof() || peek() != '>') fail("malformed end tag </" + closing + ">");
          advance();
          if (closing != node.tag)
            throw ParseError("mismatched end tag </" + closing + "> for element <" +
                                 node.tag + ">",
                             l, c);
          return node;
        }
        node.children.push_back(parse_element());
      } else if (peek() == '&') {
        advance();
        node.text += parse_entity();
      } else {
        node.text.push_back(advance());
      }
    }
  }

  const std::string& s_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

std::string trimmed(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void reject(const XmlNode& n, const std::string& why) {
  throw ParseError("element <" + n.tag + ">: " + why, n.line, n.col);
}

const XmlNode& only_child(const XmlNode& n, const std::string& tag) {
  const XmlNode* found = nullptr;
  for (const auto& c : n.children) {
    if (c.tag == tag) {
      if (found) reject(c, "duplicate <" + tag + ">");
      found = &c;
    }
  }
  if (!found) reject(n, "missing required child <" + tag + ">");
  return *found;
}

std::string text_of(const XmlNode& n) {
  if (!n.children.empty()) reject(n, "expected text content only");
  std::string t = trimmed(n.text);
  if (t.empty()) reject(n, "empty text content");
  return t;
}

Term parse_var(const XmlNode& var) {
  for (const auto& c : var.children)
    if (c.tag != "name" && c.tag != "value") reject(c, "unknown element in <var>");
  Term t;
  t.variable = text_of(only_child(var, "name"));
  t.value = text_of(only_child(var, "value"));
  if (trimmed(var.text) != "") reject(var, "stray text in <var>");
  return t;
}

Clause parse_clause(const XmlNode& cl) {
  Clause c;
  c.id = [&] {
    const XmlNode& idn = only_child(cl, "id");
    std::string t = text_of(idn);
    try {
      size_t used = 0;
      int v = std::stoi(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      reject(idn, "clause id must be an integer, got '" + t + "'");
    }
  }();
  std::set<std::string> seen;
  for (const auto& ch : cl.children) {
    if (ch.tag == "id") continue;
    if (ch.tag != "var") reject(ch, "unknown element in <conjClause>");
    Term t = parse_var(ch);
    if (!seen.insert(t.variable).second)
      reject(ch, "duplicate variable '" + t.variable + "' in clause");
    c.terms.push_back(std::move(t));
  }
  if (c.terms.empty()) reject(cl, "clause has no <var> terms");
  if (trimmed(cl.text) != "") reject(cl, "stray text in <conjClause>");
  return c;
}

}  // namespace

const Clause& PredicateSpec::clause(int id) const {
  for (const auto& c : clauses)
    if (c.id == id) return c;
  throw ConfigError("no clause with id " + std::to_string(id));
}

PredicateSpec parse_predicate(const std::string& xml_text) {
  XmlParser p(xml_text);
  XmlNode root = p.parse_document();
  if (root.tag != "predicate") reject(root, "root element must be <predicate>");

  PredicateSpec spec;
  const XmlNode& type = only_child(root, "type");
  spec.type_token = text_of(type);
  if (spec.type_token == "linear" || spec.type_token == "conjunctive") {
    spec.cls = DetectionClass::Linear;
  } else if (spec.type_token == "semilinear") {
    spec.cls = DetectionClass::Semilinear;
  } else {
    reject(type, "unknown predicate type '" + spec.type_token + "'");
  }

  std::set<int> ids;
  for (const auto& ch : root.children) {
    if (ch.tag == "type") continue;
    if (ch.tag != "conjClause") reject(ch, "unknown element in <predicate>");
    Clause c = parse_clause(ch);
    if (!ids.insert(c.id).second)
      reject(ch, "duplicate clause id " + std::to_string(c.id));
    spec.clauses.push_back(std::move(c));
  }
  if (spec.clauses.empty()) reject(root, "predicate has no <conjClause>");
  if (trimmed(root.text) != "") reject(root, "stray text in <predicate>");

  // ids dense from 0
  for (int want = 0; want < static_cast<int>(spec.clauses.size()); ++want) {
    if (!ids.count(want))
      reject(root, "clause ids must be dense from 0; missing id " + std::to_string(want));
  }
  return spec;
}

std::string serialize_predicate(const PredicateSpec& spec) {
  std::ostringstream out;
  std::string token = spec.type_token.empty()
                          ? (spec.cls == DetectionClass::Linear ? "linear" : "semilinear")
                          : spec.type_token;
  out << "<predicate>\n";
  out << "  <type>" << token << "</type>\n";
  for (const auto& c : spec.clauses) {
    out << "  <conjClause>\n";
    out << "    <id>" << c.id << "</id>\n";
    for (const auto& t : c.terms) {
      out << "    <var>\n";
      out << "      <name>" << t.variable << "</name> <value>" << t.value
          << "</value>\n";
      out << "    </var>\n";
    }
    out << "  </conjClause>\n";
  }
  out << "</predicate>\n";
  return out.str();
}

Truth eval_clause(const Clause& c, const GlobalView& v) {
  bool missing = false;
  for (const auto& t : c.terms) {
    auto it = v.find(t.variable);
    if (it == v.end()) {
      missing = true;
      continue;
    }
    if (it->second.value != t.value) return Truth::False;
  }
  return missing ? Truth::Unknown : Truth::True;
}

RelevantVariables relevant_variables(const PredicateSpec& spec,
                                     const std::map<std::string, int>& owners) {
  RelevantVariables r;
  for (const auto& c : spec.clauses) {
    std::map<int, LocalClause> by_server;
    for (const auto& t : c.terms) {
      r.all.insert(t.variable);
      auto it = owners.find(t.variable);
      if (it == owners.end())
        throw ConfigError("variable '" + t.variable + "' is mapped to no server");
      auto& lc = by_server[it->second];
      lc.clause_id = c.id;
      lc.server_id = it->second;
      lc.terms.push_back(t);
    }
    for (auto& [sid, lc] : by_server) r.local.push_back(std::move(lc));
  }
  return r;
}

}  // namespace optikv
