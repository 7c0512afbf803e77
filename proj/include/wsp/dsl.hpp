#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wsp/conditional.hpp"
#include "wsp/core.hpp"
#include "wsp/errors.hpp"
#include "wsp/owsp.hpp"
#include "wsp/solve.hpp"
#include "wsp/violate.hpp"

namespace wsp {

// ---------------------------------------------------------------------------
// The `.wsp` text format. Line-oriented sections; `#` starts a comment;
// see docs/FORMAT.md for the grammar. The serializer emits the canonical
// form (sorted sections, fully parenthesized formulas), and canonical
// documents round-trip byte-identically.
// ---------------------------------------------------------------------------

struct SchemaDocument {
  SymbolTable step_names;
  SymbolTable user_names;
  std::vector<std::pair<StepId, StepId>> edges;
  std::vector<std::pair<StepId, UserId>> auth;
  std::vector<std::pair<std::string, UserRelation>> relations;
  std::vector<Constraint> constraints;
  std::optional<WorkflowFormula> formula;
};

namespace dsl_detail {

struct Token {
  enum class Type { Ident, Colon, Comma, Semi, LParen, RParen, LBrace, RBrace, Arrow };
  Type type;
  std::string text;
  std::size_t column;  // 1-based
};

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline bool is_reserved(std::string_view word) {
  return word == "eq" || word == "ne" || word == "rel" || word == "par" ||
         word == "xor";
}

inline std::vector<Token> lex_line(std::string_view line, std::size_t line_no) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    if (c == '#') break;  // comment to end of line
    const std::size_t col = i + 1;
    if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < line.size() && ident_char(line[j])) ++j;
      out.push_back({Token::Type::Ident, std::string(line.substr(i, j - i)), col});
      i = j;
      continue;
    }
    switch (c) {
      case ':': out.push_back({Token::Type::Colon, ":", col}); ++i; break;
      case ',': out.push_back({Token::Type::Comma, ",", col}); ++i; break;
      case ';': out.push_back({Token::Type::Semi, ";", col}); ++i; break;
      case '(': out.push_back({Token::Type::LParen, "(", col}); ++i; break;
      case ')': out.push_back({Token::Type::RParen, ")", col}); ++i; break;
      case '{': out.push_back({Token::Type::LBrace, "{", col}); ++i; break;
      case '}': out.push_back({Token::Type::RBrace, "}", col}); ++i; break;
      case '-':
        if (i + 1 < line.size() && line[i + 1] == '>') {
          out.push_back({Token::Type::Arrow, "->", col});
          i += 2;
          break;
        }
        throw ParseError(line_no, col, "stray '-' (did you mean '->'?)");
      default:
        throw ParseError(line_no, col, "unexpected character");
    }
  }
  return out;
}

class TokenCursor {
 public:
  TokenCursor(std::vector<Token> tokens, std::size_t line, std::size_t eol_col)
      : tokens_(std::move(tokens)), line_(line), eol_col_(eol_col) {}

  bool done() const noexcept { return index_ >= tokens_.size(); }

  const Token& peek() const {
    if (done()) throw ParseError(line_, eol_col_, "unexpected end of line");
    return tokens_[index_];
  }

  Token take() {
    Token t = peek();
    ++index_;
    return t;
  }

  bool accept(Token::Type type) {
    if (done() || tokens_[index_].type != type) return false;
    ++index_;
    return true;
  }

  Token expect(Token::Type type, const std::string& what) {
    if (done()) throw ParseError(line_, eol_col_, "expected " + what);
    if (tokens_[index_].type != type)
      throw ParseError(line_, tokens_[index_].column, "expected " + what);
    return tokens_[index_++];
  }

  std::string expect_ident(const std::string& what) {
    Token t = expect(Token::Type::Ident, what);
    if (is_reserved(t.text))
      throw ParseError(line_, t.column, "'" + t.text + "' is a reserved word");
    return t.text;
  }

  void expect_done() {
    if (!done())
      throw ParseError(line_, tokens_[index_].column, "trailing input on line");
  }

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const {
    return done() ? eol_col_ : tokens_[index_].column;
  }

 private:
  std::vector<Token> tokens_;
  std::size_t index_ = 0;
  std::size_t line_;
  std::size_t eol_col_;
};

struct ParseState {
  SchemaDocument doc;
  bool saw_edges = false;

  StepId resolve_step(const std::string& name, std::size_t line, std::size_t col) const {
    auto id = doc.step_names.find(name);
    if (!id) throw ParseError(line, col, "undefined step '" + name + "'");
    return StepId{*id};
  }

  UserId resolve_user(const std::string& name, std::size_t line, std::size_t col) const {
    auto id = doc.user_names.find(name);
    if (!id) throw ParseError(line, col, "undefined user '" + name + "'");
    return UserId{*id};
  }

  const UserRelation* find_relation(const std::string& name) const {
    for (const auto& [n, r] : doc.relations)
      if (n == name) return &r;
    return nullptr;
  }
};

inline std::vector<StepId> parse_scope(TokenCursor& cur, const ParseState& st) {
  if (cur.accept(Token::Type::LBrace)) {
    std::vector<StepId> out;
    do {
      Token t = cur.expect(Token::Type::Ident, "step name");
      out.push_back(st.resolve_step(t.text, cur.line(), t.column));
    } while (cur.accept(Token::Type::Comma));
    cur.expect(Token::Type::RBrace, "'}'");
    return out;
  }
  Token t = cur.expect(Token::Type::Ident, "step name or '{'");
  return {st.resolve_step(t.text, cur.line(), t.column)};
}

// Formula grammar, loosest to tightest: xor, par, ';'.
WorkflowFormula parse_formula_xor(TokenCursor& cur, const ParseState& st);

inline WorkflowFormula parse_formula_atom(TokenCursor& cur,
                                          const ParseState& st) {
  if (cur.accept(Token::Type::LParen)) {
    WorkflowFormula inner = parse_formula_xor(cur, st);
    cur.expect(Token::Type::RParen, "')'");
    return inner;
  }
  Token t = cur.expect(Token::Type::Ident, "step name or '('");
  if (is_reserved(t.text))
    throw ParseError(cur.line(), t.column, "'" + t.text + "' is a reserved word");
  return WorkflowFormula::step(st.resolve_step(t.text, cur.line(), t.column));
}

inline WorkflowFormula parse_formula_serial(TokenCursor& cur,
                                            const ParseState& st) {
  std::vector<WorkflowFormula> parts;
  parts.push_back(parse_formula_atom(cur, st));
  while (cur.accept(Token::Type::Semi)) parts.push_back(parse_formula_atom(cur, st));
  if (parts.size() == 1) return std::move(parts.front());
  return WorkflowFormula::serial(std::move(parts));
}

inline WorkflowFormula parse_formula_par(TokenCursor& cur,
                                         const ParseState& st) {
  std::vector<WorkflowFormula> parts;
  parts.push_back(parse_formula_serial(cur, st));
  while (!cur.done() && cur.peek().type == Token::Type::Ident &&
         cur.peek().text == "par") {
    cur.take();
    parts.push_back(parse_formula_serial(cur, st));
  }
  if (parts.size() == 1) return std::move(parts.front());
  return WorkflowFormula::parallel(std::move(parts));
}

inline WorkflowFormula parse_formula_xor(TokenCursor& cur,
                                         const ParseState& st) {
  std::vector<WorkflowFormula> parts;
  parts.push_back(parse_formula_par(cur, st));
  while (!cur.done() && cur.peek().type == Token::Type::Ident &&
         cur.peek().text == "xor") {
    cur.take();
    parts.push_back(parse_formula_par(cur, st));
  }
  if (parts.size() == 1) return std::move(parts.front());
  return WorkflowFormula::exclusive(std::move(parts));
}

inline void parse_section(TokenCursor& cur, ParseState& st) {
  Token head = cur.expect(Token::Type::Ident, "section keyword");
  const std::size_t head_col = head.column;
  cur.expect(Token::Type::Colon, "':' after section keyword");

  if (head.text == "steps") {
    do {
      st.doc.step_names.intern(cur.expect_ident("step name"));
    } while (!cur.done());
    return;
  }
  if (head.text == "users") {
    do {
      st.doc.user_names.intern(cur.expect_ident("user name"));
    } while (!cur.done());
    return;
  }
  if (head.text == "edges") {
    if (st.doc.formula)
      throw ParseError(cur.line(), head_col,
                       "a document defines edges or a formula, not both");
    st.saw_edges = true;
    do {
      Token a = cur.expect(Token::Type::Ident, "step name");
      StepId from = st.resolve_step(a.text, cur.line(), a.column);
      cur.expect(Token::Type::Arrow, "'->'");
      Token b = cur.expect(Token::Type::Ident, "step name");
      StepId to = st.resolve_step(b.text, cur.line(), b.column);
      st.doc.edges.emplace_back(from, to);
    } while (cur.accept(Token::Type::Comma));
    cur.expect_done();
    return;
  }
  if (head.text == "auth") {
    Token s = cur.expect(Token::Type::Ident, "step name");
    StepId step = st.resolve_step(s.text, cur.line(), s.column);
    cur.expect(Token::Type::Colon, "':' after step name");
    do {
      Token u = cur.expect(Token::Type::Ident, "user name");
      st.doc.auth.emplace_back(step, st.resolve_user(u.text, cur.line(), u.column));
    } while (!cur.done());
    return;
  }
  if (head.text == "relation") {
    Token name = cur.expect(Token::Type::Ident, "relation name");
    if (is_reserved(name.text))
      throw ParseError(cur.line(), name.column,
                       "'" + name.text + "' is a reserved word");
    if (st.find_relation(name.text))
      throw ParseError(cur.line(), name.column,
                       "relation '" + name.text + "' is already defined");
    cur.expect(Token::Type::LBrace, "'{'");
    std::vector<std::pair<UserId, UserId>> pairs;
    while (!cur.accept(Token::Type::RBrace)) {
      cur.expect(Token::Type::LParen, "'(' or '}'");
      Token u = cur.expect(Token::Type::Ident, "user name");
      UserId a = st.resolve_user(u.text, cur.line(), u.column);
      cur.expect(Token::Type::Comma, "','");
      Token v = cur.expect(Token::Type::Ident, "user name");
      UserId b = st.resolve_user(v.text, cur.line(), v.column);
      cur.expect(Token::Type::RParen, "')'");
      pairs.emplace_back(a, b);
    }
    cur.expect_done();
    st.doc.relations.emplace_back(
        name.text, UserRelation::explicit_pairs(std::move(pairs), name.text));
    return;
  }
  if (head.text == "constraint") {
    Token kw = cur.expect(Token::Type::Ident, "'eq', 'ne' or 'rel'");
    UserRelation relation = UserRelation::diagonal();
    if (kw.text == "eq") {
      relation = UserRelation::diagonal();
    } else if (kw.text == "ne") {
      relation = UserRelation::not_diagonal();
    } else if (kw.text == "rel") {
      Token name = cur.expect(Token::Type::Ident, "relation name");
      const UserRelation* named = st.find_relation(name.text);
      if (!named)
        throw ParseError(cur.line(), name.column,
                         "undefined relation '" + name.text + "'");
      relation = *named;
    } else {
      throw ParseError(cur.line(), kw.column, "expected 'eq', 'ne' or 'rel'");
    }
    cur.expect(Token::Type::LParen, "'('");
    std::vector<StepId> scope1 = parse_scope(cur, st);
    cur.expect(Token::Type::Comma, "','");
    std::vector<StepId> scope2 = parse_scope(cur, st);
    cur.expect(Token::Type::RParen, "')'");
    cur.expect_done();
    st.doc.constraints.push_back(
        Constraint(std::move(relation), std::move(scope1), std::move(scope2)));
    return;
  }
  if (head.text == "formula") {
    if (st.saw_edges)
      throw ParseError(cur.line(), head_col,
                       "a document defines edges or a formula, not both");
    if (st.doc.formula)
      throw ParseError(cur.line(), head_col, "duplicate formula");
    WorkflowFormula f = parse_formula_xor(cur, st);
    cur.expect_done();
    st.doc.formula = std::move(f);
    return;
  }
  throw ParseError(cur.line(), head_col,
                   "unknown section '" + head.text + "'");
}

}  // namespace dsl_detail

/// Parse a `.wsp` document. Undefined references and structural mistakes are
/// reported as ParseError with a 1-based line and column.
inline SchemaDocument parse(std::string_view text) {
  dsl_detail::ParseState st;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  while (offset <= text.size()) {
    const std::size_t eol = text.find('\n', offset);
    const std::string_view line =
        text.substr(offset, eol == std::string_view::npos ? std::string_view::npos
                                                          : eol - offset);
    ++line_no;
    auto tokens = dsl_detail::lex_line(line, line_no);
    if (!tokens.empty()) {
      dsl_detail::TokenCursor cur(std::move(tokens), line_no, line.size() + 1);
      try {
        dsl_detail::parse_section(cur, st);
      } catch (const ValidationError& e) {
        // Structural mistakes inside factories (duplicate formula leaves,
        // empty scopes) surface with the line position.
        throw ParseError(line_no, 1, e.what());
      }
    }
    if (eol == std::string_view::npos) break;
    offset = eol + 1;
  }
  return std::move(st.doc);
}

// ---------------------------------------------------------------------------
// Canonical serialization
// ---------------------------------------------------------------------------

namespace dsl_detail {

inline std::vector<std::string> sorted_names(const SymbolTable& table) {
  std::vector<std::string> out;
  out.reserve(table.size());
  for (std::uint32_t i = 0; i < table.size(); ++i) out.push_back(table.name(i));
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string scope_text(const std::vector<StepId>& scope,
                              const SymbolTable& steps) {
  std::vector<std::string> names;
  names.reserve(scope.size());
  for (StepId s : scope) names.push_back(steps.name(s.value));
  std::sort(names.begin(), names.end());
  if (names.size() == 1) return names.front();
  std::string out = "{";
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  return out + "}";
}

inline void formula_text_rec(const WorkflowFormula& f, const SymbolTable& steps,
                             std::string& out) {
  using Op = WorkflowFormula::Op;
  if (f.op() == Op::Step) {
    out += steps.name(f.leaf_step().value);
    return;
  }
  const char* sep = f.op() == Op::Serial ? " ; "
                    : f.op() == Op::Parallel ? " par "
                                             : " xor ";
  out += "(";
  for (std::size_t i = 0; i < f.children().size(); ++i) {
    if (i) out += sep;
    formula_text_rec(f.children()[i], steps, out);
  }
  out += ")";
}

}  // namespace dsl_detail

inline std::string formula_text(const WorkflowFormula& f,
                                const SymbolTable& steps) {
  std::string out;
  dsl_detail::formula_text_rec(f, steps, out);
  return out;
}

inline std::string constraint_text(const Constraint& c,
                                   const SymbolTable& steps) {
  std::string head;
  switch (c.relation().kind()) {
    case UserRelation::Kind::Diagonal:
      head = "eq";
      break;
    case UserRelation::Kind::NotDiagonal:
      head = "ne";
      break;
    case UserRelation::Kind::Explicit:
      if (c.relation().label().empty())
        throw ContractViolation(
            "cannot serialize an explicit relation without a name");
      head = "rel " + c.relation().label();
      break;
  }
  return head + "(" + dsl_detail::scope_text(c.scope1(), steps) + ", " +
         dsl_detail::scope_text(c.scope2(), steps) + ")";
}

/// Canonical text: sections in a fixed order, names sorted, constraints in
/// declaration order, formulas fully parenthesized. Canonical documents
/// re-serialize to the same bytes.
inline std::string serialize(const SchemaDocument& doc) {
  std::ostringstream out;

  auto names = dsl_detail::sorted_names(doc.step_names);
  if (!names.empty()) {
    out << "steps:";
    for (const auto& n : names) out << ' ' << n;
    out << '\n';
  }

  if (!doc.edges.empty()) {
    std::vector<std::pair<std::string, std::string>> edges;
    edges.reserve(doc.edges.size());
    for (auto [a, b] : doc.edges)
      edges.emplace_back(doc.step_names.name(a.value),
                         doc.step_names.name(b.value));
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    out << "edges:";
    for (std::size_t i = 0; i < edges.size(); ++i) {
      out << (i ? ", " : " ") << edges[i].first << " -> " << edges[i].second;
    }
    out << '\n';
  }

  auto users = dsl_detail::sorted_names(doc.user_names);
  if (!users.empty()) {
    out << "users:";
    for (const auto& n : users) out << ' ' << n;
    out << '\n';
  }

  {
    std::map<std::string, std::vector<std::string>> by_step;
    for (auto [s, u] : doc.auth)
      by_step[doc.step_names.name(s.value)].push_back(
          doc.user_names.name(u.value));
    for (auto& [step, list] : by_step) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
      out << "auth: " << step << ":";
      for (const auto& u : list) out << ' ' << u;
      out << '\n';
    }
  }

  {
    std::vector<std::pair<std::string, const UserRelation*>> rels;
    rels.reserve(doc.relations.size());
    for (const auto& [name, rel] : doc.relations) rels.emplace_back(name, &rel);
    std::sort(rels.begin(), rels.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [name, rel] : rels) {
      std::vector<std::pair<std::string, std::string>> pairs;
      pairs.reserve(rel->pairs().size());
      for (auto [u, v] : rel->pairs())
        pairs.emplace_back(doc.user_names.name(u.value),
                           doc.user_names.name(v.value));
      std::sort(pairs.begin(), pairs.end());
      out << "relation: " << name << " {";
      for (const auto& [u, v] : pairs) out << " (" << u << ", " << v << ")";
      out << " }\n";
    }
  }

  for (const Constraint& c : doc.constraints)
    out << "constraint: " << constraint_text(c, doc.step_names) << '\n';

  if (doc.formula)
    out << "formula: " << formula_text(*doc.formula, doc.step_names) << '\n';

  return out.str();
}

// ---------------------------------------------------------------------------
// Document -> schema conversions
// ---------------------------------------------------------------------------

/// Deterministic schema from a document without a formula.
inline WorkflowSchema to_schema(const SchemaDocument& doc) {
  if (doc.formula)
    throw ValidationError(
        "document defines a formula; build a conditional schema instead");
  std::vector<StepId> steps;
  steps.reserve(doc.step_names.size());
  for (std::uint32_t i = 0; i < doc.step_names.size(); ++i)
    steps.push_back(StepId{i});
  return WorkflowSchema(doc.step_names, doc.user_names,
                        StepDag(std::move(steps), doc.edges), doc.auth,
                        doc.constraints);
}

/// Conditional schema from a document with a formula. Every declared step
/// must appear in the formula.
inline ConditionalSchema to_conditional(const SchemaDocument& doc) {
  if (!doc.formula)
    throw ValidationError("document has no formula section");
  std::vector<StepId> leaves = doc.formula->leaf_steps();
  std::sort(leaves.begin(), leaves.end());
  for (std::uint32_t i = 0; i < doc.step_names.size(); ++i) {
    if (!std::binary_search(leaves.begin(), leaves.end(), StepId{i}))
      throw ValidationError("declared step '" + doc.step_names.name(i) +
                            "' does not appear in the formula");
  }
  return ConditionalSchema(doc.step_names, doc.user_names, *doc.formula,
                           doc.auth, doc.constraints);
}

// ---------------------------------------------------------------------------
// Result emission: line-oriented key:value text, stable across runs in
// single-threaded mode.
// ---------------------------------------------------------------------------

namespace dsl_detail {

inline void emit_plan(std::ostringstream& out, const Plan& plan,
                      const SymbolTable& steps, const SymbolTable& users) {
  for (auto [s, u] : plan.entries())
    out << "assign: " << steps.name(s.value) << " -> " << users.name(u.value)
        << '\n';
}

inline std::string set_text(const std::vector<StepId>& set,
                            const SymbolTable& steps) {
  std::string out = "{";
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i) out += ", ";
    out += steps.name(set[i].value);
  }
  return out + "}";
}

}  // namespace dsl_detail

inline std::string emit_result(const SolveResult& result,
                               const SymbolTable& steps,
                               const SymbolTable& users) {
  std::ostringstream out;
  out << "status: " << (result.sat() ? "SAT" : "UNSAT") << '\n';
  if (result.witness) dsl_detail::emit_plan(out, *result.witness, steps, users);
  return out.str();
}

inline std::string emit_result(const GrantResult& result,
                               const SymbolTable& steps,
                               const SymbolTable& users) {
  std::ostringstream out;
  out << "decision: " << (result.allowed() ? "ALLOW" : "DENY") << '\n';
  if (result.completion)
    dsl_detail::emit_plan(out, *result.completion, steps, users);
  return out.str();
}

inline std::string emit_result(const OwspResult& result,
                               const SymbolTable& steps,
                               const SymbolTable& users) {
  std::ostringstream out;
  out << "owsp: " << (result.satisfiable ? "SAT" : "UNSAT") << '\n';
  if (result.satisfiable && result.schedule) {
    out << "schedule:";
    for (StepId s : *result.schedule) out << ' ' << steps.name(s.value);
    out << '\n';
  }
  if (!result.satisfiable && result.schedule) {
    out << "counterexample-schedule:";
    for (StepId s : *result.schedule) out << ' ' << steps.name(s.value);
    out << '\n';
  }
  if (result.witness) dsl_detail::emit_plan(out, *result.witness, steps, users);
  return out.str();
}

inline std::string emit_result(const ConditionalReport& report,
                               const SymbolTable& steps) {
  std::ostringstream out;
  for (const auto& entry : report.per_set)
    out << "execution-set: " << dsl_detail::set_text(entry.steps, steps)
        << " -> " << (entry.result.sat() ? "SAT" : "UNSAT") << '\n';
  out << "weak: " << (report.weak ? "true" : "false") << '\n';
  out << "strong: " << (report.strong ? "true" : "false") << '\n';
  return out.str();
}

inline std::string emit_violations(const WorkflowSchema& schema,
                                   const std::vector<bool>& violable,
                                   const ViolationFinding& finding) {
  std::ostringstream out;
  for (std::size_t i = 0; i < violable.size(); ++i)
    out << "constraint: "
        << constraint_text(schema.constraints()[i], schema.step_names())
        << " -> " << (violable[i] ? "violable" : "unviolable") << '\n';
  out << "status: " << (finding.result.sat() ? "SAT" : "UNSAT") << '\n';
  if (finding.violated_constraint) {
    out << "violated: "
        << constraint_text(schema.constraints()[*finding.violated_constraint],
                           schema.step_names())
        << '\n';
  }
  if (finding.result.witness)
    dsl_detail::emit_plan(out, *finding.result.witness, schema.step_names(),
                          schema.user_names());
  return out.str();
}

}  // namespace wsp
