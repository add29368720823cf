#include "qualbn/qualspec.hpp"

#include <cctype>
#include <set>

#include "format.hpp"

namespace qualbn {

std::string_view to_symbol(Sign sign) {
  switch (sign) {
    case Sign::Positive: return "+";
    case Sign::Negative: return "-";
    case Sign::Zero: return "0";
    case Sign::Ambiguous: return "ambiguous";
  }
  return "?";
}

std::string_view to_symbol(Relation relation) {
  switch (relation) {
    case Relation::Less: return "<";
    case Relation::Greater: return ">";
    case Relation::LessEqual: return "<=";
    case Relation::GreaterEqual: return ">=";
    case Relation::Approx: return "~";
  }
  return "?";
}

std::string_view kind_name(const AssertionBody& body) {
  constexpr std::string_view names[] = {"direction", "compare", "range",    "argmax",
                                        "invariant", "sign",    "magnitude"};
  return names[body.index()];
}

const Scenario* AssertionSuite::find_scenario(std::string_view name) const {
  for (const auto& s : scenarios)
    if (s.name == name) return &s;
  return nullptr;
}

namespace {

// ---------------------------------------------------------------------------
// Lexer: one statement per line.

struct Token {
  enum class Kind { Word, Punct } kind;
  std::string text;
  std::size_t column;
};

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

struct LineError {
  std::size_t column;
  std::string message;
};

std::vector<Token> lex(std::string_view line, std::size_t& error_column, std::string& error) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == '#') break;
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    const std::size_t col = i + 1;
    if (word_char(c)) {
      std::size_t j = i;
      const bool numeric = std::isdigit(static_cast<unsigned char>(c)) || c == '.';
      while (j < line.size()) {
        if (word_char(line[j])) {
          ++j;
        } else if (numeric && (line[j] == '+' || line[j] == '-') && j > i &&
                   (line[j - 1] == 'e' || line[j - 1] == 'E') && j + 1 < line.size() &&
                   std::isdigit(static_cast<unsigned char>(line[j + 1]))) {
          ++j;
        } else {
          break;
        }
      }
      tokens.push_back({Token::Kind::Word, std::string(line.substr(i, j - i)), col});
      i = j;
      continue;
    }
    auto two = line.substr(i, 2);
    if (two == "<=" || two == ">=" || two == "->") {
      tokens.push_back({Token::Kind::Punct, std::string(two), col});
      i += 2;
      continue;
    }
    if (std::string_view(":=,()[]<>~+-").find(c) != std::string_view::npos) {
      tokens.push_back({Token::Kind::Punct, std::string(1, c), col});
      ++i;
      continue;
    }
    error_column = col;
    if (static_cast<unsigned char>(c) >= 0x80)
      error = "unexpected non-ASCII character";
    else
      error = std::string("unexpected character '") + c + "'";
    return tokens;
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Statement parser.

class LineParser {
 public:
  LineParser(std::vector<Token> tokens, std::size_t line_length)
      : tokens_(std::move(tokens)), end_column_(line_length + 1) {}

  bool at_end() const { return pos_ >= tokens_.size(); }
  std::size_t column() const { return at_end() ? end_column_ : tokens_[pos_].column; }

  [[noreturn]] void fail(std::string message) const { throw LineError{column(), std::move(message)}; }
  [[noreturn]] void fail_at(std::size_t col, std::string message) const {
    throw LineError{col, std::move(message)};
  }

  bool peek_word(std::string_view w) const {
    return !at_end() && tokens_[pos_].kind == Token::Kind::Word && tokens_[pos_].text == w;
  }
  bool peek_punct(std::string_view p) const {
    return !at_end() && tokens_[pos_].kind == Token::Kind::Punct && tokens_[pos_].text == p;
  }
  bool accept_word(std::string_view w) {
    if (!peek_word(w)) return false;
    ++pos_;
    return true;
  }
  bool accept_punct(std::string_view p) {
    if (!peek_punct(p)) return false;
    ++pos_;
    return true;
  }
  void expect_word(std::string_view w) {
    if (!accept_word(w)) fail("expected '" + std::string(w) + "'" + found());
  }
  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) fail("expected '" + std::string(p) + "'" + found());
  }

  std::string name(std::string_view what) {
    if (at_end() || tokens_[pos_].kind != Token::Kind::Word) fail("expected " + std::string(what) + found());
    return tokens_[pos_++].text;
  }

  double probability(std::string_view what) {
    const std::size_t col = column();
    if (at_end() || tokens_[pos_].kind != Token::Kind::Word)
      fail("expected " + std::string(what) + found());
    const std::string& text = tokens_[pos_++].text;
    auto value = parse_double(text);
    if (!value) fail_at(col, "malformed probability literal '" + text + "'");
    return *value;
  }

  double epsilon() {
    const std::size_t col = column();
    double e = probability("epsilon value");
    if (!(e > 0.0 && e < 0.5)) fail_at(col, "epsilon " + format_shortest(e) + " must lie in (0, 0.5)");
    return e;
  }

  std::optional<double> optional_epsilon() {
    if (accept_word("eps")) return epsilon();
    return std::nullopt;
  }

  NodeState node_state() {
    NodeState ns;
    ns.node = name("node id");
    expect_punct("=");
    ns.state = name("state name");
    return ns;
  }

  void finish() {
    if (!at_end()) fail("unexpected '" + tokens_[pos_].text + "'");
  }

  std::string found() const {
    return at_end() ? std::string(", found end of line") : ", found '" + tokens_[pos_].text + "'";
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t end_column_;
};

Relation parse_relation(LineParser& p, bool magnitude) {
  if (p.accept_punct("<=")) {
    if (magnitude) p.fail("magnitude relation must be '<' or '>'");
    return Relation::LessEqual;
  }
  if (p.accept_punct(">=")) {
    if (magnitude) p.fail("magnitude relation must be '<' or '>'");
    return Relation::GreaterEqual;
  }
  if (p.accept_punct("<")) return Relation::Less;
  if (p.accept_punct(">")) return Relation::Greater;
  if (p.accept_punct("~")) {
    if (magnitude) p.fail("magnitude relation must be '<' or '>'");
    return Relation::Approx;
  }
  p.fail("expected relation" + p.found());
}

AssertionBody parse_assertion(LineParser& p) {
  const std::size_t kind_col = p.column();
  const std::string kind = p.name("assertion kind");

  if (kind == "direction") {
    Direction a;
    a.target = p.node_state();
    p.expect_word("under");
    a.scenario = p.name("scenario name");
    if (p.accept_word("vs")) a.baseline = p.name("baseline scenario name");
    if (p.accept_word("increases"))
      a.expected = Direction::Expect::Increases;
    else if (p.accept_word("decreases"))
      a.expected = Direction::Expect::Decreases;
    else if (p.accept_word("unchanged"))
      a.expected = Direction::Expect::Unchanged;
    else
      p.fail("expected 'increases', 'decreases' or 'unchanged'" + p.found());
    a.epsilon = p.optional_epsilon();
    return a;
  }
  if (kind == "compare") {
    Compare a;
    p.expect_word("P");
    p.expect_punct("(");
    a.target_a = p.node_state();
    p.expect_punct(")");
    p.expect_word("under");
    a.scenario_a = p.name("scenario name");
    a.relation = parse_relation(p, false);
    a.epsilon = p.optional_epsilon();
    a.target_b = a.target_a;
    if (p.accept_word("P")) {
      p.expect_punct("(");
      a.target_b = p.node_state();
      p.expect_punct(")");
    }
    p.expect_word("under");
    a.scenario_b = p.name("scenario name");
    return a;
  }
  if (kind == "range") {
    Range a;
    a.target = p.node_state();
    p.expect_word("under");
    a.scenario = p.name("scenario name");
    p.expect_word("in");
    p.expect_punct("[");
    const std::size_t lo_col = p.column();
    a.lo = p.probability("lower bound");
    p.expect_punct(",");
    const std::size_t hi_col = p.column();
    a.hi = p.probability("upper bound");
    p.expect_punct("]");
    if (a.lo < 0.0 || a.lo > 1.0) p.fail_at(lo_col, "lower bound must lie in [0, 1]");
    if (a.hi < 0.0 || a.hi > 1.0) p.fail_at(hi_col, "upper bound must lie in [0, 1]");
    if (a.lo > a.hi) p.fail_at(lo_col, "lo > hi");
    return a;
  }
  if (kind == "argmax") {
    Argmax a;
    a.node = p.name("node id");
    p.expect_word("under");
    a.scenario = p.name("scenario name");
    p.expect_word("is");
    a.state = p.name("state name");
    return a;
  }
  if (kind == "invariant") {
    Invariant a;
    a.node = p.name("node id");
    p.expect_word("under");
    a.scenario = p.name("scenario name");
    a.epsilon = p.optional_epsilon();
    a.require_d_separation = p.accept_word("dsep");
    return a;
  }
  if (kind == "sign") {
    ArcSign a;
    a.parent = p.name("parent node id");
    p.expect_punct("->");
    a.child = p.name("child node id");
    if (p.accept_punct("+"))
      a.expected = Sign::Positive;
    else if (p.accept_punct("-"))
      a.expected = Sign::Negative;
    else if (p.accept_word("0"))
      a.expected = Sign::Zero;
    else if (p.accept_word("ambiguous"))
      a.expected = Sign::Ambiguous;
    else
      p.fail("expected '+', '-', '0' or 'ambiguous'" + p.found());
    return a;
  }
  if (kind == "magnitude") {
    Magnitude a;
    a.target = p.node_state();
    p.expect_word("under");
    a.scenario_a = p.name("scenario name");
    a.relation = parse_relation(p, true);
    a.epsilon = p.optional_epsilon();
    p.expect_word("under");
    a.scenario_b = p.name("scenario name");
    return a;
  }
  p.fail_at(kind_col, "unknown assertion kind '" + kind + "'");
}

std::vector<std::string> referenced_scenarios(const AssertionBody& body) {
  return std::visit(
      [](const auto& a) -> std::vector<std::string> {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, Direction>) return {a.scenario, a.baseline};
        else if constexpr (std::is_same_v<T, Compare>) return {a.scenario_a, a.scenario_b};
        else if constexpr (std::is_same_v<T, Magnitude>) return {a.scenario_a, a.scenario_b};
        else if constexpr (std::is_same_v<T, ArcSign>) return {};
        else return {a.scenario};
      },
      body);
}

}  // namespace

AssertionSuite parse_suite(std::string_view text) {
  AssertionSuite suite;
  std::vector<Diagnostic> diagnostics;
  std::map<std::string, std::size_t> scenario_lines;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;

    std::size_t error_column = 0;
    std::string error;
    auto tokens = lex(line, error_column, error);
    if (!error.empty()) {
      diagnostics.push_back({line_no, error_column, error});
      continue;
    }
    if (tokens.empty()) continue;

    LineParser p(std::move(tokens), line.size());
    try {
      if (p.accept_word("suite")) {
        suite.name = p.name("suite name");
        p.finish();
      } else if (p.accept_word("epsilon")) {
        suite.default_epsilon = p.epsilon();
        p.finish();
      } else if (p.accept_word("scenario")) {
        const std::size_t name_col = p.column();
        Scenario s;
        s.name = p.name("scenario name");
        p.expect_punct(":");
        if (s.name == kPriorScenario) p.fail_at(name_col, "scenario name 'prior' is reserved");
        if (scenario_lines.contains(s.name))
          p.fail_at(name_col, "duplicate scenario name '" + s.name + "' (first declared on line " +
                                  std::to_string(scenario_lines[s.name]) + ")");
        if (!p.at_end()) {
          do {
            const std::size_t col = p.column();
            auto ns = p.node_state();
            if (!s.evidence.emplace(ns.node, ns.state).second)
              p.fail_at(col, "node " + ns.node + " observed twice in scenario " + s.name);
          } while (p.accept_punct(","));
        }
        p.finish();
        scenario_lines[s.name] = line_no;
        suite.scenarios.push_back(std::move(s));
      } else if (p.accept_word("assert")) {
        Assertion a{parse_assertion(p), line_no};
        p.finish();
        suite.assertions.push_back(std::move(a));
      } else {
        p.fail("expected 'scenario', 'assert', 'suite' or 'epsilon'" + p.found());
      }
    } catch (const LineError& e) {
      diagnostics.push_back({line_no, e.column, e.message});
    }
    if (end == text.size()) break;
  }

  for (const auto& a : suite.assertions)
    for (const auto& name : referenced_scenarios(a.body))
      if (name != kPriorScenario && !scenario_lines.contains(name))
        diagnostics.push_back({a.line, 0, "undeclared scenario '" + name + "'"});

  if (!diagnostics.empty()) {
    std::stable_sort(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& x, const Diagnostic& y) { return x.line < y.line; });
    throw ParseError(std::move(diagnostics));
  }
  return suite;
}

// ---------------------------------------------------------------------------

namespace {

std::string eps_suffix(const std::optional<double>& eps) {
  return eps ? " eps " + format_shortest(*eps) : "";
}

std::string ns(const NodeState& t) { return t.node + "=" + t.state; }

}  // namespace

std::string serialize_assertion(const AssertionBody& body) {
  return std::visit(
      [](const auto& a) -> std::string {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, Direction>) {
          std::string text = "assert direction " + ns(a.target) + " under " + a.scenario;
          if (a.baseline != kPriorScenario) text += " vs " + a.baseline;
          switch (a.expected) {
            case Direction::Expect::Increases: text += " increases"; break;
            case Direction::Expect::Decreases: text += " decreases"; break;
            case Direction::Expect::Unchanged: text += " unchanged"; break;
          }
          return text + eps_suffix(a.epsilon);
        } else if constexpr (std::is_same_v<T, Compare>) {
          std::string text = "assert compare P(" + ns(a.target_a) + ") under " + a.scenario_a + " " +
                             std::string(to_symbol(a.relation)) + eps_suffix(a.epsilon);
          if (!(a.target_b == a.target_a)) text += " P(" + ns(a.target_b) + ")";
          return text + " under " + a.scenario_b;
        } else if constexpr (std::is_same_v<T, Range>) {
          return "assert range " + ns(a.target) + " under " + a.scenario + " in [" +
                 format_shortest(a.lo) + ", " + format_shortest(a.hi) + "]";
        } else if constexpr (std::is_same_v<T, Argmax>) {
          return "assert argmax " + a.node + " under " + a.scenario + " is " + a.state;
        } else if constexpr (std::is_same_v<T, Invariant>) {
          return "assert invariant " + a.node + " under " + a.scenario + eps_suffix(a.epsilon) +
                 (a.require_d_separation ? " dsep" : "");
        } else if constexpr (std::is_same_v<T, ArcSign>) {
          return "assert sign " + a.parent + " -> " + a.child + " " + std::string(to_symbol(a.expected));
        } else {
          return "assert magnitude " + ns(a.target) + " under " + a.scenario_a + " " +
                 std::string(to_symbol(a.relation)) + eps_suffix(a.epsilon) + " under " + a.scenario_b;
        }
      },
      body);
}

std::string serialize_suite(const AssertionSuite& suite) {
  std::string text = "suite " + suite.name + "\n";
  text += "epsilon " + format_shortest(suite.default_epsilon) + "\n";
  for (const auto& s : suite.scenarios) {
    text += "scenario " + s.name + ":";
    bool first = true;
    for (const auto& [node, state] : s.evidence) {
      text += first ? " " : ", ";
      first = false;
      text += node + "=" + state;
    }
    text += "\n";
  }
  for (const auto& a : suite.assertions) text += serialize_assertion(a.body) + "\n";
  return text;
}

// ---------------------------------------------------------------------------

BoundSuite bind_suite(const AssertionSuite& suite, const Network& net) {
  std::vector<Diagnostic> diagnostics;
  BoundSuite bound{suite, {}};
  bound.evidence.emplace(std::string(kPriorScenario), Evidence{});

  auto node_ok = [&](const std::string& id, std::size_t line) -> std::optional<std::size_t> {
    auto i = net.find(id);
    if (!i) diagnostics.push_back({line, 0, "unknown node " + id});
    return i;
  };
  auto state_ok = [&](const std::string& id, const std::string& state, std::size_t line) {
    if (auto i = node_ok(id, line); i && !net.find_state(*i, state))
      diagnostics.push_back({line, 0, "unknown state " + state + " of node " + id});
  };

  for (const auto& s : suite.scenarios) {
    Evidence evidence;
    bool ok = true;
    for (const auto& [id, state] : s.evidence) {
      auto i = net.find(id);
      if (!i) {
        diagnostics.push_back({0, 0, "scenario " + s.name + ": unknown node " + id});
        ok = false;
        continue;
      }
      auto st = net.find_state(*i, state);
      if (!st) {
        diagnostics.push_back({0, 0, "scenario " + s.name + ": unknown state " + state + " of node " + id});
        ok = false;
        continue;
      }
      evidence[*i] = *st;
    }
    if (ok) bound.evidence.emplace(s.name, std::move(evidence));
  }

  for (const auto& a : suite.assertions) {
    const std::size_t line = a.line;
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Direction> || std::is_same_v<T, Range> ||
                        std::is_same_v<T, Magnitude>) {
            state_ok(x.target.node, x.target.state, line);
          } else if constexpr (std::is_same_v<T, Compare>) {
            state_ok(x.target_a.node, x.target_a.state, line);
            if (!(x.target_b == x.target_a)) state_ok(x.target_b.node, x.target_b.state, line);
          } else if constexpr (std::is_same_v<T, Argmax>) {
            state_ok(x.node, x.state, line);
          } else if constexpr (std::is_same_v<T, Invariant>) {
            node_ok(x.node, line);
          } else {
            auto p = node_ok(x.parent, line);
            auto c = node_ok(x.child, line);
            if (p && c && !net.has_arc(*p, *c))
              diagnostics.push_back({line, 0, "no arc " + x.parent + " -> " + x.child});
          }
        },
        a.body);
  }

  if (!diagnostics.empty()) throw BindError(std::move(diagnostics));
  return bound;
}

}  // namespace qualbn
