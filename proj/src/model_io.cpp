#include "qualbn/model_io.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "format.hpp"

namespace qualbn {

namespace {

struct Token {
  enum class Kind { Word, String, Punct } kind;
  std::string text;
  std::size_t column;
};

struct LineError {
  std::size_t column;
  std::string message;
};

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

std::vector<Token> lex(std::string_view line) {
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
    if (c == '"') {
      std::string text;
      ++i;
      bool closed = false;
      while (i < line.size()) {
        if (line[i] == '\\' && i + 1 < line.size()) {
          const char e = line[i + 1];
          text.push_back(e == 'n' ? '\n' : e);
          i += 2;
        } else if (line[i] == '"') {
          closed = true;
          ++i;
          break;
        } else {
          text.push_back(line[i++]);
        }
      }
      if (!closed) throw LineError{col, "unterminated string"};
      tokens.push_back({Token::Kind::String, std::move(text), col});
      continue;
    }
    const bool negative_number = c == '-' && i + 1 < line.size() &&
                                 (std::isdigit(static_cast<unsigned char>(line[i + 1])) || line[i + 1] == '.');
    if (word_char(c) || negative_number) {
      std::size_t j = i + (negative_number ? 1 : 0);
      const bool numeric = negative_number || std::isdigit(static_cast<unsigned char>(c)) || c == '.';
      while (j < line.size()) {
        if (word_char(line[j])) {
          ++j;
        } else if (numeric && (line[j] == '+' || line[j] == '-') && (line[j - 1] == 'e' || line[j - 1] == 'E') &&
                   j + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[j + 1]))) {
          ++j;
        } else {
          break;
        }
      }
      tokens.push_back({Token::Kind::Word, std::string(line.substr(i, j - i)), col});
      i = j;
      continue;
    }
    if (line.substr(i, 2) == "->") {
      tokens.push_back({Token::Kind::Punct, "->", col});
      i += 2;
      continue;
    }
    if (std::string_view("[](),:=").find(c) != std::string_view::npos) {
      tokens.push_back({Token::Kind::Punct, std::string(1, c), col});
      ++i;
      continue;
    }
    throw LineError{col, static_cast<unsigned char>(c) >= 0x80 ? std::string("unexpected non-ASCII character")
                                                              : std::string("unexpected character '") + c + "'"};
  }
  return tokens;
}

class Cursor {
 public:
  Cursor(std::vector<Token> tokens, std::size_t end_column) : tokens_(std::move(tokens)), end_(end_column) {}

  bool at_end() const { return pos_ >= tokens_.size(); }
  std::size_t column() const { return at_end() ? end_ : tokens_[pos_].column; }
  std::string found() const { return at_end() ? ", found end of line" : ", found '" + tokens_[pos_].text + "'"; }
  [[noreturn]] void fail(std::string message) const { throw LineError{column(), std::move(message)}; }

  bool peek(Token::Kind kind, std::string_view text) const {
    return !at_end() && tokens_[pos_].kind == kind && tokens_[pos_].text == text;
  }
  bool accept_punct(std::string_view p) {
    if (!peek(Token::Kind::Punct, p)) return false;
    ++pos_;
    return true;
  }
  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) fail("expected '" + std::string(p) + "'" + found());
  }
  bool accept_word(std::string_view w) {
    if (!peek(Token::Kind::Word, w)) return false;
    ++pos_;
    return true;
  }
  void expect_word(std::string_view w) {
    if (!accept_word(w)) fail("expected '" + std::string(w) + "'" + found());
  }
  Token word(std::string_view what) {
    if (at_end() || tokens_[pos_].kind != Token::Kind::Word) fail("expected " + std::string(what) + found());
    return tokens_[pos_++];
  }
  std::string string(std::string_view what) {
    if (at_end() || tokens_[pos_].kind != Token::Kind::String) fail("expected quoted " + std::string(what) + found());
    return tokens_[pos_++].text;
  }
  double number(std::string_view what) {
    const std::size_t col = column();
    auto t = word(what);
    auto v = parse_double(t.text);
    if (!v) throw LineError{col, "malformed probability literal '" + t.text + "'"};
    return *v;
  }

  /// `[a, b, ...]` or `(a, b, ...)` of words; empty lists allowed.
  std::vector<Token> word_list(std::string_view open, std::string_view close, std::string_view what) {
    expect_punct(open);
    std::vector<Token> out;
    if (accept_punct(close)) return out;
    do out.push_back(word(what));
    while (accept_punct(","));
    expect_punct(close);
    return out;
  }

  void finish() {
    if (!at_end()) fail("unexpected '" + tokens_[pos_].text + "'");
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t end_;
};

struct RawRow {
  std::size_t line;
  std::vector<Token> key;
  std::vector<double> probs;   // cpt rows
  std::optional<Token> state;  // det rows
};

struct RawNode {
  std::size_t line;
  NodeDef def;
  enum class Section { None, Cpt, NoisyOr, Det } section = Section::None;
  NoisyOr noisy;
  std::vector<RawRow> rows;
  bool broken_row = false;
};

std::vector<std::string> texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

}  // namespace

NativeDocument parse_native(std::string_view text) {
  NativeDocument doc;
  std::vector<Diagnostic> diagnostics;
  std::vector<RawNode> nodes;
  std::set<std::string> seen_meta;

  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;

    try {
      auto tokens = lex(line);
      if (!tokens.empty()) {
        Cursor c(std::move(tokens), line.size() + 1);
        if (c.accept_word("network") || c.accept_word("description") || c.accept_word("provenance")) {
          // The keyword was consumed; recover it from the line start.
          const auto kw = lex(line).front().text;
          if (!nodes.empty()) throw LineError{1, "'" + kw + "' must precede the first node"};
          if (!seen_meta.insert(kw).second) throw LineError{1, "'" + kw + "' given twice"};
          auto value = c.string(kw);
          c.finish();
          if (kw == "network") doc.def.metadata.name = value;
          else if (kw == "description") doc.def.metadata.description = value;
          else doc.def.metadata.provenance = value;
        } else if (c.accept_word("node")) {
          RawNode n;
          n.line = line_no;
          n.def.id = c.word("node id").text;
          n.def.display_name = c.string("display name");
          c.expect_word("states");
          n.def.states = texts(c.word_list("[", "]", "state name"));
          c.expect_word("parents");
          n.def.parents = texts(c.word_list("[", "]", "parent id"));
          c.finish();
          nodes.push_back(std::move(n));
        } else if (c.accept_word("cpt") || c.accept_word("det")) {
          const bool det = lex(line).front().text == "det";
          c.expect_punct(":");
          c.finish();
          if (nodes.empty()) throw LineError{1, "table section outside a node"};
          auto& n = nodes.back();
          if (n.section != RawNode::Section::None) throw LineError{1, "node " + n.def.id + " already has a local structure"};
          n.section = det ? RawNode::Section::Det : RawNode::Section::Cpt;
        } else if (c.accept_word("noisyor")) {
          c.expect_punct(":");
          if (nodes.empty()) throw LineError{1, "noisyor section outside a node"};
          auto& n = nodes.back();
          if (n.section != RawNode::Section::None) throw LineError{1, "node " + n.def.id + " already has a local structure"};
          c.expect_word("leak");
          c.expect_punct("=");
          n.noisy.leak = c.number("leak probability");
          c.expect_word("p");
          c.expect_punct("=");
          c.expect_punct("[");
          if (!c.accept_punct("]")) {
            do n.noisy.activation.push_back(c.number("activation probability"));
            while (c.accept_punct(","));
            c.expect_punct("]");
          }
          c.finish();
          n.section = RawNode::Section::NoisyOr;
        } else if (c.peek(Token::Kind::Punct, "(")) {
          if (nodes.empty() || (nodes.back().section != RawNode::Section::Cpt &&
                                nodes.back().section != RawNode::Section::Det))
            c.fail("table row outside a cpt: or det: section");
          auto& n = nodes.back();
          RawRow row;
          row.line = line_no;
          row.key = c.word_list("(", ")", "parent state");
          c.expect_punct("->");
          if (n.section == RawNode::Section::Cpt) {
            c.expect_punct("(");
            do row.probs.push_back(c.number("probability"));
            while (c.accept_punct(","));
            c.expect_punct(")");
          } else {
            row.state = c.word("child state");
          }
          c.finish();
          n.rows.push_back(std::move(row));
        } else {
          c.fail("expected 'network', 'description', 'provenance', 'node', a section or a table row" + c.found());
        }
      }
    } catch (const LineError& e) {
      diagnostics.push_back({line_no, e.column, e.message});
      if (!nodes.empty() && nodes.back().section != RawNode::Section::None) nodes.back().broken_row = true;
    }
    if (end == text.size()) break;
  }

  // Resolve table rows now that every node's states are known.
  std::map<std::string, const RawNode*> by_id;
  for (const auto& n : nodes) by_id.emplace(n.def.id, &n);

  for (auto& n : nodes) {
    NodeDef def = n.def;
    std::vector<std::size_t> row_lines;
    if (n.section == RawNode::Section::None) {
      diagnostics.push_back({n.line, 0, "node " + def.id + " has no cpt:, noisyor: or det: section"});
    } else if (n.section == RawNode::Section::NoisyOr) {
      def.local = n.noisy;
    } else {
      std::vector<const RawNode*> parents;
      bool resolvable = true;
      for (const auto& p : def.parents) {
        auto it = by_id.find(p);
        if (it == by_id.end() || p == def.id) {
          resolvable = false;
          break;
        }
        parents.push_back(it->second);
      }
      std::size_t rows = 1;
      for (auto* p : parents) rows *= p->def.states.size();
      const std::size_t states = def.states.size();

      if (!resolvable) {
        // validate_network reports the dangling or self parent.
        def.local = ExplicitCpt{CptTable(0, static_cast<Eigen::Index>(states))};
      } else {
        CptTable table = CptTable::Constant(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(states), 0.0);
        std::vector<std::size_t> outcome(rows, 0);
        std::vector<bool> filled(rows, false);
        row_lines.assign(rows, n.line);
        for (const auto& row : n.rows) {
          if (row.key.size() != parents.size()) {
            diagnostics.push_back({row.line, row.key.empty() ? 0 : row.key.front().column,
                                   "row has " + std::to_string(row.key.size()) + " parent states, expected " +
                                       std::to_string(parents.size())});
            continue;
          }
          std::size_t r = 0;
          bool ok = true;
          for (std::size_t k = 0; k < parents.size(); ++k) {
            const auto& ps = parents[k]->def.states;
            auto it = std::find(ps.begin(), ps.end(), row.key[k].text);
            if (it == ps.end()) {
              diagnostics.push_back({row.line, row.key[k].column,
                                     "unknown state " + row.key[k].text + " of parent " + parents[k]->def.id});
              ok = false;
              break;
            }
            r = r * ps.size() + static_cast<std::size_t>(it - ps.begin());
          }
          if (!ok) continue;
          if (filled[r]) {
            diagnostics.push_back({row.line, 0, "duplicate row for this parent assignment"});
            continue;
          }
          if (n.section == RawNode::Section::Cpt) {
            if (row.probs.size() != states) {
              diagnostics.push_back({row.line, 0, std::to_string(row.probs.size()) + " probabilities for " +
                                                      std::to_string(states) + " states"});
              continue;
            }
            for (std::size_t s = 0; s < states; ++s)
              table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) = row.probs[s];
          } else {
            auto it = std::find(def.states.begin(), def.states.end(), row.state->text);
            if (it == def.states.end()) {
              diagnostics.push_back({row.line, row.state->column, "unknown state " + row.state->text + " of node " + def.id});
              continue;
            }
            outcome[r] = static_cast<std::size_t>(it - def.states.begin());
          }
          filled[r] = true;
          row_lines[r] = row.line;
        }
        for (std::size_t r = 0; r < rows && !n.broken_row; ++r)
          if (!filled[r]) {
            std::string key;
            std::size_t rest = r;
            std::vector<std::string> names(parents.size());
            for (std::size_t k = parents.size(); k-- > 0;) {
              names[k] = parents[k]->def.states[rest % parents[k]->def.states.size()];
              rest /= parents[k]->def.states.size();
            }
            for (std::size_t k = 0; k < names.size(); ++k) key += (k ? ", " : "") + names[k];
            diagnostics.push_back({n.line, 0, "node " + def.id + ": missing row (" + key + ")"});
          }
        if (n.section == RawNode::Section::Cpt)
          def.local = ExplicitCpt{std::move(table)};
        else
          def.local = Deterministic{std::move(outcome)};
      }
    }
    doc.def.nodes.push_back(std::move(def));
    doc.node_lines.push_back(n.line);
    doc.row_lines.push_back(std::move(row_lines));
  }

  if (!diagnostics.empty()) {
    std::stable_sort(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
    throw ParseError(std::move(diagnostics));
  }
  return doc;
}

Network read_native(std::string_view text) {
  auto doc = parse_native(text);
  auto violations = validate_network(doc.def);
  if (!violations.empty()) {
    std::map<std::string, std::size_t> node_index;
    for (std::size_t i = 0; i < doc.def.nodes.size(); ++i) node_index.emplace(doc.def.nodes[i].id, i);
    for (auto& v : violations) {
      const std::string& who = v.node.empty() ? (v.nodes.empty() ? v.node : v.nodes.front()) : v.node;
      auto it = node_index.find(who);
      if (it == node_index.end()) continue;
      v.line = doc.node_lines[it->second];
      const auto& rows = doc.row_lines[it->second];
      if (v.row && *v.row < rows.size()) v.line = rows[*v.row];
    }
    throw ValidationError(std::move(violations));
  }
  return Network::build(std::move(doc.def));
}

// ---------------------------------------------------------------------------

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out + "\"";
}

std::string list(const std::vector<std::string>& items, const char* open, const char* close) {
  std::string out = open;
  for (std::size_t k = 0; k < items.size(); ++k) out += (k ? ", " : "") + items[k];
  return out + close;
}

/// Nine significant digits when those re-read to exactly this row, otherwise
/// the shortest exact representation of each entry.
std::vector<std::string> format_row(std::span<const double> row) {
  std::vector<std::string> nine;
  std::vector<double> reread;
  for (double p : row) {
    nine.push_back(format_general(p, 9));
    reread.push_back(*parse_double(nine.back()));
  }
  normalize_row(reread);
  if (std::equal(reread.begin(), reread.end(), row.begin())) return nine;
  std::vector<std::string> exact;
  for (double p : row) exact.push_back(format_shortest(p));
  return exact;
}

std::string format_value(double p) {
  auto nine = format_general(p, 9);
  return *parse_double(nine) == p ? nine : format_shortest(p);
}

}  // namespace

std::string write_native(const Network& net) {
  std::ostringstream out;
  const auto& meta = net.metadata();
  out << "network " << quote(meta.name) << "\n";
  out << "description " << quote(meta.description) << "\n";
  out << "provenance " << quote(meta.provenance) << "\n";

  for (auto i : net.topological_order()) {
    const auto& node = net.node(i);
    out << "\nnode " << node.id << " " << quote(node.display_name) << " states " << list(node.states, "[", "]")
        << " parents " << list(node.parents, "[", "]") << "\n";

    auto key = [&](std::size_t r) {
      const auto assignment = net.parent_assignment(i, r);
      std::vector<std::string> names;
      for (std::size_t k = 0; k < assignment.size(); ++k)
        names.push_back(net.node(net.parents(i)[k]).states[assignment[k]]);
      return list(names, "(", ")");
    };

    if (const auto* noisy = std::get_if<NoisyOr>(&node.local)) {
      std::vector<std::string> ps;
      for (double p : noisy->activation) ps.push_back(format_value(p));
      out << "noisyor: leak=" << format_value(noisy->leak) << " p=" << list(ps, "[", "]") << "\n";
    } else if (const auto* det = std::get_if<Deterministic>(&node.local)) {
      out << "det:\n";
      for (std::size_t r = 0; r < det->outcome.size(); ++r)
        out << "  " << key(r) << " -> " << node.states[det->outcome[r]] << "\n";
    } else {
      const auto& table = std::get<ExplicitCpt>(node.local).table;
      out << "cpt:\n";
      for (Eigen::Index r = 0; r < table.rows(); ++r) {
        auto values = format_row(std::span<const double>(table.row(r).data(), static_cast<std::size_t>(table.cols())));
        out << "  " << key(static_cast<std::size_t>(r)) << " -> " << list(values, "(", ")") << "\n";
      }
    }
  }
  return out.str();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Network load_network(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  if (path.extension() == ".xdsl") return read_xdsl(text);
  return read_native(text);
}

}  // namespace qualbn
