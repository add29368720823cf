#include "qualbn/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "format.hpp"

namespace qualbn {

std::string Diagnostic::to_string() const {
  std::ostringstream out;
  if (line > 0) {
    out << "line " << line;
    if (column > 0) out << ", column " << column;
    out << ": ";
  }
  out << message;
  return out.str();
}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diagnostics) {
  std::string text;
  for (const auto& d : diagnostics) {
    if (!text.empty()) text += "\n";
    text += d.to_string();
  }
  return text.empty() ? std::string("no diagnostics") : text;
}

std::string join_violations(const std::vector<Violation>& violations) {
  std::string text;
  for (const auto& v : violations) {
    if (!text.empty()) text += "\n";
    text += v.to_string();
  }
  return text;
}

}  // namespace

DiagnosticError::DiagnosticError(std::vector<Diagnostic> diagnostics)
    : Error(join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

std::string_view to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::Cycle: return "cycle";
    case Violation::Kind::StateCount: return "state count";
    case Violation::Kind::DuplicateState: return "duplicate state";
    case Violation::Kind::DuplicateParent: return "duplicate parent";
    case Violation::Kind::SelfParent: return "self parent";
    case Violation::Kind::DanglingParent: return "dangling parent";
    case Violation::Kind::DuplicateNode: return "duplicate node";
    case Violation::Kind::TableShape: return "table shape";
    case Violation::Kind::BadProbability: return "bad probability";
    case Violation::Kind::RowSum: return "row sum";
    case Violation::Kind::NoisyOrShape: return "noisy-or";
    case Violation::Kind::DeterministicShape: return "deterministic";
  }
  return "unknown";
}

std::string Violation::to_string() const {
  std::string text = line > 0 ? "line " + std::to_string(line) + ": " : "";
  text += qualbn::to_string(kind);
  if (!node.empty()) text += " [" + node + "]";
  if (row) text += " row " + std::to_string(*row);
  text += ": " + detail;
  return text;
}

// ---------------------------------------------------------------------------
// Graph helpers shared by validation and topological sorting.

namespace {

struct Graph {
  std::vector<std::vector<std::size_t>> parents;  // resolvable parents only
  std::vector<std::string> dangling;              // "node -> missing parent"
};

Graph resolve_graph(const NetworkDef& def) {
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < def.nodes.size(); ++i) index.emplace(def.nodes[i].id, i);
  Graph g;
  g.parents.resize(def.nodes.size());
  for (std::size_t i = 0; i < def.nodes.size(); ++i) {
    std::set<std::size_t> seen;
    for (const auto& p : def.nodes[i].parents) {
      auto it = index.find(p);
      if (it == index.end()) {
        g.dangling.push_back(def.nodes[i].id + " -> " + p);
        continue;
      }
      if (it->second == i || !seen.insert(it->second).second) continue;
      g.parents[i].push_back(it->second);
    }
  }
  return g;
}

/// Kahn's algorithm, lowest declaration index first. Nodes on or below a cycle
/// are left out.
std::vector<std::size_t> kahn(const std::vector<std::vector<std::size_t>>& parents) {
  const std::size_t n = parents.size();
  std::vector<std::size_t> pending(n, 0);
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t i = 0; i < n; ++i) {
    pending[i] = parents[i].size();
    for (auto p : parents[i]) children[p].push_back(i);
  }
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (pending[i] == 0) ready.insert(i);
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    auto i = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(i);
    for (auto c : children[i])
      if (--pending[c] == 0) ready.insert(c);
  }
  return order;
}

/// Strongly connected components with more than one node (Tarjan), each sorted
/// by declaration index, components ordered by their smallest member.
std::vector<std::vector<std::size_t>> cycles(const std::vector<std::vector<std::size_t>>& parents) {
  const std::size_t n = parents.size();
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t i = 0; i < n; ++i)
    for (auto p : parents[i]) children[p].push_back(i);

  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t counter = 0;
  std::vector<std::vector<std::size_t>> result;

  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (auto w : children[v]) {
      if (index[w] == kUnvisited) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::size_t> component;
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        component.push_back(w);
      } while (w != v);
      if (component.size() > 1) {
        std::sort(component.begin(), component.end());
        result.push_back(std::move(component));
      }
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] == kUnvisited) visit(v);
  std::sort(result.begin(), result.end());
  return result;
}

std::string name_set(const NetworkDef& def, const std::vector<std::size_t>& members) {
  std::string text = "{";
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (k) text += ", ";
    text += def.nodes[members[k]].id;
  }
  return text + "}";
}

std::size_t row_count(std::span<const std::size_t> cards) {
  return std::accumulate(cards.begin(), cards.end(), std::size_t{1}, std::multiplies<>());
}

void check_row(const NodeDef& node, std::size_t r, std::span<const double> row,
               std::vector<Violation>& out) {
  double sum = 0.0;
  for (double p : row) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      out.push_back({Violation::Kind::BadProbability, node.id,
                     "probability " + format_general(p) + " is outside [0, 1]", r});
      return;
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRowSumTolerance)
    out.push_back({Violation::Kind::RowSum, node.id,
                   "row sum " + format_general(sum, 12) + " \xE2\x89\xA0 1", r});
}

void check_local(const NodeDef& node, std::span<const std::size_t> parent_cards,
                 std::vector<Violation>& out) {
  const std::size_t rows = row_count(parent_cards);
  const std::size_t states = node.states.size();
  std::visit(
      [&](const auto& local) {
        using T = std::decay_t<decltype(local)>;
        if constexpr (std::is_same_v<T, ExplicitCpt>) {
          const auto& t = local.table;
          if (static_cast<std::size_t>(t.rows()) != rows ||
              static_cast<std::size_t>(t.cols()) != states) {
            out.push_back({Violation::Kind::TableShape, node.id,
                           "table is " + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) +
                               ", expected " + std::to_string(rows) + "x" + std::to_string(states),
                           std::nullopt});
            return;
          }
          for (Eigen::Index r = 0; r < t.rows(); ++r)
            check_row(node, static_cast<std::size_t>(r),
                      std::span<const double>(t.row(r).data(), states), out);
        } else if constexpr (std::is_same_v<T, NoisyOr>) {
          if (states != 2)
            out.push_back({Violation::Kind::NoisyOrShape, node.id, "noisy-or node must be binary",
                           std::nullopt});
          for (std::size_t k = 0; k < parent_cards.size(); ++k)
            if (parent_cards[k] != 2)
              out.push_back({Violation::Kind::NoisyOrShape, node.id,
                             "noisy-or parent " + node.parents[k] + " must be binary",
                             std::nullopt});
          if (local.activation.size() != node.parents.size())
            out.push_back({Violation::Kind::NoisyOrShape, node.id,
                           std::to_string(local.activation.size()) +
                               " activation probabilities for " +
                               std::to_string(node.parents.size()) + " parents",
                           std::nullopt});
          auto bad = [](double p) { return !std::isfinite(p) || p < 0.0 || p > 1.0; };
          if (bad(local.leak))
            out.push_back({Violation::Kind::BadProbability, node.id,
                           "leak " + format_general(local.leak) + " is outside [0, 1]",
                           std::nullopt});
          for (double p : local.activation)
            if (bad(p))
              out.push_back({Violation::Kind::BadProbability, node.id,
                             "activation " + format_general(p) + " is outside [0, 1]",
                             std::nullopt});
        } else {
          if (local.outcome.size() != rows) {
            out.push_back({Violation::Kind::DeterministicShape, node.id,
                           std::to_string(local.outcome.size()) + " outcomes, expected " +
                               std::to_string(rows),
                           std::nullopt});
            return;
          }
          for (std::size_t r = 0; r < rows; ++r)
            if (local.outcome[r] >= states)
              out.push_back({Violation::Kind::DeterministicShape, node.id,
                             "outcome state index " + std::to_string(local.outcome[r]) +
                                 " out of range",
                             r});
        }
      },
      node.local);
}

}  // namespace

std::vector<Violation> validate_network(const NetworkDef& def) {
  std::vector<Violation> out;
  const std::size_t n = def.nodes.size();

  {
    std::set<std::string_view> ids;
    for (const auto& node : def.nodes)
      if (!ids.insert(node.id).second)
        out.push_back({Violation::Kind::DuplicateNode, node.id, "node id declared twice",
                       std::nullopt});
  }

  const Graph g = resolve_graph(def);
  for (const auto& c : cycles(g.parents))
  {
    Violation v{Violation::Kind::Cycle, "", "cycle through " + name_set(def, c), std::nullopt};
    for (auto i : c) v.nodes.push_back(def.nodes[i].id);
    out.push_back(std::move(v));
  }

  // Per-node findings: topologically sortable nodes first, the rest in
  // declaration order.
  std::vector<std::size_t> order = kahn(g.parents);
  {
    std::vector<bool> placed(n, false);
    for (auto i : order) placed[i] = true;
    for (std::size_t i = 0; i < n; ++i)
      if (!placed[i]) order.push_back(i);
  }

  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(def.nodes[i].id, i);

  for (auto i : order) {
    const auto& node = def.nodes[i];
    if (node.states.size() < 2)
      out.push_back({Violation::Kind::StateCount, node.id,
                     "node has " + std::to_string(node.states.size()) +
                         " state(s); at least 2 are required",
                     std::nullopt});
    {
      std::set<std::string_view> seen;
      for (const auto& s : node.states)
        if (!seen.insert(s).second)
          out.push_back({Violation::Kind::DuplicateState, node.id, "state " + s + " declared twice",
                         std::nullopt});
    }

    bool parents_ok = true;
    std::vector<std::size_t> cards;
    {
      std::set<std::string_view> seen;
      for (const auto& p : node.parents) {
        if (!seen.insert(p).second) {
          out.push_back({Violation::Kind::DuplicateParent, node.id, "parent " + p + " listed twice",
                         std::nullopt});
          parents_ok = false;
        }
        if (p == node.id) {
          out.push_back({Violation::Kind::SelfParent, node.id, "node lists itself as a parent",
                         std::nullopt});
          parents_ok = false;
          continue;
        }
        auto it = index.find(p);
        if (it == index.end()) {
          out.push_back({Violation::Kind::DanglingParent, node.id, "unknown parent " + p,
                         std::nullopt});
          parents_ok = false;
          continue;
        }
        cards.push_back(def.nodes[it->second].states.size());
      }
    }
    if (parents_ok) check_local(node, cards, out);
  }
  for (std::size_t k = 0; k < out.size(); ++k)
    if (out[k].nodes.empty()) out[k].nodes.push_back(out[k].node);
  return out;
}

std::vector<std::string> topological_order(const NetworkDef& def) {
  const Graph g = resolve_graph(def);
  if (!g.dangling.empty()) throw StructuralError("unknown parent in arc " + g.dangling.front());
  auto order = kahn(g.parents);
  if (order.size() != def.nodes.size()) {
    auto found = cycles(g.parents);
    throw StructuralError("cycle through " + name_set(def, found.empty() ? order : found.front()));
  }
  std::vector<std::string> ids;
  ids.reserve(order.size());
  for (auto i : order) ids.push_back(def.nodes[i].id);
  return ids;
}

ExplicitCpt expand_local(const NodeDef& node, std::span<const std::size_t> parent_cardinalities) {
  if (parent_cardinalities.size() != node.parents.size())
    throw StructuralError("node " + node.id + ": expected " + std::to_string(node.parents.size()) +
                          " parent cardinalities");
  const std::size_t rows = row_count(parent_cardinalities);
  const std::size_t states = node.states.size();

  return std::visit(
      [&](const auto& local) -> ExplicitCpt {
        using T = std::decay_t<decltype(local)>;
        if constexpr (std::is_same_v<T, ExplicitCpt>) {
          return local;
        } else if constexpr (std::is_same_v<T, NoisyOr>) {
          if (states != 2) throw StructuralError("noisy-or node " + node.id + " must be binary");
          for (std::size_t k = 0; k < parent_cardinalities.size(); ++k)
            if (parent_cardinalities[k] != 2)
              throw StructuralError("noisy-or node " + node.id + ": parent " + node.parents[k] +
                                    " must be binary");
          if (local.activation.size() != node.parents.size())
            throw StructuralError("noisy-or node " + node.id +
                                  ": one activation probability per parent is required");
          const std::size_t k = node.parents.size();
          CptTable table(rows, 2);
          for (std::size_t r = 0; r < rows; ++r) {
            // Row-major with the first parent slowest: parent j is true when
            // bit (k-1-j) of r is set.
            double off = 1.0 - local.leak;
            for (std::size_t j = 0; j < k; ++j)
              if ((r >> (k - 1 - j)) & 1U) off *= 1.0 - local.activation[j];
            table(r, 0) = off;
            table(r, 1) = 1.0 - off;
          }
          return {std::move(table)};
        } else {
          if (local.outcome.size() != rows)
            throw StructuralError("deterministic node " + node.id + ": expected " +
                                  std::to_string(rows) + " outcomes");
          CptTable table = CptTable::Zero(rows, states);
          for (std::size_t r = 0; r < rows; ++r) {
            if (local.outcome[r] >= states)
              throw StructuralError("deterministic node " + node.id + ": outcome out of range");
            table(r, local.outcome[r]) = 1.0;
          }
          return {std::move(table)};
        }
      },
      node.local);
}

void normalize_row(std::span<double> row) {
  if (row.empty()) return;
  constexpr double kScale = 9007199254740992.0;  // 2^53
  constexpr std::int64_t kUnits = std::int64_t{1} << 53;

  double sum = 0.0;
  for (double p : row) sum += p;
  if (sum != 1.0 && sum > 0.0)
    for (double& p : row) p /= sum;

  // Largest remainder: floor every entry onto the grid, then hand the missing
  // units to the entries that lost the most. Entries already on the grid keep
  // their value unless the row cannot be fixed otherwise.
  const std::size_t n = row.size();
  std::vector<std::int64_t> units(n);
  std::vector<double> remainder(n);
  std::int64_t total = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double scaled = row[k] * kScale;  // exact: scaling by a power of two
    units[k] = static_cast<std::int64_t>(std::floor(scaled));
    remainder[k] = scaled - static_cast<double>(units[k]);
    if (units[k] == 0 && row[k] > 0.0) {
      units[k] = 1;
      remainder[k] -= 1.0;
    }
    total += units[k];
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::int64_t deficit = kUnits - total;
  if (deficit > 0) {
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; k < n && deficit > 0 && remainder[order[k]] > 0.0; ++k, --deficit) ++units[order[k]];
  } else if (deficit < 0) {
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] < remainder[b]; });
    for (std::size_t k = 0; k < n && deficit < 0 && remainder[order[k]] < 0.0; ++k, ++deficit)
      if (units[order[k]] > 1) --units[order[k]];
  }
  if (deficit != 0) {
    const auto largest = static_cast<std::size_t>(std::max_element(units.begin(), units.end()) - units.begin());
    units[largest] += deficit;
  }
  for (std::size_t k = 0; k < n; ++k) row[k] = std::ldexp(static_cast<double>(units[k]), -53);
}

// ---------------------------------------------------------------------------

Network Network::build(NetworkDef def) {
  if (auto violations = validate_network(def); !violations.empty())
    throw ValidationError(std::move(violations));

  auto data = std::make_shared<Data>();
  const std::size_t n = def.nodes.size();
  for (std::size_t i = 0; i < n; ++i) data->index.emplace(def.nodes[i].id, i);
  data->parents.resize(n);
  data->children.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& p : def.nodes[i].parents) {
      auto pi = data->index.at(p);
      data->parents[i].push_back(pi);
      data->children[pi].push_back(i);
    }

  for (auto& node : def.nodes)
    if (auto* cpt = std::get_if<ExplicitCpt>(&node.local))
      for (Eigen::Index r = 0; r < cpt->table.rows(); ++r)
        normalize_row(std::span<double>(cpt->table.row(r).data(),
                                        static_cast<std::size_t>(cpt->table.cols())));

  data->cpts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> cards;
    for (auto p : data->parents[i]) cards.push_back(def.nodes[p].states.size());
    auto table = expand_local(def.nodes[i], cards).table;
    for (Eigen::Index r = 0; r < table.rows(); ++r)
      normalize_row(std::span<double>(table.row(r).data(), static_cast<std::size_t>(table.cols())));
    data->cpts.push_back(std::move(table));
  }
  data->order = kahn(data->parents);
  data->def = std::move(def);
  return Network(std::move(data));
}

std::optional<std::size_t> Network::find(std::string_view id) const {
  auto it = data_->index.find(id);
  if (it == data_->index.end()) return std::nullopt;
  return it->second;
}

std::size_t Network::index_of(std::string_view id) const {
  if (auto i = find(id)) return *i;
  throw StructuralError("unknown node " + std::string(id));
}

std::optional<std::size_t> Network::find_state(std::size_t node, std::string_view state) const {
  const auto& states = this->node(node).states;
  auto it = std::find(states.begin(), states.end(), state);
  if (it == states.end()) return std::nullopt;
  return static_cast<std::size_t>(it - states.begin());
}

bool Network::has_arc(std::size_t from, std::size_t to) const {
  auto ps = parents(to);
  return std::find(ps.begin(), ps.end(), from) != ps.end();
}

std::size_t Network::arc_count() const {
  std::size_t count = 0;
  for (const auto& ps : data_->parents) count += ps.size();
  return count;
}

std::size_t Network::row_index(std::size_t i, std::span<const std::size_t> parent_states) const {
  auto ps = parents(i);
  std::size_t row = 0;
  for (std::size_t k = 0; k < ps.size(); ++k) row = row * cardinality(ps[k]) + parent_states[k];
  return row;
}

std::vector<std::size_t> Network::parent_assignment(std::size_t i, std::size_t row) const {
  auto ps = parents(i);
  std::vector<std::size_t> states(ps.size());
  for (std::size_t k = ps.size(); k-- > 0;) {
    states[k] = row % cardinality(ps[k]);
    row /= cardinality(ps[k]);
  }
  return states;
}

Evidence Network::resolve(const Scenario& scenario) const {
  Evidence evidence;
  for (const auto& [node_id, state] : scenario.evidence) {
    auto i = find(node_id);
    if (!i) throw StructuralError("unknown node " + node_id);
    auto s = find_state(*i, state);
    if (!s) throw StructuralError("unknown state " + state + " of node " + node_id);
    evidence[*i] = *s;
  }
  return evidence;
}

std::string Network::describe(const Evidence& evidence) const {
  std::string text = "{";
  bool first = true;
  for (const auto& [i, s] : evidence) {
    if (!first) text += ", ";
    first = false;
    text += id(i) + "=" + node(i).states.at(s);
  }
  return text + "}";
}

namespace {

bool same_local(const LocalStructure& a, const LocalStructure& b) {
  if (a.index() != b.index()) return false;
  if (auto* x = std::get_if<ExplicitCpt>(&a)) {
    const auto& y = std::get<ExplicitCpt>(b);
    return x->table.rows() == y.table.rows() && x->table.cols() == y.table.cols() &&
           x->table == y.table;
  }
  if (auto* x = std::get_if<NoisyOr>(&a)) {
    const auto& y = std::get<NoisyOr>(b);
    return x->activation == y.activation && x->leak == y.leak;
  }
  return std::get<Deterministic>(a).outcome == std::get<Deterministic>(b).outcome;
}

}  // namespace

bool operator==(const Network& a, const Network& b) {
  if (!(a.metadata() == b.metadata()) || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto j = b.find(a.id(i));
    if (!j) return false;
    const auto& x = a.node(i);
    const auto& y = b.node(*j);
    if (x.display_name != y.display_name || x.states != y.states || x.parents != y.parents ||
        !same_local(x.local, y.local))
      return false;
    if (a.cpt(i) != b.cpt(*j)) return false;
  }
  return true;
}

}  // namespace qualbn
