#include "qualbn/inference.hpp"

#include <deque>
#include <limits>
#include <optional>

namespace qualbn {

namespace {

void check_evidence(const Network& net, const Evidence& evidence) {
  for (const auto& [node, state] : evidence) {
    if (node >= net.size()) throw StructuralError("evidence on unknown node index " + std::to_string(node));
    if (state >= net.cardinality(node))
      throw StructuralError("evidence state index " + std::to_string(state) + " out of range for " +
                            net.id(node));
  }
}

[[noreturn]] void impossible(const Network& net, const Evidence& evidence) {
  throw ImpossibleEvidence("impossible evidence " + net.describe(evidence));
}

/// Ancestral closure of the target and the evidence. Every other node is
/// barren: its factors sum to one and can be dropped.
std::vector<bool> relevant(const Network& net, const Evidence& evidence, std::optional<std::size_t> target) {
  std::vector<bool> keep(net.size(), false);
  std::vector<std::size_t> stack;
  for (const auto& [node, state] : evidence) stack.push_back(node);
  if (target) stack.push_back(*target);
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (keep[v]) continue;
    keep[v] = true;
    for (auto p : net.parents(v)) stack.push_back(p);
  }
  return keep;
}

std::vector<Factor> reduced_factors(const Network& net, const Evidence& evidence, const std::vector<bool>& keep) {
  std::vector<Factor> factors;
  factors.reserve(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (!keep[i]) continue;
    Factor f = cpt_factor(net, i);
    for (const auto& [node, state] : evidence) f = reduce(f, node, state);
    factors.push_back(std::move(f));
  }
  return factors;
}

std::size_t pick_min_degree(const std::vector<Factor>& factors, const std::vector<std::size_t>& pending) {
  std::size_t best = pending.front();
  std::size_t best_degree = std::numeric_limits<std::size_t>::max();
  for (auto var : pending) {
    std::set<std::size_t> neighbours;
    for (const auto& f : factors)
      if (f.contains(var)) neighbours.insert(f.scope().begin(), f.scope().end());
    neighbours.erase(var);
    // `pending` is ascending, so strict < keeps the lowest index on ties.
    if (neighbours.size() < best_degree) {
      best_degree = neighbours.size();
      best = var;
    }
  }
  return best;
}

/// Eliminates every variable in `pending` and multiplies what is left.
Factor eliminate(std::vector<Factor> factors, std::vector<std::size_t> pending,
                 EliminationHeuristic heuristic) {
  while (!pending.empty()) {
    const std::size_t var =
        heuristic == EliminationHeuristic::MinDegree ? pick_min_degree(factors, pending) : pending.front();
    pending.erase(std::find(pending.begin(), pending.end(), var));

    Factor joined;
    std::vector<Factor> rest;
    rest.reserve(factors.size());
    for (auto& f : factors) {
      if (f.contains(var))
        joined = product(joined, f);
      else
        rest.push_back(std::move(f));
    }
    rest.push_back(sum_out(joined, var));
    factors = std::move(rest);
  }
  Factor result;
  for (const auto& f : factors) result = product(result, f);
  return result;
}

}  // namespace

Factor cpt_factor(const Network& net, std::size_t i) {
  std::vector<std::size_t> scope, cards;
  for (auto p : net.parents(i)) {
    scope.push_back(p);
    cards.push_back(net.cardinality(p));
  }
  scope.push_back(i);
  cards.push_back(net.cardinality(i));
  const auto& table = net.cpt(i);
  // Row-major table flattened is exactly the (parents..., child) layout.
  Factor::Values values = Eigen::Map<const Factor::Values>(table.data(), table.size());
  return Factor(std::move(scope), std::move(cards), std::move(values));
}

double evidence_probability(const Network& net, const Evidence& evidence, const QueryOptions& options) {
  check_evidence(net, evidence);
  const auto keep = relevant(net, evidence, std::nullopt);
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < net.size(); ++i)
    if (keep[i] && !evidence.contains(i)) pending.push_back(i);
  return eliminate(reduced_factors(net, evidence, keep), std::move(pending), options.heuristic).sum();
}

Posterior query(const Network& net, std::size_t target, const Evidence& evidence,
                const QueryOptions& options) {
  if (target >= net.size()) throw StructuralError("unknown target node index " + std::to_string(target));
  check_evidence(net, evidence);

  Posterior out{target, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.cardinality(target)))};
  if (auto it = evidence.find(target); it != evidence.end()) {
    if (!(evidence_probability(net, evidence, options) > 0.0)) impossible(net, evidence);
    out.distribution[static_cast<Eigen::Index>(it->second)] = 1.0;
    return out;
  }

  const auto keep = relevant(net, evidence, target);
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < net.size(); ++i)
    if (keep[i] && i != target && !evidence.contains(i)) pending.push_back(i);
  const Factor joint = eliminate(reduced_factors(net, evidence, keep), std::move(pending), options.heuristic);

  const double total = joint.sum();
  if (!(total > 0.0)) impossible(net, evidence);
  out.distribution = joint.values().matrix() / total;
  return out;
}

Posterior query(const Network& net, std::string_view target, const Scenario& evidence,
                const QueryOptions& options) {
  return query(net, net.index_of(target), net.resolve(evidence), options);
}

std::vector<Posterior> all_marginals(const Network& net, const Evidence& evidence,
                                     const QueryOptions& options) {
  std::vector<Posterior> out;
  out.reserve(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) out.push_back(query(net, i, evidence, options));
  return out;
}

Posterior joint_enumerate(const Network& net, std::size_t target, const Evidence& evidence,
                          std::size_t cap) {
  if (target >= net.size()) throw StructuralError("unknown target node index " + std::to_string(target));
  check_evidence(net, evidence);
  const std::size_t n = net.size();

  std::size_t space = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (space > cap / net.cardinality(i)) throw OracleTooLarge("joint state space exceeds enumeration cap");
    space *= net.cardinality(i);
  }

  std::vector<std::size_t> free;
  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (auto it = evidence.find(i); it != evidence.end())
      assignment[i] = it->second;
    else
      free.push_back(i);
  }

  Eigen::VectorXd mass = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.cardinality(target)));
  std::vector<std::size_t> parent_states;
  while (true) {
    double p = 1.0;
    for (std::size_t i = 0; i < n && p > 0.0; ++i) {
      parent_states.clear();
      for (auto q : net.parents(i)) parent_states.push_back(assignment[q]);
      p *= net.cpt(i)(static_cast<Eigen::Index>(net.row_index(i, parent_states)),
                      static_cast<Eigen::Index>(assignment[i]));
    }
    mass[static_cast<Eigen::Index>(assignment[target])] += p;

    std::size_t k = free.size();
    while (k > 0) {
      const std::size_t v = free[k - 1];
      if (++assignment[v] < net.cardinality(v)) break;
      assignment[v] = 0;
      --k;
    }
    if (k == 0) break;
  }

  const double total = mass.sum();
  if (!(total > 0.0)) impossible(net, evidence);
  return Posterior{target, mass / total};
}

bool d_separated(const Network& net, std::size_t x, std::size_t y, const std::set<std::size_t>& given) {
  return d_separated(net, x, std::set<std::size_t>{y}, given);
}

bool d_separated(const Network& net, std::size_t x, const std::set<std::size_t>& ys,
                 const std::set<std::size_t>& given) {
  const std::size_t n = net.size();
  if (x >= n) throw StructuralError("unknown node index " + std::to_string(x));
  for (auto y : ys) {
    if (y >= n) throw StructuralError("unknown node index " + std::to_string(y));
    if (y == x) throw Error("d-separation of a node from itself is undefined");
  }
  for (auto z : given)
    if (z >= n) throw StructuralError("unknown node index " + std::to_string(z));

  // Ancestors of the conditioning set, itself included.
  std::vector<bool> observed(n, false), ancestor(n, false);
  std::deque<std::size_t> work;
  for (auto z : given) {
    observed[z] = true;
    work.push_back(z);
  }
  while (!work.empty()) {
    auto v = work.front();
    work.pop_front();
    if (ancestor[v]) continue;
    ancestor[v] = true;
    for (auto p : net.parents(v)) work.push_back(p);
  }

  // Reachability over (node, direction): `up` means the trail arrived from a child.
  std::vector<bool> seen_up(n, false), seen_down(n, false);
  std::deque<std::pair<std::size_t, bool>> frontier{{x, true}};
  while (!frontier.empty()) {
    auto [v, up] = frontier.front();
    frontier.pop_front();
    auto& seen = up ? seen_up : seen_down;
    if (seen[v]) continue;
    seen[v] = true;
    if (v != x && !observed[v] && ys.contains(v)) return false;

    if (up) {
      if (observed[v]) continue;
      for (auto p : net.parents(v)) frontier.emplace_back(p, true);
      for (auto c : net.children(v)) frontier.emplace_back(c, false);
    } else {
      if (!observed[v])
        for (auto c : net.children(v)) frontier.emplace_back(c, false);
      if (ancestor[v])
        for (auto p : net.parents(v)) frontier.emplace_back(p, true);
    }
  }
  return true;
}

}  // namespace qualbn
