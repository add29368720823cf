#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qualbn/error.hpp"

namespace qualbn {

/// Conditional probability table: one row per parent assignment (row-major over
/// the parents, first parent slowest), one column per child state.
using CptTable = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Tolerance on |row sum - 1| accepted at load time.
inline constexpr double kRowSumTolerance = 1e-9;

struct ExplicitCpt {
  CptTable table;
};

/// Noisy-OR over binary parents. States of the child and of every parent are
/// ordered (false, true).
struct NoisyOr {
  std::vector<double> activation;  // one per parent
  double leak = 0.0;
};

/// One child state index per parent assignment, same row order as CptTable.
struct Deterministic {
  std::vector<std::size_t> outcome;
};

using LocalStructure = std::variant<ExplicitCpt, NoisyOr, Deterministic>;

struct NodeDef {
  std::string id;
  std::string display_name;
  std::vector<std::string> states;
  std::vector<std::string> parents;
  LocalStructure local;
};

struct NetworkMetadata {
  std::string name = "untitled";
  std::string description;
  std::string provenance;

  bool operator==(const NetworkMetadata&) const = default;
};

/// Unvalidated network description, as produced by the readers or by hand.
struct NetworkDef {
  NetworkMetadata metadata;
  std::vector<NodeDef> nodes;
};

struct Violation {
  enum class Kind {
    Cycle,
    StateCount,
    DuplicateState,
    DuplicateParent,
    SelfParent,
    DanglingParent,
    DuplicateNode,
    TableShape,
    BadProbability,
    RowSum,
    NoisyOrShape,
    DeterministicShape,
  };

  Kind kind;
  std::string node;  // empty for graph-level violations naming several nodes
  std::string detail;
  std::optional<std::size_t> row;  // CPT row, when the violation is row-specific
  std::vector<std::string> nodes;  // every node involved (cycle members, or {node})
  std::size_t line = 0;            // source line, filled in by the file readers

  std::string to_string() const;
};

std::string_view to_string(Violation::Kind kind);

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Every violated structural or probabilistic invariant. Graph-level cycles come
/// first, then per-node findings in topological order and field order.
std::vector<Violation> validate_network(const NetworkDef& def);

/// Stable topological order (ties broken by declaration order). Throws
/// StructuralError naming the nodes of a cycle, or naming an unknown parent.
std::vector<std::string> topological_order(const NetworkDef& def);

/// Equivalent explicit table for any local structure. `parent_cardinalities`
/// gives the state count of each parent, in parent order.
ExplicitCpt expand_local(const NodeDef& node, std::span<const std::size_t> parent_cardinalities);

/// Rescales a row that sums to 1 within kRowSumTolerance so that it sums to
/// exactly 1. Entries are moved onto the dyadic grid 2^-53, which makes every
/// partial sum exact; positive entries stay positive. Idempotent.
void normalize_row(std::span<double> row);

/// Observed states, keyed by node index.
using Evidence = std::map<std::size_t, std::size_t>;

/// A named evidence assignment, by node id and state name.
struct Scenario {
  std::string name;
  std::map<std::string, std::string> evidence;

  bool operator==(const Scenario&) const = default;
};

/// Validated, immutable discrete Bayesian network. Copies share one frozen
/// snapshot, so a Network can be handed to any number of concurrent readers.
class Network {
 public:
  /// Validates, renormalizes explicit rows and expands local structure.
  /// Throws ValidationError listing every violation.
  static Network build(NetworkDef def);

  const NetworkDef& definition() const noexcept { return data_->def; }
  const NetworkMetadata& metadata() const noexcept { return data_->def.metadata; }

  std::size_t size() const noexcept { return data_->def.nodes.size(); }
  const NodeDef& node(std::size_t i) const { return data_->def.nodes.at(i); }
  const std::string& id(std::size_t i) const { return node(i).id; }
  std::size_t cardinality(std::size_t i) const { return node(i).states.size(); }

  std::optional<std::size_t> find(std::string_view id) const;
  /// Throws StructuralError for unknown ids.
  std::size_t index_of(std::string_view id) const;
  std::optional<std::size_t> find_state(std::size_t node, std::string_view state) const;

  std::span<const std::size_t> parents(std::size_t i) const { return data_->parents.at(i); }
  std::span<const std::size_t> children(std::size_t i) const { return data_->children.at(i); }
  bool has_arc(std::size_t from, std::size_t to) const;
  std::size_t arc_count() const;

  /// Expanded, exactly normalized table of node i.
  const CptTable& cpt(std::size_t i) const { return data_->cpts.at(i); }

  /// Row of `cpt(i)` for a full parent assignment (indexed like parents(i)).
  std::size_t row_index(std::size_t i, std::span<const std::size_t> parent_states) const;
  /// Inverse of row_index.
  std::vector<std::size_t> parent_assignment(std::size_t i, std::size_t row) const;

  std::span<const std::size_t> topological_order() const noexcept { return data_->order; }

  /// Resolves ids and state names; throws StructuralError naming the bad entity.
  Evidence resolve(const Scenario& scenario) const;
  std::string describe(const Evidence& evidence) const;

 private:
  struct Data {
    NetworkDef def;
    std::map<std::string, std::size_t, std::less<>> index;
    std::vector<std::vector<std::size_t>> parents;
    std::vector<std::vector<std::size_t>> children;
    std::vector<CptTable> cpts;
    std::vector<std::size_t> order;
  };

  explicit Network(std::shared_ptr<const Data> data) : data_(std::move(data)) {}

  std::shared_ptr<const Data> data_;
};

/// Semantic equality: metadata, then node definitions and expanded tables
/// matched by id, bitwise. Declaration order does not matter.
bool operator==(const Network& a, const Network& b);

}  // namespace qualbn
