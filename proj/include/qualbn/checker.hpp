#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qualbn/inference.hpp"
#include "qualbn/network.hpp"
#include "qualbn/qualspec.hpp"

namespace qualbn {

/// Numeric margin used by invariants that demand d-separation.
inline constexpr double kDSeparationTolerance = 1e-9;
/// Tolerance for comparing cumulative distributions during sign derivation.
inline constexpr double kSignTolerance = 1e-12;
inline constexpr double kDefaultEss = 5.0;

enum class Verdict { Pass, Fail, Error };

std::string_view to_string(Verdict verdict);

struct ComputedValue {
  std::string name;
  double value;
};

struct AssertionResult {
  std::string id;  // "A1", "A2", ... in suite order
  std::string kind;
  std::string statement;  // canonical text of the assertion
  std::size_t line = 0;
  Verdict verdict = Verdict::Error;
  std::string detail;
  std::vector<ComputedValue> values;
  std::optional<double> epsilon;     // threshold actually applied
  std::optional<std::string> sign;   // derived sign, sign assertions only
};

struct CheckReport {
  std::string suite_name;
  std::string model_name;
  std::string suite_hash;  // SHA-256 of the canonical suite text
  std::string model_hash;  // SHA-256 of the canonical model text
  std::vector<AssertionResult> results;

  std::size_t count(Verdict verdict) const;
  bool all_passed() const { return count(Verdict::Pass) == results.size(); }
};

struct CheckOptions {
  /// Replaces the suite's default epsilon (assertions with their own eps keep it).
  std::optional<double> default_epsilon;
  /// Evaluate assertions on worker threads. Results are order-stable either way.
  bool parallel = true;
  QueryOptions query;
};

CheckReport check(const Network& net, const BoundSuite& suite, const CheckOptions& options = {});

// ---------------------------------------------------------------------------
// Arc signs.

struct SignWitness {
  std::vector<std::pair<std::string, std::string>> context;  // other parents -> state
  std::string lower;   // parent state moved from
  std::string higher;  // parent state moved to
  Sign local = Sign::Zero;
};

struct ArcSignResult {
  std::string parent;
  std::string child;
  Sign sign = Sign::Zero;
  /// For ambiguous arcs: a context where the child moves up and one where it
  /// moves down (or one where the cumulative distributions cross).
  std::vector<SignWitness> witnesses;
};

/// Sign of one arc from first-order stochastic dominance of the child's
/// distribution as the parent steps through its ordered states, in every
/// context of the child's other parents.
ArcSignResult derive_sign(const Network& net, std::size_t parent, std::size_t child);

/// Every arc, children in topological order, parents in declaration order.
std::vector<ArcSignResult> derive_signs(const Network& net);

/// +1 if `higher` stochastically dominates `lower`, -1 dually, 0 if equal
/// within kSignTolerance, and nullopt if the cumulative distributions cross.
std::optional<int> dominance(const Eigen::VectorXd& lower, const Eigen::VectorXd& higher);

// ---------------------------------------------------------------------------
// Prior export.

struct PriorRow {
  std::vector<std::string> parent_states;
  /// ESS times the row's probabilities. Extended precision keeps the product
  /// exact, so alpha / ESS reproduces each probability bit for bit.
  std::vector<long double> alpha;
};

struct NodePrior {
  std::string node;
  std::vector<std::string> states;
  std::vector<std::string> parents;
  std::vector<PriorRow> rows;
};

struct PriorExport {
  long double ess = kDefaultEss;
  std::string model_name;
  std::vector<NodePrior> nodes;  // topological order
  std::vector<std::string> warnings;
};

/// Dirichlet pseudo-counts for every table row. Throws Error for ess <= 0.
PriorExport export_prior(const Network& net, double ess = kDefaultEss);

/// Text file with the mandatory caution block followed by the pseudo-counts.
std::string write_prior(const PriorExport& prior);

// ---------------------------------------------------------------------------
// Comparison of a quantitative parameterisation against a qualitative one.

struct RowDivergence {
  std::string node;
  std::vector<std::string> parent_states;
  double max_abs_difference = 0.0;
};

struct ComparisonReport {
  CheckReport check;  // suite evaluated on the quantitative network
  std::vector<RowDivergence> divergence;
  std::string qualitative_hash;
};

/// Throws StructuralError listing differing nodes/states/arcs when the two
/// networks do not share a structure; BindError when the suite does not bind to
/// both.
ComparisonReport compare(const Network& qualitative, const Network& quantitative,
                         const AssertionSuite& suite, const CheckOptions& options = {});

/// Structural differences, empty when the two networks can be compared.
std::vector<std::string> structural_differences(const Network& a, const Network& b);

}  // namespace qualbn
