#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qualbn/network.hpp"

namespace qualbn {

/// Name of the implicit empty-evidence scenario.
inline constexpr std::string_view kPriorScenario = "prior";
inline constexpr double kDefaultEpsilon = 1e-6;

/// Qualitative influence sign of an arc over ordered states.
enum class Sign { Positive, Negative, Zero, Ambiguous };

std::string_view to_symbol(Sign sign);  // "+", "-", "0", "ambiguous"

struct NodeState {
  std::string node;
  std::string state;
  bool operator==(const NodeState&) const = default;
};

enum class Relation { Less, Greater, LessEqual, GreaterEqual, Approx };

std::string_view to_symbol(Relation relation);  // "<", ">", "<=", ">=", "~"

/// P(target | scenario) moves relative to P(target | baseline).
struct Direction {
  enum class Expect { Increases, Decreases, Unchanged };

  NodeState target;
  std::string scenario;
  std::string baseline{kPriorScenario};
  Expect expected = Expect::Increases;
  std::optional<double> epsilon;
  bool operator==(const Direction&) const = default;
};

/// P(target_a | scenario_a) <relation> P(target_b | scenario_b). target_b
/// defaults to target_a.
struct Compare {
  NodeState target_a;
  std::string scenario_a;
  Relation relation = Relation::Less;
  std::optional<double> epsilon;
  NodeState target_b;
  std::string scenario_b;
  bool operator==(const Compare&) const = default;
};

/// lo <= P(target | scenario) <= hi.
struct Range {
  NodeState target;
  std::string scenario;
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const Range&) const = default;
};

/// `state` is the unique most probable state of `node` under `scenario`.
struct Argmax {
  std::string node;
  std::string scenario;
  std::string state;
  bool operator==(const Argmax&) const = default;
};

/// The whole distribution of `node` under `scenario` matches the prior.
struct Invariant {
  std::string node;
  std::string scenario;
  std::optional<double> epsilon;
  bool require_d_separation = false;
  bool operator==(const Invariant&) const = default;
};

/// Derived influence sign of parent -> child.
struct ArcSign {
  std::string parent;
  std::string child;
  Sign expected = Sign::Positive;
  bool operator==(const ArcSign&) const = default;
};

/// |P(target | a) - P(target)| <relation> |P(target | b) - P(target)|.
struct Magnitude {
  NodeState target;
  std::string scenario_a;
  Relation relation = Relation::Greater;  // Less or Greater
  std::optional<double> epsilon;
  std::string scenario_b;
  bool operator==(const Magnitude&) const = default;
};

using AssertionBody = std::variant<Direction, Compare, Range, Argmax, Invariant, ArcSign, Magnitude>;

std::string_view kind_name(const AssertionBody& body);

struct Assertion {
  AssertionBody body;
  std::size_t line = 0;  // source line; not part of equality

  bool operator==(const Assertion& other) const { return body == other.body; }
};

struct AssertionSuite {
  std::string name = "untitled";
  double default_epsilon = kDefaultEpsilon;
  std::vector<Scenario> scenarios;
  std::vector<Assertion> assertions;

  const Scenario* find_scenario(std::string_view name) const;
  bool operator==(const AssertionSuite&) const = default;
};

/// Parses the line-oriented suite language. Never crashes; throws ParseError
/// listing every problem with line and column.
AssertionSuite parse_suite(std::string_view text);

/// Canonical text that parses back to an equal suite.
std::string serialize_suite(const AssertionSuite& suite);
std::string serialize_assertion(const AssertionBody& body);

/// A suite whose every reference resolves against one network.
struct BoundSuite {
  AssertionSuite suite;
  std::map<std::string, Evidence, std::less<>> evidence;  // includes "prior"
};

/// Resolves node, state, scenario and arc references. Throws BindError naming
/// every missing entity.
BoundSuite bind_suite(const AssertionSuite& suite, const Network& net);

}  // namespace qualbn
