#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qualbn/network.hpp>

#include <algorithm>
#include <random>

#include "support/random_network.hpp"

using namespace qualbn;

namespace {

NodeDef binary(std::string id, std::vector<std::string> parents, CptTable table) {
  return {id, id, {"false", "true"}, std::move(parents), ExplicitCpt{std::move(table)}};
}

CptTable rows(std::initializer_list<std::initializer_list<double>> values) {
  CptTable t(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : values) {
    Eigen::Index c = 0;
    for (double v : row) t(r, c++) = v;
    ++r;
  }
  return t;
}

NetworkDef two_node() {
  NetworkDef def;
  def.nodes.push_back(binary("A", {}, rows({{0.7, 0.3}})));
  def.nodes.push_back(binary("B", {"A"}, rows({{0.8, 0.2}, {0.1, 0.9}})));
  return def;
}

}  // namespace

TEST_CASE("valid two-node network has no violations") {
  CHECK(validate_network(two_node()).empty());
  const auto net = Network::build(two_node());
  CHECK(net.size() == 2);
  CHECK(net.has_arc(0, 1));
  CHECK_FALSE(net.has_arc(1, 0));
  CHECK(net.arc_count() == 1);
  CHECK(net.metadata().name == "untitled");
}

TEST_CASE("two-cycle is one violation naming both nodes") {
  NetworkDef def;
  def.nodes.push_back(binary("A", {"B"}, rows({{0.5, 0.5}, {0.5, 0.5}})));
  def.nodes.push_back(binary("B", {"A"}, rows({{0.5, 0.5}, {0.5, 0.5}})));
  const auto v = validate_network(def);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::Cycle);
  CHECK(v[0].nodes == std::vector<std::string>{"A", "B"});
  CHECK_THROWS_AS(topological_order(def), StructuralError);
  CHECK_THROWS_AS(Network::build(def), ValidationError);
}

TEST_CASE("row sum violation reports the sum") {
  NetworkDef def;
  def.nodes.push_back(binary("A", {}, rows({{0.5, 0.6}})));
  const auto v = validate_network(def);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::RowSum);
  CHECK(v[0].node == "A");
  CHECK(v[0].row == 0u);
  CHECK(v[0].detail == "row sum 1.1 \xE2\x89\xA0 1");
}

TEST_CASE("rows within tolerance are accepted and renormalized exactly") {
  NetworkDef def;
  def.nodes.push_back(binary("A", {}, rows({{0.3 + 4e-10, 0.7}})));
  const auto net = Network::build(def);
  CHECK(net.cpt(0).row(0).sum() == 1.0);
  NetworkDef bad;
  bad.nodes.push_back(binary("A", {}, rows({{0.3 + 2e-9, 0.7}})));
  CHECK_FALSE(validate_network(bad).empty());
}

TEST_CASE("structural violations") {
  SUBCASE("dangling parent") {
    NetworkDef def;
    def.nodes.push_back(binary("B", {"Z"}, rows({{0.5, 0.5}, {0.5, 0.5}})));
    const auto v = validate_network(def);
    REQUIRE_FALSE(v.empty());
    CHECK(v[0].kind == Violation::Kind::DanglingParent);
    CHECK(v[0].node == "B");
  }
  SUBCASE("self parent") {
    NetworkDef def;
    def.nodes.push_back(binary("A", {"A"}, rows({{0.5, 0.5}, {0.5, 0.5}})));
    const auto v = validate_network(def);
    CHECK(std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.kind == Violation::Kind::SelfParent; }));
  }
  SUBCASE("single state and duplicate states") {
    NetworkDef def;
    def.nodes.push_back({"A", "A", {"only"}, {}, ExplicitCpt{rows({{1.0}})}});
    def.nodes.push_back({"B", "B", {"x", "x"}, {}, ExplicitCpt{rows({{0.5, 0.5}})}});
    const auto v = validate_network(def);
    REQUIRE(v.size() == 2);
    CHECK(v[0].kind == Violation::Kind::StateCount);
    CHECK(v[1].kind == Violation::Kind::DuplicateState);
  }
  SUBCASE("duplicate parent and duplicate node") {
    NetworkDef def = two_node();
    def.nodes.push_back(binary("C", {"A", "A"}, rows({{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}})));
    def.nodes.push_back(binary("A", {}, rows({{0.5, 0.5}})));
    const auto v = validate_network(def);
    CHECK(std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.kind == Violation::Kind::DuplicateNode; }));
    CHECK(
        std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.kind == Violation::Kind::DuplicateParent; }));
  }
  SUBCASE("table shape and out-of-range probability") {
    NetworkDef def;
    def.nodes.push_back(binary("A", {}, rows({{0.5, 0.5}, {0.5, 0.5}})));
    def.nodes.push_back(binary("B", {}, rows({{-0.1, 1.1}})));
    const auto v = validate_network(def);
    REQUIRE(v.size() == 2);
    CHECK(v[0].kind == Violation::Kind::TableShape);
    CHECK(v[1].kind == Violation::Kind::BadProbability);
  }
}

TEST_CASE("violations come in topological order") {
  NetworkDef def;
  def.nodes.push_back(binary("C", {"B"}, rows({{0.5, 0.6}, {0.5, 0.5}})));
  def.nodes.push_back(binary("B", {"A"}, rows({{0.5, 0.6}, {0.5, 0.5}})));
  def.nodes.push_back(binary("A", {}, rows({{0.5, 0.6}})));
  const auto v = validate_network(def);
  REQUIRE(v.size() == 3);
  CHECK(v[0].node == "A");
  CHECK(v[1].node == "B");
  CHECK(v[2].node == "C");
}

TEST_CASE("topological order ties break by declaration order") {
  NetworkDef chain;
  chain.nodes.push_back(binary("C", {"B"}, rows({{0.5, 0.5}, {0.5, 0.5}})));
  chain.nodes.push_back(binary("A", {}, rows({{0.5, 0.5}})));
  chain.nodes.push_back(binary("B", {"A"}, rows({{0.5, 0.5}, {0.5, 0.5}})));
  CHECK(topological_order(chain) == std::vector<std::string>{"A", "B", "C"});

  NetworkDef fork;
  fork.nodes.push_back(binary("A", {}, rows({{0.5, 0.5}})));
  fork.nodes.push_back(binary("B", {"A"}, rows({{0.5, 0.5}, {0.5, 0.5}})));
  fork.nodes.push_back(binary("C", {"A"}, rows({{0.5, 0.5}, {0.5, 0.5}})));
  CHECK(topological_order(fork) == std::vector<std::string>{"A", "B", "C"});

  CHECK(topological_order(NetworkDef{}).empty());
}

TEST_CASE("topological order is a permutation respecting every arc") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto net = testing::random_network(rng);
    const auto order = net.topological_order();
    std::vector<std::size_t> sorted(order.begin(), order.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
    std::vector<std::size_t> position(net.size());
    for (std::size_t k = 0; k < order.size(); ++k) position[order[k]] = k;
    for (std::size_t i = 0; i < net.size(); ++i)
      for (auto p : net.parents(i)) CHECK(position[p] < position[i]);
  }
}

TEST_CASE("noisy-or expansion examples") {
  NodeDef one{"C", "C", {"false", "true"}, {"A"}, NoisyOr{{0.8}, 0.0}};
  const std::size_t card2[] = {2};
  const auto t1 = expand_local(one, card2).table;
  CHECK(t1(0, 1) == 0.0);
  CHECK(t1(1, 1) == doctest::Approx(0.8).epsilon(1e-15));

  NodeDef two{"C", "C", {"false", "true"}, {"A", "B"}, NoisyOr{{0.5, 0.5}, 0.0}};
  const std::size_t cards22[] = {2, 2};
  const auto t2 = expand_local(two, cards22).table;
  CHECK(t2(3, 0) == 0.25);
  CHECK(t2(1, 0) == 0.5);
  CHECK(t2(2, 0) == 0.5);
  CHECK(t2(0, 0) == 1.0);
}

TEST_CASE("noisy-or expansion matches the product formula exactly") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + trial % 4;
    NoisyOr noisy;
    for (std::size_t j = 0; j < k; ++j) noisy.activation.push_back(u(rng));
    noisy.leak = u(rng) * 0.3;
    NodeDef node{"C", "C", {"false", "true"}, {}, noisy};
    for (std::size_t j = 0; j < k; ++j) node.parents.push_back("P" + std::to_string(j));
    const std::vector<std::size_t> cards(k, 2);
    const auto t = expand_local(node, cards).table;
    REQUIRE(t.rows() == static_cast<Eigen::Index>(1u << k));
    for (std::size_t r = 0; r < (1u << k); ++r) {
      // Parent j is true in row r when its digit (first parent most significant) is 1.
      double off = 1.0 - noisy.leak;
      for (std::size_t j = 0; j < k; ++j)
        if ((r / (1u << (k - 1 - j))) % 2 == 1) off *= 1.0 - noisy.activation[j];
      CHECK(t(static_cast<Eigen::Index>(r), 1) == 1.0 - off);

      // Independent inhibitors: the child stays false only if the leak and
      // every active parent fail. Sum the failure events explicitly.
      double stay_false = 0.0;
      for (std::size_t mask = 0; mask < (2u << k); ++mask) {
        double p = 1.0;
        bool fired = false;
        for (std::size_t j = 0; j <= k; ++j) {
          const bool active = j == k || (r / (1u << (k - 1 - j))) % 2 == 1;
          const double q = j == k ? noisy.leak : noisy.activation[j];
          const bool fires = (mask >> j) & 1U;
          if (!active) {
            if (fires) p = 0.0;
            continue;
          }
          p *= fires ? q : 1.0 - q;
          fired = fired || fires;
        }
        if (!fired) stay_false += p;
      }
      CHECK(t(static_cast<Eigen::Index>(r), 0) == doctest::Approx(stay_false).epsilon(1e-12));
    }
  }
}

TEST_CASE("noisy-or on a non-binary node is a structural error") {
  NodeDef node{"C", "C", {"a", "b", "c"}, {"A"}, NoisyOr{{0.5}, 0.1}};
  const std::size_t cards[] = {2};
  CHECK_THROWS_AS(expand_local(node, cards), StructuralError);
  NodeDef parent3{"C", "C", {"false", "true"}, {"A"}, NoisyOr{{0.5}, 0.1}};
  const std::size_t cards3[] = {3};
  CHECK_THROWS_AS(expand_local(parent3, cards3), StructuralError);

  NetworkDef def;
  def.nodes.push_back({"A", "A", {"x", "y", "z"}, {}, ExplicitCpt{rows({{0.2, 0.3, 0.5}})}});
  def.nodes.push_back(parent3);
  const auto v = validate_network(def);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::NoisyOrShape);
}

TEST_CASE("deterministic exactly-one-of-two constraint") {
  NodeDef node{"K", "K", {"false", "true"}, {"A", "B"}, Deterministic{{0, 1, 1, 0}}};
  const std::size_t cards[] = {2, 2};
  const auto t = expand_local(node, cards).table;
  CHECK(t == rows({{1, 0}, {0, 1}, {0, 1}, {1, 0}}));
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    CHECK(t.row(r).sum() == 1.0);
    CHECK((t.row(r).array() == 1.0).count() == 1);
  }
}

TEST_CASE("expand_local passes explicit tables through unchanged") {
  const auto table = rows({{0.25, 0.75}, {0.6, 0.4}});
  NodeDef node = binary("B", {"A"}, table);
  const std::size_t cards[] = {2};
  const auto once = expand_local(node, cards);
  CHECK(once.table == table);
  node.local = once;
  CHECK(expand_local(node, cards).table == table);
}

TEST_CASE("normalize_row sums exactly and is idempotent") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    auto row = testing::random_row(rng, 2 + trial % 5, 0.1);
    if (row[0] > 1e-6) row[0] += 1e-10 * (trial % 3 - 1);
    const auto before = row;
    normalize_row(row);
    double sum = 0.0;
    for (double p : row) sum += p;
    CHECK(sum == 1.0);
    for (std::size_t k = 0; k < row.size(); ++k) {
      CHECK(row[k] >= 0.0);
      CHECK((row[k] > 0.0) == (before[k] > 0.0));
      CHECK(std::abs(row[k] - before[k]) <= 1e-9);
    }
    auto again = row;
    normalize_row(again);
    CHECK(again == row);
  }
  std::vector<double> death_row{0.2, 0.8};
  normalize_row(death_row);
  CHECK(death_row[1] == 0.8);
}

TEST_CASE("every expanded row in random networks sums to one") {
  std::mt19937_64 rng(17);
  testing::RandomSpec spec;
  spec.local_structures = true;
  for (int trial = 0; trial < 50; ++trial) {
    const auto net = testing::random_network(rng, spec);
    for (std::size_t i = 0; i < net.size(); ++i)
      for (Eigen::Index r = 0; r < net.cpt(i).rows(); ++r) CHECK(std::abs(net.cpt(i).row(r).sum() - 1.0) <= 1e-9);
  }
}

TEST_CASE("network snapshot resolves scenarios") {
  const auto net = Network::build(two_node());
  CHECK(net.resolve({"s", {{"B", "true"}}}) == Evidence{{1, 1}});
  CHECK_THROWS_AS(net.resolve({"s", {{"Q", "true"}}}), StructuralError);
  CHECK_THROWS_AS(net.resolve({"s", {{"B", "maybe"}}}), StructuralError);
  CHECK(net.describe({{1, 1}}) == "{B=true}");
  const auto copy = net;
  CHECK(copy == net);
  CHECK(&copy.cpt(0) == &net.cpt(0));
}

TEST_CASE("row index and parent assignment are inverse") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto net = testing::random_network(rng);
    for (std::size_t i = 0; i < net.size(); ++i)
      for (std::size_t r = 0; r < static_cast<std::size_t>(net.cpt(i).rows()); ++r)
        CHECK(net.row_index(i, net.parent_assignment(i, r)) == r);
  }
}
