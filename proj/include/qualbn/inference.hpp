#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <set>
#include <string_view>
#include <vector>

#include "qualbn/factor.hpp"
#include "qualbn/network.hpp"

namespace qualbn {

struct Posterior {
  std::size_t node = 0;
  Eigen::VectorXd distribution;
};

enum class EliminationHeuristic {
  MinDegree,    // fewest neighbours in the current interaction graph
  Declaration,  // node declaration order
};

struct QueryOptions {
  EliminationHeuristic heuristic = EliminationHeuristic::MinDegree;
};

inline constexpr std::size_t kDefaultEnumerationCap = std::size_t{1} << 22;

/// Factor of node i's table, scope (parents..., i).
Factor cpt_factor(const Network& net, std::size_t i);

/// Exact P(target | evidence) by variable elimination. Throws ImpossibleEvidence
/// when the evidence has probability zero.
Posterior query(const Network& net, std::size_t target, const Evidence& evidence,
                const QueryOptions& options = {});
Posterior query(const Network& net, std::string_view target, const Scenario& evidence,
                const QueryOptions& options = {});

/// One posterior per node in declaration order; observed nodes come back as
/// point masses.
std::vector<Posterior> all_marginals(const Network& net, const Evidence& evidence,
                                     const QueryOptions& options = {});

/// P(evidence), by eliminating every variable.
double evidence_probability(const Network& net, const Evidence& evidence,
                            const QueryOptions& options = {});

/// Reference posterior from an explicit sum over the full joint. Throws
/// OracleTooLarge when the joint state space exceeds `cap`.
Posterior joint_enumerate(const Network& net, std::size_t target, const Evidence& evidence,
                          std::size_t cap = kDefaultEnumerationCap);

/// True iff every trail between x and y is blocked given `given`.
bool d_separated(const Network& net, std::size_t x, std::size_t y,
                 const std::set<std::size_t>& given);

/// True iff x is d-separated from every node of `ys` given `given`.
bool d_separated(const Network& net, std::size_t x, const std::set<std::size_t>& ys,
                 const std::set<std::size_t>& given);

}  // namespace qualbn
