#include "qualbn/checker.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "format.hpp"
#include "hash.hpp"
#include "qualbn/model_io.hpp"

namespace qualbn {

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Error: return "error";
  }
  return "error";
}

std::size_t CheckReport::count(Verdict verdict) const {
  return static_cast<std::size_t>(std::count_if(results.begin(), results.end(),
                                                [&](const AssertionResult& r) { return r.verdict == verdict; }));
}

// ---------------------------------------------------------------------------
// Signs.

std::optional<int> dominance(const Eigen::VectorXd& lower, const Eigen::VectorXd& higher) {
  bool up = false, down = false;
  double cdf_lower = 0.0, cdf_higher = 0.0;
  for (Eigen::Index k = 0; k + 1 < lower.size(); ++k) {
    cdf_lower += lower[k];
    cdf_higher += higher[k];
    const double diff = cdf_lower - cdf_higher;  // > 0: mass moved to higher states
    if (diff > kSignTolerance) up = true;
    if (diff < -kSignTolerance) down = true;
  }
  if (up && down) return std::nullopt;
  return up ? 1 : down ? -1 : 0;
}

ArcSignResult derive_sign(const Network& net, std::size_t parent, std::size_t child) {
  if (!net.has_arc(parent, child))
    throw StructuralError("no arc " + net.id(parent) + " -> " + net.id(child));
  ArcSignResult result{net.id(parent), net.id(child), Sign::Zero, {}};

  const auto ps = net.parents(child);
  const std::size_t k = static_cast<std::size_t>(std::find(ps.begin(), ps.end(), parent) - ps.begin());
  const auto& table = net.cpt(child);
  const auto& parent_states = net.node(parent).states;

  std::optional<SignWitness> first_up, first_down, first_cross;
  for (std::size_t r = 0; r < static_cast<std::size_t>(table.rows()); ++r) {
    auto assignment = net.parent_assignment(child, r);
    if (assignment[k] + 1 >= parent_states.size()) continue;
    auto next = assignment;
    ++next[k];
    const Eigen::VectorXd lower = table.row(static_cast<Eigen::Index>(r)).transpose();
    const Eigen::VectorXd higher =
        table.row(static_cast<Eigen::Index>(net.row_index(child, next))).transpose();
    const auto d = dominance(lower, higher);

    SignWitness w;
    for (std::size_t j = 0; j < ps.size(); ++j)
      if (j != k) w.context.emplace_back(net.id(ps[j]), net.node(ps[j]).states[assignment[j]]);
    w.lower = parent_states[assignment[k]];
    w.higher = parent_states[assignment[k] + 1];
    if (!d) {
      w.local = Sign::Ambiguous;
      if (!first_cross) first_cross = w;
    } else if (*d > 0) {
      w.local = Sign::Positive;
      if (!first_up) first_up = w;
    } else if (*d < 0) {
      w.local = Sign::Negative;
      if (!first_down) first_down = w;
    }
  }

  if (first_cross || (first_up && first_down)) {
    result.sign = Sign::Ambiguous;
    for (auto* w : {&first_up, &first_down, &first_cross})
      if (*w) result.witnesses.push_back(**w);
  } else if (first_up) {
    result.sign = Sign::Positive;
  } else if (first_down) {
    result.sign = Sign::Negative;
  }
  return result;
}

std::vector<ArcSignResult> derive_signs(const Network& net) {
  std::vector<ArcSignResult> out;
  for (auto child : net.topological_order())
    for (auto parent : net.parents(child)) out.push_back(derive_sign(net, parent, child));
  return out;
}

// ---------------------------------------------------------------------------
// Check.

namespace {

class Evaluator {
 public:
  Evaluator(const Network& net, const BoundSuite& suite, const CheckOptions& options)
      : net_(net), suite_(suite), options_(options) {}

  double default_epsilon() const {
    return options_.default_epsilon.value_or(suite_.suite.default_epsilon);
  }

  AssertionResult evaluate(const Assertion& assertion, std::size_t ordinal) const {
    AssertionResult r;
    r.id = "A" + std::to_string(ordinal + 1);
    r.kind = std::string(kind_name(assertion.body));
    r.statement = serialize_assertion(assertion.body);
    r.line = assertion.line;
    try {
      std::visit([&](const auto& a) { run(a, r); }, assertion.body);
    } catch (const ImpossibleEvidence& e) {
      r.verdict = Verdict::Error;
      r.detail = e.what();
    } catch (const Error& e) {
      r.verdict = Verdict::Error;
      r.detail = e.what();
    }
    return r;
  }

 private:
  const Evidence& evidence(const std::string& scenario) const {
    auto it = suite_.evidence.find(scenario);
    if (it == suite_.evidence.end()) throw Error("scenario " + scenario + " is not bound");
    return it->second;
  }

  Eigen::VectorXd distribution(const std::string& node, const std::string& scenario) const {
    return query(net_, net_.index_of(node), evidence(scenario), options_.query).distribution;
  }

  double probability(const NodeState& t, const std::string& scenario) const {
    const auto i = net_.index_of(t.node);
    const auto s = net_.find_state(i, t.state);
    if (!s) throw Error("unknown state " + t.state + " of node " + t.node);
    return query(net_, i, evidence(scenario), options_.query).distribution[static_cast<Eigen::Index>(*s)];
  }

  static void verdict(AssertionResult& r, bool pass, std::string detail) {
    r.verdict = pass ? Verdict::Pass : Verdict::Fail;
    r.detail = std::move(detail);
  }

  void run(const Direction& a, AssertionResult& r) const {
    const double eps = a.epsilon.value_or(default_epsilon());
    const double post = probability(a.target, a.scenario);
    const double base = probability(a.target, a.baseline);
    const double delta = post - base;
    r.epsilon = eps;
    r.values = {{"posterior", post}, {"baseline", base}, {"delta", delta}};
    switch (a.expected) {
      case Direction::Expect::Increases:
        verdict(r, delta > eps, delta > eps ? "increased" : "did not increase by more than eps");
        break;
      case Direction::Expect::Decreases:
        verdict(r, -delta > eps, -delta > eps ? "decreased" : "did not decrease by more than eps");
        break;
      case Direction::Expect::Unchanged:
        verdict(r, std::abs(delta) <= eps, std::abs(delta) <= eps ? "unchanged within eps" : "changed by more than eps");
        break;
    }
  }

  void run(const Compare& a, AssertionResult& r) const {
    const double eps = a.epsilon.value_or(default_epsilon());
    const double x = probability(a.target_a, a.scenario_a);
    const double y = probability(a.target_b, a.scenario_b);
    r.epsilon = eps;
    r.values = {{"left", x}, {"right", y}, {"difference", x - y}};
    bool pass = false;
    switch (a.relation) {
      case Relation::Less: pass = y - x > eps; break;
      case Relation::Greater: pass = x - y > eps; break;
      case Relation::LessEqual: pass = x <= y + eps; break;
      case Relation::GreaterEqual: pass = x >= y - eps; break;
      case Relation::Approx: pass = std::abs(x - y) <= eps; break;
    }
    verdict(r, pass, pass ? "relation holds" : "relation " + std::string(to_symbol(a.relation)) + " does not hold");
  }

  void run(const Range& a, AssertionResult& r) const {
    const double p = probability(a.target, a.scenario);
    r.values = {{"posterior", p}, {"lo", a.lo}, {"hi", a.hi}};
    const bool pass = a.lo <= p && p <= a.hi;
    verdict(r, pass, pass ? "within range" : "outside range");
  }

  void run(const Argmax& a, AssertionResult& r) const {
    const double eps = default_epsilon();
    const auto i = net_.index_of(a.node);
    const auto& states = net_.node(i).states;
    const Eigen::VectorXd dist = distribution(a.node, a.scenario);
    r.epsilon = eps;
    Eigen::Index best = 0;
    for (Eigen::Index k = 0; k < dist.size(); ++k) {
      r.values.push_back({"P(" + states[static_cast<std::size_t>(k)] + ")", dist[k]});
      if (dist[k] > dist[best]) best = k;
    }
    const std::string& top = states[static_cast<std::size_t>(best)];
    if (top != a.state) {
      verdict(r, false, "most probable state is " + top);
      return;
    }
    for (Eigen::Index k = 0; k < dist.size(); ++k)
      if (k != best && dist[best] - dist[k] <= eps) {
        verdict(r, false, "tie: " + top + " and " + states[static_cast<std::size_t>(k)] + " within eps");
        return;
      }
    verdict(r, true, top + " is the unique most probable state");
  }

  void run(const Invariant& a, AssertionResult& r) const {
    double eps = a.epsilon.value_or(default_epsilon());
    const auto target = net_.index_of(a.node);
    const Eigen::VectorXd post = distribution(a.node, a.scenario);
    const Eigen::VectorXd prior = distribution(a.node, std::string(kPriorScenario));
    const double diff = (post - prior).cwiseAbs().maxCoeff();
    r.values = {{"max_abs_difference", diff}};
    if (!a.require_d_separation) {
      r.epsilon = eps;
      verdict(r, diff <= eps, diff <= eps ? "distribution unchanged within eps" : "distribution moved by more than eps");
      return;
    }
    eps = std::min(eps, kDSeparationTolerance);
    r.epsilon = eps;
    const auto& ev = evidence(a.scenario);
    std::set<std::size_t> observed;
    for (const auto& [node, state] : ev) observed.insert(node);
    const bool separated = !observed.contains(target) && d_separated(net_, target, observed, {});
    r.values.push_back({"d_separated", separated ? 1.0 : 0.0});
    if (!separated)
      verdict(r, false, a.node + " is not d-separated from the evidence");
    else
      verdict(r, diff <= eps, diff <= eps ? "d-separated and numerically unchanged" : "d-separated but distribution moved");
  }

  void run(const ArcSign& a, AssertionResult& r) const {
    const auto derived = derive_sign(net_, net_.index_of(a.parent), net_.index_of(a.child));
    r.sign = std::string(to_symbol(derived.sign));
    const bool pass = derived.sign == a.expected;
    verdict(r, pass, "derived sign " + *r.sign);
  }

  void run(const Magnitude& a, AssertionResult& r) const {
    const double eps = a.epsilon.value_or(default_epsilon());
    const double prior = probability(a.target, std::string(kPriorScenario));
    const double da = std::abs(probability(a.target, a.scenario_a) - prior);
    const double db = std::abs(probability(a.target, a.scenario_b) - prior);
    r.epsilon = eps;
    r.values = {{"prior", prior}, {"left_change", da}, {"right_change", db}};
    const bool pass = a.relation == Relation::Greater ? da - db > eps : db - da > eps;
    verdict(r, pass, pass ? "relation holds" : "relation " + std::string(to_symbol(a.relation)) + " does not hold");
  }

  const Network& net_;
  const BoundSuite& suite_;
  const CheckOptions& options_;
};

}  // namespace

CheckReport check(const Network& net, const BoundSuite& suite, const CheckOptions& options) {
  CheckReport report;
  report.suite_name = suite.suite.name;
  report.model_name = net.metadata().name;
  report.suite_hash = sha256_hex(serialize_suite(suite.suite));
  report.model_hash = sha256_hex(write_native(net));

  const Evaluator evaluator(net, suite, options);
  const auto& assertions = suite.suite.assertions;
  report.results.resize(assertions.size());
  if (options.parallel && assertions.size() > 1) {
    std::vector<std::future<AssertionResult>> pending;
    pending.reserve(assertions.size());
    for (std::size_t k = 0; k < assertions.size(); ++k)
      pending.push_back(std::async(std::launch::async, [&, k] { return evaluator.evaluate(assertions[k], k); }));
    for (std::size_t k = 0; k < assertions.size(); ++k) report.results[k] = pending[k].get();
  } else {
    for (std::size_t k = 0; k < assertions.size(); ++k) report.results[k] = evaluator.evaluate(assertions[k], k);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Prior export.

PriorExport export_prior(const Network& net, double ess) {
  if (!(ess > 0.0) || !std::isfinite(ess)) throw Error("equivalent sample size must be positive, got " + format_shortest(ess));
  PriorExport out;
  out.ess = ess;
  out.model_name = net.metadata().name;
  for (auto i : net.topological_order()) {
    const auto& node = net.node(i);
    NodePrior np{node.id, node.states, node.parents, {}};
    const auto& table = net.cpt(i);
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
      PriorRow row;
      const auto assignment = net.parent_assignment(i, static_cast<std::size_t>(r));
      for (std::size_t k = 0; k < assignment.size(); ++k)
        row.parent_states.push_back(net.node(net.parents(i)[k]).states[assignment[k]]);
      for (Eigen::Index s = 0; s < table.cols(); ++s) {
        row.alpha.push_back(static_cast<long double>(ess) * static_cast<long double>(table(r, s)));
        if (table(r, s) == 0.0) {
          std::string context;
          for (std::size_t k = 0; k < assignment.size(); ++k)
            context += (k ? ", " : "") + row.parent_states[k];
          out.warnings.push_back("zero pseudo-count: " + node.id + "=" + node.states[static_cast<std::size_t>(s)] +
                                 " given (" + context + ")");
        }
      }
      np.rows.push_back(std::move(row));
    }
    out.nodes.push_back(std::move(np));
  }
  return out;
}

std::string write_prior(const PriorExport& prior) {
  std::ostringstream out;
  out << "# ---------------------------------------------------------------------\n"
         "# CAUTION: prior derived from a qualitative parameterisation.\n"
         "# The probabilities behind these pseudo-counts were picked to reproduce\n"
         "# the intended qualitative behaviour of the model: directions of change,\n"
         "# invariances and orderings. They are not estimates. What deserves prior\n"
         "# weight is those qualitative relationships, not the specific numbers\n"
         "# below. Keep the equivalent sample size small and re-check any learned\n"
         "# parameterisation against the qualitative suite.\n"
         "# ---------------------------------------------------------------------\n";
  for (const auto& w : prior.warnings) out << "# warning: " << w << "\n";
  out << "prior \"" << prior.model_name << "\" ess " << format_shortest(prior.ess) << "\n";
  for (const auto& node : prior.nodes) {
    out << "node " << node.node << " states [";
    for (std::size_t k = 0; k < node.states.size(); ++k) out << (k ? ", " : "") << node.states[k];
    out << "] parents [";
    for (std::size_t k = 0; k < node.parents.size(); ++k) out << (k ? ", " : "") << node.parents[k];
    out << "]\n";
    for (const auto& row : node.rows) {
      out << "  (";
      for (std::size_t k = 0; k < row.parent_states.size(); ++k) out << (k ? ", " : "") << row.parent_states[k];
      out << ") -> (";
      for (std::size_t k = 0; k < row.alpha.size(); ++k) out << (k ? ", " : "") << format_shortest(row.alpha[k]);
      out << ")\n";
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Compare.

std::vector<std::string> structural_differences(const Network& a, const Network& b) {
  std::vector<std::string> diffs;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!b.find(a.id(i))) diffs.push_back("node " + a.id(i) + " missing from second network");
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!a.find(b.id(i))) diffs.push_back("node " + b.id(i) + " missing from first network");
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto j = b.find(a.id(i));
    if (!j) continue;
    const auto& x = a.node(i);
    const auto& y = b.node(*j);
    if (x.states != y.states) diffs.push_back("node " + x.id + ": states differ");
    for (const auto& p : x.parents)
      if (std::find(y.parents.begin(), y.parents.end(), p) == y.parents.end())
        diffs.push_back("arc " + p + " -> " + x.id + " missing from second network");
    for (const auto& p : y.parents)
      if (std::find(x.parents.begin(), x.parents.end(), p) == x.parents.end())
        diffs.push_back("arc " + p + " -> " + x.id + " missing from first network");
    if (diffs.empty() && x.parents != y.parents) diffs.push_back("node " + x.id + ": parent order differs");
  }
  return diffs;
}

ComparisonReport compare(const Network& qualitative, const Network& quantitative,
                         const AssertionSuite& suite, const CheckOptions& options) {
  if (auto diffs = structural_differences(qualitative, quantitative); !diffs.empty()) {
    std::string text = "networks differ in structure:";
    for (const auto& d : diffs) text += "\n  " + d;
    throw StructuralError(text);
  }
  bind_suite(suite, qualitative);
  const BoundSuite bound = bind_suite(suite, quantitative);

  ComparisonReport out;
  out.check = check(quantitative, bound, options);
  out.qualitative_hash = sha256_hex(write_native(qualitative));
  for (auto i : qualitative.topological_order()) {
    const auto j = quantitative.index_of(qualitative.id(i));
    const auto& p = qualitative.cpt(i);
    const auto& q = quantitative.cpt(j);
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      RowDivergence d;
      d.node = qualitative.id(i);
      const auto assignment = qualitative.parent_assignment(i, static_cast<std::size_t>(r));
      for (std::size_t k = 0; k < assignment.size(); ++k)
        d.parent_states.push_back(qualitative.node(qualitative.parents(i)[k]).states[assignment[k]]);
      d.max_abs_difference = (p.row(r) - q.row(r)).cwiseAbs().maxCoeff();
      out.divergence.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace qualbn
