#pragma once

#include <qualbn/network.hpp>

#include <set>
#include <vector>

namespace qualbn::testing {

/// d-separation by listing every simple trail of the skeleton and testing each
/// for activity. Exponential; only for small graphs.
class TrailOracle {
 public:
  explicit TrailOracle(const Network& net) : net_(net) {}

  bool separated(std::size_t x, std::size_t y, const std::set<std::size_t>& given) const {
    if (x == y) return false;
    std::vector<std::size_t> trail{x};
    std::vector<bool> on_trail(net_.size(), false);
    on_trail[x] = true;
    return !active_trail_exists(trail, on_trail, y, given);
  }

 private:
  bool descendant_observed(std::size_t v, const std::set<std::size_t>& given) const {
    if (given.contains(v)) return true;
    for (auto c : net_.children(v))
      if (descendant_observed(c, given)) return true;
    return false;
  }

  bool trail_active(const std::vector<std::size_t>& t, const std::set<std::size_t>& given) const {
    for (std::size_t k = 1; k + 1 < t.size(); ++k) {
      const bool collider = net_.has_arc(t[k - 1], t[k]) && net_.has_arc(t[k + 1], t[k]);
      if (collider ? !descendant_observed(t[k], given) : given.contains(t[k])) return false;
    }
    return true;
  }

  bool active_trail_exists(std::vector<std::size_t>& trail, std::vector<bool>& on_trail, std::size_t y,
                           const std::set<std::size_t>& given) const {
    const auto v = trail.back();
    if (v == y) return trail_active(trail, given);
    std::vector<std::size_t> next(net_.parents(v).begin(), net_.parents(v).end());
    next.insert(next.end(), net_.children(v).begin(), net_.children(v).end());
    for (auto w : next) {
      if (on_trail[w]) continue;
      trail.push_back(w);
      on_trail[w] = true;
      const bool found = active_trail_exists(trail, on_trail, y, given);
      trail.pop_back();
      on_trail[w] = false;
      if (found) return true;
    }
    return false;
  }

  const Network& net_;
};

}  // namespace qualbn::testing
