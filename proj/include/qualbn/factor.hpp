#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "qualbn/error.hpp"

namespace qualbn {

/// Dense nonnegative table over a set of discrete variables. Variables are
/// identified by index; values are stored row-major with the first scope
/// variable varying slowest.
template <typename Scalar>
class BasicFactor {
 public:
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  /// Unit factor over the empty scope.
  BasicFactor() : values_(Values::Ones(1)) {}

  BasicFactor(std::vector<std::size_t> scope, std::vector<std::size_t> cards, Values values)
      : scope_(std::move(scope)), cards_(std::move(cards)), values_(std::move(values)) {
    if (scope_.size() != cards_.size()) throw Error("factor: scope and cardinalities differ in length");
    if (static_cast<std::size_t>(values_.size()) != volume(cards_))
      throw Error("factor: value count does not match scope");
    for (Eigen::Index k = 0; k < values_.size(); ++k)
      if (!(values_[k] >= Scalar(0)) || !std::isfinite(static_cast<double>(values_[k])))
        throw Error("factor: values must be finite and nonnegative");
  }

  const std::vector<std::size_t>& scope() const noexcept { return scope_; }
  const std::vector<std::size_t>& cards() const noexcept { return cards_; }
  const Values& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }

  bool contains(std::size_t var) const {
    return std::find(scope_.begin(), scope_.end(), var) != scope_.end();
  }
  std::size_t position(std::size_t var) const {
    return static_cast<std::size_t>(std::find(scope_.begin(), scope_.end(), var) - scope_.begin());
  }

  Scalar sum() const { return values_.sum(); }

  static std::size_t volume(const std::vector<std::size_t>& cards) {
    return std::accumulate(cards.begin(), cards.end(), std::size_t{1}, std::multiplies<>());
  }

  /// Row-major strides of this factor's layout.
  std::vector<std::size_t> strides() const {
    std::vector<std::size_t> s(cards_.size(), 1);
    for (std::size_t k = cards_.size(); k-- > 1;) s[k - 1] = s[k] * cards_[k];
    return s;
  }

 private:
  std::vector<std::size_t> scope_;
  std::vector<std::size_t> cards_;
  Values values_;
};

using Factor = BasicFactor<double>;

namespace detail {

/// Stride of `var` inside `f`, or 0 when `f` does not depend on it.
template <typename Scalar>
std::vector<std::size_t> strides_in(const BasicFactor<Scalar>& f, const std::vector<std::size_t>& scope) {
  const auto own = f.strides();
  std::vector<std::size_t> out(scope.size(), 0);
  for (std::size_t k = 0; k < scope.size(); ++k)
    if (f.contains(scope[k])) out[k] = own[f.position(scope[k])];
  return out;
}

}  // namespace detail

/// Pointwise product over the union of scopes (a's scope, then b's new variables).
template <typename Scalar>
BasicFactor<Scalar> product(const BasicFactor<Scalar>& a, const BasicFactor<Scalar>& b) {
  std::vector<std::size_t> scope = a.scope();
  std::vector<std::size_t> cards = a.cards();
  for (std::size_t k = 0; k < b.scope().size(); ++k)
    if (!a.contains(b.scope()[k])) {
      scope.push_back(b.scope()[k]);
      cards.push_back(b.cards()[k]);
    } else if (a.cards()[a.position(b.scope()[k])] != b.cards()[k]) {
      throw Error("factor product: cardinality mismatch");
    }

  const auto sa = detail::strides_in(a, scope);
  const auto sb = detail::strides_in(b, scope);
  const std::size_t n = BasicFactor<Scalar>::volume(cards);
  typename BasicFactor<Scalar>::Values out(static_cast<Eigen::Index>(n));

  std::vector<std::size_t> counter(scope.size(), 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t idx = 0; idx < n; ++idx) {
    out[static_cast<Eigen::Index>(idx)] = a.values()[ia] * b.values()[ib];
    // Odometer increment, last variable fastest.
    for (std::size_t k = scope.size(); k-- > 0;) {
      if (++counter[k] < cards[k]) {
        ia += sa[k];
        ib += sb[k];
        break;
      }
      ia -= sa[k] * (cards[k] - 1);
      ib -= sb[k] * (cards[k] - 1);
      counter[k] = 0;
    }
  }
  return BasicFactor<Scalar>(std::move(scope), std::move(cards), std::move(out));
}

/// Sums `var` out of `f`. A factor not mentioning `var` is returned as is.
template <typename Scalar>
BasicFactor<Scalar> sum_out(const BasicFactor<Scalar>& f, std::size_t var) {
  if (!f.contains(var)) return f;
  const std::size_t pos = f.position(var);
  std::vector<std::size_t> scope = f.scope(), cards = f.cards();
  const std::size_t card = cards[pos];
  scope.erase(scope.begin() + static_cast<std::ptrdiff_t>(pos));
  cards.erase(cards.begin() + static_cast<std::ptrdiff_t>(pos));

  const std::size_t inner = f.strides()[pos];
  const std::size_t outer = f.size() / (inner * card);
  typename BasicFactor<Scalar>::Values out =
      BasicFactor<Scalar>::Values::Zero(static_cast<Eigen::Index>(outer * inner));
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < card; ++c)
      for (std::size_t i = 0; i < inner; ++i)
        out[static_cast<Eigen::Index>(o * inner + i)] +=
            f.values()[static_cast<Eigen::Index>((o * card + c) * inner + i)];
  return BasicFactor<Scalar>(std::move(scope), std::move(cards), std::move(out));
}

/// Restricts `f` to `var = state`, dropping `var` from the scope.
template <typename Scalar>
BasicFactor<Scalar> reduce(const BasicFactor<Scalar>& f, std::size_t var, std::size_t state) {
  if (!f.contains(var)) return f;
  const std::size_t pos = f.position(var);
  std::vector<std::size_t> scope = f.scope(), cards = f.cards();
  const std::size_t card = cards[pos];
  if (state >= card) throw Error("factor reduce: state out of range");
  scope.erase(scope.begin() + static_cast<std::ptrdiff_t>(pos));
  cards.erase(cards.begin() + static_cast<std::ptrdiff_t>(pos));

  const std::size_t inner = f.strides()[pos];
  const std::size_t outer = f.size() / (inner * card);
  typename BasicFactor<Scalar>::Values out(static_cast<Eigen::Index>(outer * inner));
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i)
      out[static_cast<Eigen::Index>(o * inner + i)] =
          f.values()[static_cast<Eigen::Index>((o * card + state) * inner + i)];
  return BasicFactor<Scalar>(std::move(scope), std::move(cards), std::move(out));
}

/// Scales values to sum to one. Throws when the total mass is zero.
template <typename Scalar>
BasicFactor<Scalar> normalized(const BasicFactor<Scalar>& f) {
  const Scalar total = f.sum();
  if (!(total > Scalar(0))) throw Error("factor normalize: zero mass");
  return BasicFactor<Scalar>(f.scope(), f.cards(), f.values() / total);
}

}  // namespace qualbn
