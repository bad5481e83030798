#pragma once

// Shannon and conditional entropy in bits, Markov closed forms, and entropy
// rate brackets for every model family.

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "prodent/distribution.hpp"
#include "prodent/models.hpp"

namespace prodent {

/// -sum p log2 p with 0 log 0 = 0.
inline double shannon(std::span<const double> probs) noexcept {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log2(p);
  return h > 0.0 ? h : 0.0;
}

inline double shannon(const Distribution& d) noexcept { return shannon(d.probs); }

/// H(rest | given) = H(joint) - H(joint restricted to `given`).
inline double conditional_entropy(const Distribution& joint, std::span<const std::size_t> given) {
  const double h = shannon(joint) - shannon(joint.project(given));
  return h > 0.0 ? h : 0.0;
}

/// H(A | B) for a joint law over pairs (a, b).
inline double conditional_entropy(const Distribution& pairs) {
  require(pairs.arity() == 2, ErrorKind::InvalidArgument, "expected a law over pairs");
  const std::size_t b[] = {1};
  return conditional_entropy(pairs, b);
}

/// sum_x pi(x) H(P^k(x, .)) = H(X_k | X_0).
inline double markov_k_step_conditional(const MarkovModel& chain, std::uint64_t k) {
  require(k >= 1, ErrorKind::InvalidArgument, "k must be positive");
  const Matrix pk = transition_power(chain.transition, k);
  double h = 0.0;
  std::vector<double> row(chain.states());
  for (std::size_t x = 0; x < chain.states(); ++x) {
    if (chain.stationary[x] <= 0.0) continue;
    for (std::size_t y = 0; y < row.size(); ++y) row[y] = pk(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    h += chain.stationary[x] * shannon(row);
  }
  return h;
}

inline double markov_entropy_rate(const MarkovModel& chain) { return markov_k_step_conditional(chain, 1); }

/// H(X_[1,k-1] | X_0, X_k) = k h - H(X_k | X_0); zero for k = 1.
inline double markov_bridge_entropy(const MarkovModel& chain, std::uint64_t k) {
  require(k >= 1, ErrorKind::InvalidArgument, "k must be positive");
  if (k == 1) return 0.0;
  const double b = static_cast<double>(k) * markov_entropy_rate(chain) - markov_k_step_conditional(chain, k);
  return b > 0.0 ? b : 0.0;
}

/// H(X_[0, n-1]).
inline double block_entropy(const ProcessModel& model, std::size_t n, std::size_t budget = kDefaultMarginalBudget) {
  require(n >= 1, ErrorKind::InvalidArgument, "block length must be positive");
  return shannon(block_marginal(model, n, budget));
}

/// H(X_0).
inline double symbol_entropy(const ProcessModel& model) { return shannon(symbol_probs(model)); }

/// Entropy rate, or a certified bracket where no closed form is available.
struct RateBracket {
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;

  double mid() const noexcept { return 0.5 * (lower + upper); }
};

/// For function-of-Markov models the bracket is
///   H(X_n | X_[1,n-1], hidden window at 1) <= h <= H(X_n | X_[1,n-1]),
/// the hidden window being the w-1 (at least one) hidden symbols that
/// separate past outputs from future ones.
inline RateBracket entropy_rate(const ProcessModel& model, std::size_t n = 8,
                                std::size_t budget = kDefaultMarginalBudget) {
  if (const auto* m = model.as<IidModel>()) {
    const double h = shannon(m->probs);
    return {h, h, true};
  }
  if (const auto* m = model.as<MarkovModel>()) {
    const double h = markov_entropy_rate(*m);
    return {h, h, true};
  }
  if (const auto* m = model.as<ExchangeableMixtureModel>()) {
    double h = 0.0;
    for (std::size_t c = 0; c < m->components.size(); ++c) h += m->weights[c] * shannon(m->components[c]);
    return {h, h, true};
  }
  if (model.as<PeriodicOrbitModel>() || model.as<ExplicitFiniteSupportModel>()) return {0.0, 0.0, true};

  const auto& fom = *model.as<FunctionOfMarkovModel>();
  if (auto chain = as_markov(model)) {
    const double h = markov_entropy_rate(*chain);
    return {h, h, true};
  }
  require(n >= 2, ErrorKind::InvalidArgument, "bracket needs n >= 2");
  std::vector<std::int64_t> idx(n);
  std::iota(idx.begin(), idx.end(), 1);
  std::vector<std::size_t> rest(n - 1);
  std::iota(rest.begin(), rest.end(), 0);

  const auto joint = function_of_markov_joint(fom, idx, {}, budget);
  const double upper = shannon(joint) - shannon(joint.project(rest));

  std::vector<std::int64_t> hidden(static_cast<std::size_t>(std::max(1, fom.window - 1)));
  std::iota(hidden.begin(), hidden.end(), 1);
  const auto with_hidden = function_of_markov_joint(fom, idx, hidden, budget);
  std::vector<std::size_t> cond(rest);
  for (std::size_t j = 0; j < hidden.size(); ++j) cond.push_back(n + j);
  const double lower = shannon(with_hidden) - shannon(with_hidden.project(cond));
  return {std::max(0.0, std::min(lower, upper)), std::max(0.0, upper), false};
}

}  // namespace prodent
