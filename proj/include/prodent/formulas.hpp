#pragma once

// Relative entropy rate H(X.Y | Y) of a censored process: the return-time
// formula, its Markov and exchangeable closed forms, the upper bound through
// bridge entropies, and the bilateral-determinism diagnostics.

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "prodent/entropy.hpp"
#include "prodent/models.hpp"
#include "prodent/returns.hpp"

namespace prodent {

enum class Method { exact, closed_form, monte_carlo, truncated_bound };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::closed_form: return "closed-form";
    case Method::monte_carlo: return "monte-carlo";
    case Method::truncated_bound: return "truncated-bound";
  }
  return "exact";
}

/// A value in bits with a certified enclosure; `std_error` is set exactly when
/// the value is a Monte Carlo average.
struct EntropyEstimate {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> std_error;
  Method method = Method::exact;

  void validate(double tol = 1e-12) const {
    require(lower <= value + tol && value <= upper + tol, ErrorKind::InvalidArgument, "estimate outside its enclosure");
    require(std_error.has_value() == (method == Method::monte_carlo), ErrorKind::InvalidArgument,
            "std_error must accompany exactly the monte-carlo estimates");
  }
};

// ---------------------------------------------------------------------------
// Exchangeable conditional entropies via count classes

struct ExchangeablePrefix {
  double next_given_prefix = 0.0;  // H(X_0 | X_1, ..., X_m)
  double mixing_given_prefix = 0.0;  // H(component | X_1, ..., X_m)
};

namespace detail {

/// Calls fn(counts) for every composition of n into `parts` nonnegative parts.
template <class Fn>
void for_each_composition(std::size_t n, std::size_t parts, Fn&& fn, std::size_t budget) {
  std::vector<std::size_t> c(parts, 0);
  std::size_t visited = 0;
  auto rec = [&](auto&& self, std::size_t pos, std::size_t left) -> void {
    if (pos + 1 == parts) {
      c[pos] = left;
      check_budget(++visited, budget);
      fn(c);
      return;
    }
    for (std::size_t k = 0; k <= left; ++k) {
      c[pos] = k;
      self(self, pos + 1, left - k);
    }
  };
  rec(rec, 0, n);
}

/// H(X_1..X_n) of a de Finetti mixture, summing over count classes.
inline double exchangeable_block_entropy(const ExchangeableMixtureModel& m, std::size_t n, std::size_t budget) {
  if (n == 0) return 0.0;
  const std::size_t a = m.alphabet.size();
  std::vector<std::vector<double>> log_q(m.components.size(), std::vector<double>(a));
  for (std::size_t c = 0; c < m.components.size(); ++c)
    for (std::size_t s = 0; s < a; ++s)
      log_q[c][s] = m.components[c][s] > 0.0 ? std::log(m.components[c][s]) : -INFINITY;
  double h = 0.0;
  const double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
  for_each_composition(
      n, a,
      [&](const std::vector<std::size_t>& counts) {
        // log P(one specific sequence with these counts)
        double mx = -INFINITY;
        std::vector<double> terms(m.components.size(), -INFINITY);
        for (std::size_t c = 0; c < m.components.size(); ++c) {
          if (m.weights[c] <= 0.0) continue;
          double t = std::log(m.weights[c]);
          for (std::size_t s = 0; s < a && std::isfinite(t); ++s)
            if (counts[s] > 0) t += static_cast<double>(counts[s]) * log_q[c][s];
          terms[c] = t;
          mx = std::max(mx, t);
        }
        if (!std::isfinite(mx)) return;
        double acc = 0.0;
        for (double t : terms)
          if (std::isfinite(t)) acc += std::exp(t - mx);
        const double log_p = mx + std::log(acc);
        double log_coef = lg_n1;
        for (auto k : counts) log_coef -= std::lgamma(static_cast<double>(k) + 1.0);
        h += std::exp(log_coef + log_p) * (-log_p / std::log(2.0));
      },
      budget);
  return h;
}

}  // namespace detail

inline ExchangeablePrefix exchangeable_prefix_entropy(const ExchangeableMixtureModel& m, std::size_t prefix,
                                                      std::size_t budget = kDefaultMarginalBudget) {
  const double h_m = detail::exchangeable_block_entropy(m, prefix, budget);
  const double h_m1 = detail::exchangeable_block_entropy(m, prefix + 1, budget);
  double component_rate = 0.0;
  for (std::size_t c = 0; c < m.components.size(); ++c) component_rate += m.weights[c] * shannon(m.components[c]);
  ExchangeablePrefix out;
  out.next_given_prefix = std::max(0.0, h_m1 - h_m);
  // H(C | X^m) = H(C) + H(X^m | C) - H(X^m)
  out.mixing_given_prefix =
      std::max(0.0, shannon(m.weights) + static_cast<double>(prefix) * component_rate - h_m);
  return out;
}

// ---------------------------------------------------------------------------
// Inner conditional entropy H(X_0 | X at past return offsets)

/// Memoized H(X_0 | X_{o_1}, ..., X_{o_m}) for strictly increasing negative
/// offsets. Markov models collapse to the nearest offset; exchangeable models
/// depend only on the number of offsets.
class PastConditionalEntropy {
 public:
  explicit PastConditionalEntropy(const ProcessModel& x, std::size_t budget = kDefaultMarginalBudget)
      : x_(x), budget_(budget), chain_(as_markov(x)) {}

  double operator()(const std::vector<std::int64_t>& offsets) {
    std::vector<std::int64_t> key = offsets;
    if (x_.as<IidModel>() || offsets.empty()) {
      key.clear();
    } else if (chain_) {
      key = {offsets.back()};
    } else if (x_.as<ExchangeableMixtureModel>()) {
      key = {static_cast<std::int64_t>(offsets.size())};
    }
    {
      std::lock_guard lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    const double h = compute(offsets);
    std::lock_guard lock(mu_);
    cache_.emplace(std::move(key), h);
    return h;
  }

 private:
  double compute(const std::vector<std::int64_t>& offsets) const {
    if (x_.as<IidModel>() || offsets.empty()) return symbol_entropy(x_);
    if (chain_) return markov_k_step_conditional(*chain_, static_cast<std::uint64_t>(-offsets.back()));
    if (const auto* m = x_.as<ExchangeableMixtureModel>())
      return exchangeable_prefix_entropy(*m, offsets.size(), budget_).next_given_prefix;
    std::vector<std::int64_t> idx = offsets;
    idx.push_back(0);
    const auto joint = marginal(x_, idx, budget_);
    std::vector<std::size_t> past(offsets.size());
    std::iota(past.begin(), past.end(), 0);
    return conditional_entropy(joint, past);
  }

  const ProcessModel& x_;
  std::size_t budget_;
  std::optional<MarkovModel> chain_;
  std::mutex mu_;
  std::map<std::vector<std::int64_t>, double> cache_;
};

struct TheoremAOptions {
  std::size_t m_returns = 8;
  SampleOptions sampling{};
  std::size_t budget = kDefaultMarginalBudget;
  std::size_t rate_block = 8;
};

namespace detail {

/// The m most recent arrivals before 0 of a conditioned cycle, oldest first.
inline std::vector<std::int64_t> cycle_past_returns(const Word& cyc, std::size_t m) {
  std::vector<std::int64_t> out;
  const auto p = static_cast<std::int64_t>(cyc.size());
  for (std::int64_t j = -1; out.size() < m; --j)
    if (cyc[static_cast<std::size_t>(floor_mod(j, p))] == 1) out.push_back(j);
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// theta * E_{Y_0=1} H(X_0 | X_{r_-1}, ..., X_{r_-m}).
///
/// Exact when Y is periodic or explicit (finitely many conditioned
/// realizations); otherwise a Monte Carlo average over conditioned
/// realizations, each inner term computed exactly. The m-truncated value
/// dominates the true rate; the lower end is theta times a lower bound on
/// the entropy rate of X. For i.i.d. and Markov X the truncation is exact.
inline EntropyEstimate relative_entropy_rate_A(const ProcessModel& x, const ZeroOneView& y,
                                               const TheoremAOptions& opt = {}) {
  require(y.theta > 0.0, ErrorKind::InvalidTheta, "P(Y_0 = 1) must be positive");
  require(opt.m_returns >= 1, ErrorKind::InvalidArgument, "m_returns must be positive");
  const double theta = y.theta;
  const RateBracket rate = entropy_rate(x, opt.rate_block, opt.budget);
  const bool truncation_exact = x.as<IidModel>() != nullptr || as_markov(x).has_value();

  if (x.as<IidModel>()) {
    const double v = theta * symbol_entropy(x);
    return {v, v, v, std::nullopt, Method::exact};
  }

  PastConditionalEntropy inner(x, opt.budget);
  EntropyEstimate est;
  if (auto cycles = detail::conditioned_cycles(y)) {
    double s = 0.0;
    for (const auto& [cyc, w] : *cycles) s += w * inner(detail::cycle_past_returns(cyc, opt.m_returns));
    est.value = theta * s;
    est.upper = est.value;
    est.method = Method::exact;
  } else {
    const std::size_t m = opt.m_returns;
    const auto past_window = static_cast<std::size_t>(std::ceil(8.0 * static_cast<double>(m + 1) / theta)) + 64;
    const bool extendable = y.model.as<IidModel>() != nullptr;
    const auto acc = chunked_reduce<MomentAcc>(
        opt.sampling.n_samples, opt.sampling.threads, [&](std::size_t b, std::size_t e) {
          MomentAcc a;
          for (std::size_t i = b; i < e; ++i) {
            const auto seed = derive_seed(opt.sampling.seed, i);
            std::size_t past = past_window;
            while (true) {
              const auto w = sample_conditioned(y, past, 0, seed);
              std::size_t ones = 0;
              for (std::size_t j = 0; j < past; ++j) ones += w.y[j] == 1;
              if (ones >= m) {
                const auto r = extract_returns(w.y, w.origin, m, 0);
                a.add(inner(std::vector<std::int64_t>(r.arrivals.begin(), r.arrivals.begin() + static_cast<std::ptrdiff_t>(m))));
                break;
              }
              if (!extendable)
                fail(ErrorKind::InsufficientArrivals, "conditioned window holds fewer than m past returns");
              past *= 2;
            }
          }
          return a;
        });
    est.value = theta * acc.mean();
    est.std_error = theta * acc.stderr_of_mean();
    est.upper = est.value + kStderrMultiplier * *est.std_error;
    est.method = Method::monte_carlo;
  }
  if (truncation_exact && est.method == Method::exact) {
    est.lower = est.value;
  } else {
    est.lower = std::min(est.value, theta * rate.lower);
  }
  return est;
}

// ---------------------------------------------------------------------------
// Markov and exchangeable closed forms

/// theta * sum_{k <= K} P(R_1 = k) H(X_k | X_0). Mass beyond the truncation
/// K only widens the upper end, by theta * tail * H(X_0).
inline EntropyEstimate markov_product_entropy(const MarkovModel& chain, const R1Law& law, double theta) {
  require(theta > 0.0, ErrorKind::InvalidTheta, "P(Y_0 = 1) must be positive");
  require(law.truncation() >= 1, ErrorKind::InvalidArgument, "empty R1 law");
  std::vector<double> hk(law.truncation());
  for (std::size_t k = 1; k <= hk.size(); ++k) hk[k - 1] = markov_k_step_conditional(chain, k);
  double s = 0.0;
  double second = 0.0;
  for (std::size_t k = 0; k < hk.size(); ++k) {
    s += law.probs[k] * hk[k];
    second += law.probs[k] * hk[k] * hk[k];
  }
  EntropyEstimate e;
  e.value = theta * s;
  e.lower = e.value;
  e.upper = e.value + theta * law.tail * shannon(chain.stationary);
  if (!law.exact) {
    const double n = law.samples > 0 ? static_cast<double>(law.samples) : 1.0;
    e.std_error = theta * std::sqrt(std::max(0.0, second - s * s) / n);
    e.method = Method::monte_carlo;
    e.lower = e.value - kStderrMultiplier * *e.std_error;
    e.upper += kStderrMultiplier * *e.std_error;
  } else {
    e.method = law.tail > 0.0 ? Method::truncated_bound : Method::closed_form;
  }
  return e;
}

/// theta * sum_i w_i H(component_i): the mixture attains the lower bound.
inline EntropyEstimate exchangeable_product_entropy(const ExchangeableMixtureModel& mix, double theta) {
  require(theta > 0.0, ErrorKind::InvalidTheta, "P(Y_0 = 1) must be positive");
  double h = 0.0;
  for (std::size_t c = 0; c < mix.components.size(); ++c) h += mix.weights[c] * shannon(mix.components[c]);
  const double v = theta * h;
  return {v, v, v, std::nullopt, Method::closed_form};
}

struct C4Bounds {
  double lower = 0.0;  // theta * H(X), or theta times a lower bound on it
  double upper = 0.0;  // theta * H(X_0)
  bool lower_exact = true;
};

inline C4Bounds c4_bounds(const ProcessModel& x, double theta, std::size_t rate_block = 8,
                          std::size_t budget = kDefaultMarginalBudget) {
  require(theta > 0.0, ErrorKind::InvalidTheta, "P(Y_0 = 1) must be positive");
  const auto rate = entropy_rate(x, rate_block, budget);
  return {theta * rate.lower, theta * symbol_entropy(x), rate.exact};
}

/// h - theta^2 sum_{k <= K} P(R_1 = k) bridge(k). For Markov X the
/// conditional entropy given the whole past and all later returns reduces to
/// the bridge entropy, so this is a certified upper bound; dropping the tail
/// mass (bridge >= 0) keeps it one. The lower end is theta * h, which every
/// admissible H(M|Y) exceeds.
inline EntropyEstimate theorem_b_upper_markov(const MarkovModel& chain, const R1Law& law, double theta) {
  require(theta > 0.0, ErrorKind::InvalidTheta, "P(Y_0 = 1) must be positive");
  require(law.truncation() >= 1, ErrorKind::InvalidArgument, "empty R1 law");
  const double h = markov_entropy_rate(chain);
  double s = 0.0;
  double second = 0.0;
  for (std::size_t k = 1; k <= law.truncation(); ++k) {
    if (law.probs[k - 1] <= 0.0) continue;
    const double b = markov_bridge_entropy(chain, k);
    s += law.probs[k - 1] * b;
    second += law.probs[k - 1] * b * b;
  }
  EntropyEstimate e;
  e.value = h - theta * theta * s;
  e.upper = e.value;
  e.lower = std::min(e.value, theta * h);
  if (!law.exact) {
    const double n = law.samples > 0 ? static_cast<double>(law.samples) : 1.0;
    e.std_error = theta * theta * std::sqrt(std::max(0.0, second - s * s) / n);
    e.method = Method::monte_carlo;
    e.upper += kStderrMultiplier * *e.std_error;
    e.lower = std::min(e.lower, e.value - kStderrMultiplier * *e.std_error);
  } else {
    e.method = law.tail > 0.0 ? Method::truncated_bound : Method::closed_form;
  }
  return e;
}

inline EntropyEstimate theorem_b_upper(const ProcessModel& x, const R1Law& law, double theta) {
  auto chain = as_markov(x);
  if (!chain) fail(ErrorKind::NotMarkov, "the certified bound needs a Markov model, got " + x.kind_name());
  return theorem_b_upper_markov(*chain, law, theta);
}

/// Uncertified analogue for any model: conditions the gap X_[1,k-1] only on
/// X_[-past_len, 0] and X_k. Dropping conditioning enlarges the subtracted
/// term, so the result may undercut the true bound; it is always tagged
/// truncated-bound.
inline EntropyEstimate theorem_b_truncated_estimate(const ProcessModel& x, const R1Law& law, double theta,
                                                    std::size_t past_len = 2,
                                                    std::size_t budget = kDefaultMarginalBudget) {
  require(theta > 0.0, ErrorKind::InvalidTheta, "P(Y_0 = 1) must be positive");
  const auto rate = entropy_rate(x, 8, budget);
  double s = 0.0;
  for (std::size_t k = 2; k <= law.truncation(); ++k) {
    if (law.probs[k - 1] <= 0.0) continue;
    std::vector<std::int64_t> idx;
    for (auto j = -static_cast<std::int64_t>(past_len); j <= static_cast<std::int64_t>(k); ++j) idx.push_back(j);
    const auto joint = marginal(x, idx, budget);
    std::vector<std::size_t> cond;
    for (std::size_t j = 0; j <= past_len; ++j) cond.push_back(j);
    cond.push_back(idx.size() - 1);
    s += law.probs[k - 1] * conditional_entropy(joint, cond);
  }
  const double v = rate.mid() - theta * theta * s;
  return {v, std::min(v, theta * rate.lower), std::max(v, rate.upper), std::nullopt, Method::truncated_bound};
}

// ---------------------------------------------------------------------------
// Bilateral determinism

/// d[k][m] = H(X_[0,k] | X_[-m,-1], X_[k+1,k+m]) for 0 <= k <= k_max,
/// 0 <= m <= m_max (m = 0 is the unconditioned block entropy).
struct DeterminismProfile {
  std::size_t k_max = 0;
  std::size_t m_max = 0;
  std::vector<std::vector<double>> d;

  double at(std::size_t k, std::size_t m) const { return d.at(k).at(m); }
};

inline DeterminismProfile determinism_profile(const ProcessModel& x, std::size_t k_max, std::size_t m_max,
                                              std::size_t budget = kDefaultMarginalBudget) {
  DeterminismProfile p{k_max, m_max, std::vector<std::vector<double>>(k_max + 1, std::vector<double>(m_max + 1))};
  for (std::size_t k = 0; k <= k_max; ++k) {
    for (std::size_t m = 0; m <= m_max; ++m) {
      const std::size_t len = k + 1 + 2 * m;
      const auto joint = block_marginal(x, len, budget);
      std::vector<std::size_t> cond;
      for (std::size_t j = 0; j < m; ++j) cond.push_back(j);
      for (std::size_t j = m + k + 1; j < len; ++j) cond.push_back(j);
      p.d[k][m] = conditional_entropy(joint, cond);
    }
  }
  return p;
}

/// D(k, m) for a Markov chain and any m >= 1: (k+2) h - H(X_{k+2} | X_0).
inline double markov_determinism_closed_form(const MarkovModel& chain, std::size_t k) {
  return markov_bridge_entropy(chain, k + 2);
}

/// sum_x pi(x) TV(P^n(x, .), pi).
inline double markov_beta(const MarkovModel& chain, std::uint64_t n) {
  require(n >= 1, ErrorKind::InvalidArgument, "n must be positive");
  const Matrix pn = transition_power(chain.transition, n);
  double beta = 0.0;
  for (std::size_t x = 0; x < chain.states(); ++x) {
    if (chain.stationary[x] <= 0.0) continue;
    double tv = 0.0;
    for (std::size_t y = 0; y < chain.states(); ++y)
      tv += std::abs(pn(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) - chain.stationary[y]);
    beta += chain.stationary[x] * 0.5 * tv;
  }
  return beta;
}

// ---------------------------------------------------------------------------
// Strict entropy drop

struct WwwVerdict {
  Tri return_support_infinite = Tri::unknown;
  Tri not_bilaterally_deterministic = Tri::unknown;
  double determinism_evidence = 0.0;  // D(k_max, m_max)
  bool premises_hold = false;
  std::optional<double> certified_gap;  // h - (B) bound, Markov X only
  bool strict_drop_certified = false;   // both premises and a positive gap
};

struct WwwOptions {
  std::size_t k_max = 4;
  std::size_t m_max = 2;
  std::size_t budget = kDefaultMarginalBudget;
  double tolerance = 1e-12;
};

inline WwwVerdict www_check(const ProcessModel& x, const ZeroOneView& y, const WwwOptions& opt = {}) {
  WwwVerdict v;
  if (y.model.as<IidModel>())
    v.return_support_infinite = y.theta < 1.0 ? Tri::yes : Tri::no;
  else if (y.model.as<PeriodicOrbitModel>() || y.model.as<ExplicitFiniteSupportModel>())
    v.return_support_infinite = Tri::no;

  const auto chain = as_markov(x);
  if (chain)
    v.determinism_evidence = markov_determinism_closed_form(*chain, opt.k_max);
  else
    v.determinism_evidence = determinism_profile(x, opt.k_max, opt.m_max, opt.budget).at(opt.k_max, opt.m_max);
  v.not_bilaterally_deterministic = v.determinism_evidence > opt.tolerance ? Tri::yes : Tri::no;
  v.premises_hold = v.return_support_infinite == Tri::yes && v.not_bilaterally_deterministic == Tri::yes;

  if (chain && (y.model.as<IidModel>() || detail::conditioned_cycles(y))) {
    const auto law = r1_distribution(y);
    const double h = markov_entropy_rate(*chain);
    const double gap = h - theorem_b_upper_markov(*chain, law, y.theta).value;
    v.certified_gap = gap;
    v.strict_drop_certified = v.premises_hold && gap > opt.tolerance;
  }
  return v;
}

}  // namespace prodent
