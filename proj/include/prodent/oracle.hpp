#pragma once

// Independent cross-checks: exact conditional block entropies by
// enumeration, and plug-in estimators with bootstrap standard errors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "prodent/entropy.hpp"
#include "prodent/formulas.hpp"
#include "prodent/models.hpp"
#include "prodent/rng.hpp"

namespace prodent {

inline constexpr std::size_t kDefaultOracleBudget = std::size_t{1} << 24;

struct OracleOptions {
  std::size_t budget = kDefaultOracleBudget;
  unsigned threads = 1;
};

/// H(X_[0,n) . Y_[0,n) | Y_[0,n)) = sum_y P(y) H(X restricted to the ones of y).
/// Y-words with the same ones pattern up to translation share one term.
inline double exact_conditional_block_entropy(const ProcessModel& x, const ProcessModel& y, std::size_t n,
                                              const OracleOptions& opt = {}) {
  require(n >= 1, ErrorKind::InvalidArgument, "block length must be positive");
  require(y.alphabet() == Alphabet::binary(), ErrorKind::InvalidModel, "Y must take values in {0, 1}");
  const auto words = block_marginal(y, n, opt.budget);
  std::map<std::vector<std::int64_t>, double> patterns;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::vector<std::int64_t> ones;
    for (std::size_t j = 0; j < n; ++j)
      if (words.support[i][j] == 1) ones.push_back(static_cast<std::int64_t>(j));
    if (ones.empty()) continue;
    const auto first = ones.front();
    for (auto& o : ones) o -= first;
    patterns[ones] += words.probs[i];
  }
  std::vector<const std::pair<const std::vector<std::int64_t>, double>*> items;
  for (const auto& kv : patterns) items.push_back(&kv);

  struct Sum {
    double total = 0.0;
    void merge(const Sum& o) { total += o.total; }
  };
  const auto acc = chunked_reduce<Sum>(
      items.size(), opt.threads,
      [&](std::size_t b, std::size_t e) {
        Sum s;
        for (std::size_t i = b; i < e; ++i) s.total += items[i]->second * shannon(marginal(x, items[i]->first, opt.budget));
        return s;
      },
      16);
  return acc.total;
}

/// H_1, ..., H_N of the conditional blocks.
inline std::vector<double> exact_conditional_block_entropies(const ProcessModel& x, const ProcessModel& y,
                                                             std::size_t n_max, const OracleOptions& opt = {}) {
  std::vector<double> out;
  for (std::size_t n = 1; n <= n_max; ++n) out.push_back(exact_conditional_block_entropy(x, y, n, opt));
  return out;
}

struct RateEstimates {
  std::vector<double> per_n;       // H_n / n
  std::vector<double> increments;  // (H_n - H_{n-step}) / step for n > step
};

/// Both rate sequences from H_1..H_N. `step` should be a period of Y when Y
/// is periodic, so that increments cover whole periods.
inline RateEstimates rate_estimates(std::span<const double> h, std::size_t step = 1) {
  require(step >= 1, ErrorKind::InvalidArgument, "step must be positive");
  RateEstimates r;
  for (std::size_t n = 1; n <= h.size(); ++n) {
    r.per_n.push_back(h[n - 1] / static_cast<double>(n));
    if (n > step) r.increments.push_back((h[n - 1] - h[n - 1 - step]) / static_cast<double>(step));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Plug-in estimators

/// Samples of one categorical view, coded densely.
struct CodedSamples {
  std::vector<std::uint32_t> ids;
  std::size_t classes = 0;
};

inline CodedSamples code_samples(std::span<const Word> words) {
  std::map<Word, std::uint32_t> index;
  CodedSamples c;
  c.ids.reserve(words.size());
  for (const auto& w : words) {
    c.ids.push_back(index.emplace(w, static_cast<std::uint32_t>(index.size())).first->second);
  }
  c.classes = index.size();
  return c;
}

struct PluginOptions {
  bool miller_madow = true;
  std::size_t bootstrap = 200;
  std::uint64_t seed = 1;
  std::size_t min_class_count = 10;
};

struct PluginEstimate {
  EntropyEstimate estimate;
  bool insufficient_data = false;
};

namespace detail {

inline double plugin_entropy(std::span<const std::size_t> counts, std::size_t total, bool miller_madow) {
  if (total == 0) return 0.0;
  const double n = static_cast<double>(total);
  double h = 0.0;
  std::size_t occupied = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    ++occupied;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  if (miller_madow && occupied > 0) h += static_cast<double>(occupied - 1) / (2.0 * n * std::log(2.0));
  return h;
}

}  // namespace detail

/// sum_v coef[v] H(view v), with all views drawn from the same samples.
/// The bootstrap resamples whole samples, so the views stay coupled.
inline PluginEstimate plugin_combination(std::span<const CodedSamples> views, std::span<const double> coef,
                                         const PluginOptions& opt = {}) {
  require(!views.empty() && views.size() == coef.size(), ErrorKind::InvalidArgument, "one coefficient per view");
  const std::size_t n = views.front().ids.size();
  for (const auto& v : views) require(v.ids.size() == n, ErrorKind::InvalidArgument, "views of unequal size");
  require(n > 0, ErrorKind::InvalidArgument, "no samples");

  std::vector<std::vector<std::size_t>> counts(views.size());
  auto evaluate = [&](auto&& index_of) {
    double s = 0.0;
    for (std::size_t v = 0; v < views.size(); ++v) {
      counts[v].assign(views[v].classes, 0);
      for (std::size_t i = 0; i < n; ++i) ++counts[v][views[v].ids[index_of(i)]];
      s += coef[v] * detail::plugin_entropy(counts[v], n, opt.miller_madow);
    }
    return s;
  };

  PluginEstimate out;
  out.estimate.value = evaluate([](std::size_t i) { return i; });
  for (std::size_t v = 0; v < views.size(); ++v)
    for (auto c : counts[v])
      if (c > 0 && c < opt.min_class_count) out.insufficient_data = true;

  MomentAcc boot;
  std::vector<std::size_t> draw(n);
  for (std::size_t r = 0; r < opt.bootstrap; ++r) {
    CounterRng rng(derive_seed(opt.seed, r));
    for (auto& d : draw) d = static_cast<std::size_t>(rng.below(n));
    boot.add(evaluate([&](std::size_t i) { return draw[i]; }));
  }
  const double se = opt.bootstrap > 1 ? std::sqrt(boot.variance()) : 0.0;
  out.estimate.std_error = se;
  out.estimate.method = Method::monte_carlo;
  out.estimate.lower = out.estimate.value - kStderrMultiplier * se;
  out.estimate.upper = out.estimate.value + kStderrMultiplier * se;
  return out;
}

/// H(M-block | Y-block) = H(M, Y) - H(Y) from paired block samples.
inline PluginEstimate plugin_conditional_block_entropy(std::span<const Word> m_blocks, std::span<const Word> y_blocks,
                                                       const PluginOptions& opt = {}) {
  require(m_blocks.size() == y_blocks.size(), ErrorKind::InvalidArgument, "unpaired samples");
  std::vector<Word> joint(m_blocks.size());
  for (std::size_t i = 0; i < joint.size(); ++i) {
    joint[i] = m_blocks[i];
    joint[i].insert(joint[i].end(), y_blocks[i].begin(), y_blocks[i].end());
  }
  const CodedSamples views[] = {code_samples(joint), code_samples(y_blocks)};
  const double coef[] = {1.0, -1.0};
  return plugin_combination(views, coef, opt);
}

}  // namespace prodent
