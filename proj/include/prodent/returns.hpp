#pragma once

// Arrival times of a {0,1} process to state 1, the law of the first return
// under Y_0 = 1, and sampling self-checks of the classical recurrence
// theorems (Kac, Poincare, invariance of the induced map, Birkhoff).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "prodent/entropy.hpp"
#include "prodent/models.hpp"
#include "prodent/rng.hpp"

namespace prodent {

/// Arrival times r_{-past} < ... < r_0 < ... < r_future, where r_0 is the
/// first arrival at a coordinate >= 0 and r_{-1} < 0 is the last one before.
struct ReturnSample {
  std::size_t past = 0;
  std::size_t future = 0;
  std::vector<std::int64_t> arrivals;

  std::int64_t r(std::int64_t i) const {
    require(i >= -static_cast<std::int64_t>(past) && i <= static_cast<std::int64_t>(future),
            ErrorKind::InvalidArgument, "return index out of range");
    return arrivals[static_cast<std::size_t>(i + static_cast<std::int64_t>(past))];
  }
  /// t_i = r_i - r_{i-1}, defined for -past < i <= future.
  std::int64_t t(std::int64_t i) const { return r(i) - r(i - 1); }
};

/// `y[origin]` is coordinate 0. Requires `past` arrivals before 0 and
/// `future + 1` arrivals at or after 0 (r_0 through r_future).
inline ReturnSample extract_returns(std::span<const int> y, std::size_t origin, std::size_t past, std::size_t future) {
  require(origin < y.size() || y.empty(), ErrorKind::InvalidArgument, "origin outside window");
  std::vector<std::int64_t> before, after;
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y[j] != 1) continue;
    const auto c = static_cast<std::int64_t>(j) - static_cast<std::int64_t>(origin);
    (c < 0 ? before : after).push_back(c);
  }
  if (before.size() < past || after.size() < future + 1)
    fail(ErrorKind::InsufficientArrivals, "window has " + std::to_string(before.size()) + " arrivals before 0 and " +
                                              std::to_string(after.size()) + " at or after 0");
  ReturnSample s{past, future, {}};
  s.arrivals.assign(before.end() - static_cast<std::ptrdiff_t>(past), before.end());
  s.arrivals.insert(s.arrivals.end(), after.begin(), after.begin() + static_cast<std::ptrdiff_t>(future + 1));
  return s;
}

/// A realization of Y under P(. | Y_0 = 1) on [-past, future].
struct ConditionedWindow {
  Word y;
  std::size_t origin = 0;

  std::size_t future() const noexcept { return y.size() - origin - 1; }
  int at(std::int64_t c) const { return y[static_cast<std::size_t>(static_cast<std::int64_t>(origin) + c)]; }
};

namespace detail {

/// Conditioned realizations of periodic and explicit models with their
/// weights (summing to 1). Each entry is one period of the sequence starting
/// at coordinate 0, so entry[0] == 1.
inline std::optional<std::vector<std::pair<Word, double>>> conditioned_cycles(const ZeroOneView& v) {
  std::vector<std::pair<Word, double>> out;
  if (const auto* m = v.model.as<PeriodicOrbitModel>()) {
    for (const auto& rot : m->rotations)
      if (rot[0] == 1) out.push_back({rot, 1.0});
  } else if (const auto* m = v.model.as<ExplicitFiniteSupportModel>()) {
    const std::size_t len = m->length;
    for (std::size_t wi = 0; wi < m->words.size(); ++wi) {
      for (std::size_t t = 0; t < len; ++t) {
        if (m->words[wi][t] != 1 || m->probs[wi] <= 0.0) continue;
        Word cyc(len);
        for (std::size_t j = 0; j < len; ++j) cyc[j] = m->words[wi][(j + t) % len];
        out.push_back({std::move(cyc), m->probs[wi]});
      }
    }
  } else {
    return std::nullopt;
  }
  double total = 0.0;
  for (const auto& e : out) total += e.second;
  for (auto& e : out) e.second /= total;
  return out;
}

/// Distance from coordinate 0 to the next 1 of a cycle with cycle[0] == 1.
inline std::size_t cycle_first_return(const Word& cyc) {
  for (std::size_t d = 1; d <= cyc.size(); ++d)
    if (cyc[d % cyc.size()] == 1) return d;
  return cyc.size();
}

}  // namespace detail

/// Conditioned window on [-past, future]. For a fixed seed and `past`, growing
/// `future` only appends coordinates (the realization is extended, not
/// redrawn); for i.i.d., periodic and explicit models the same holds for `past`.
inline ConditionedWindow sample_conditioned(const ZeroOneView& v, std::size_t past, std::size_t future,
                                            std::uint64_t seed) {
  ConditionedWindow w;
  w.origin = past;
  w.y.assign(past + future + 1, 0);
  if (const auto* m = v.model.as<IidModel>()) {
    CounterRng fwd(derive_seed(seed, 1)), bwd(derive_seed(seed, 2));
    const double p1 = m->probs[1];
    w.y[past] = 1;
    for (std::size_t j = 1; j <= future; ++j) w.y[past + j] = fwd.bernoulli(p1) ? 1 : 0;
    for (std::size_t j = 1; j <= past; ++j) w.y[past - j] = bwd.bernoulli(p1) ? 1 : 0;
    return w;
  }
  if (auto cycles = detail::conditioned_cycles(v)) {
    CounterRng rng(derive_seed(seed, 0));
    std::vector<double> wts;
    for (const auto& c : *cycles) wts.push_back(c.second);
    const Word& cyc = (*cycles)[rng.categorical(wts)].first;
    const auto p = static_cast<std::int64_t>(cyc.size());
    for (std::size_t j = 0; j < w.y.size(); ++j)
      w.y[j] = cyc[static_cast<std::size_t>(detail::floor_mod(static_cast<std::int64_t>(j) - static_cast<std::int64_t>(past), p))];
    return w;
  }
  const std::size_t max_attempts = static_cast<std::size_t>(std::ceil(2000.0 / v.theta)) + 1000;
  for (std::size_t a = 0; a < max_attempts; ++a) {
    Word y = sample_window(v.model, -static_cast<std::int64_t>(past), past + future + 1, derive_seed(seed, 1000 + a));
    if (y[past] == 1) {
      w.y = std::move(y);
      return w;
    }
  }
  fail(ErrorKind::InvalidTheta, "rejection sampling of Y_0 = 1 did not succeed");
}

/// First return R_1 of a conditioned realization, extending the realization
/// forward (doubling) up to `cap`; 0 when censored.
inline std::int64_t sample_first_return(const ZeroOneView& v, std::uint64_t seed, std::size_t cap = std::size_t{1} << 22) {
  if (auto cycles = detail::conditioned_cycles(v)) {
    CounterRng rng(derive_seed(seed, 0));
    std::vector<double> wts;
    for (const auto& c : *cycles) wts.push_back(c.second);
    return static_cast<std::int64_t>(detail::cycle_first_return((*cycles)[rng.categorical(wts)].first));
  }
  if (const auto* m = v.model.as<IidModel>()) {
    CounterRng fwd(derive_seed(seed, 1));
    for (std::size_t j = 1; j <= cap; ++j)
      if (fwd.bernoulli(m->probs[1])) return static_cast<std::int64_t>(j);
    return 0;
  }
  std::size_t future = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(4.0 / v.theta)));
  std::size_t scanned = 1;
  while (true) {
    const auto w = sample_conditioned(v, 0, future, seed);
    for (std::size_t j = scanned; j <= future; ++j)
      if (w.y[j] == 1) return static_cast<std::int64_t>(j);
    if (future >= cap) return 0;
    scanned = future + 1;
    future = std::min(cap, future * 2);
  }
}

// ---------------------------------------------------------------------------
// Law of R_1 under Y_0 = 1

struct R1Law {
  std::vector<double> probs;  // probs[k-1] = P(R_1 = k | Y_0 = 1), k = 1..K
  double tail = 0.0;          // P(R_1 > K | Y_0 = 1)
  std::vector<double> stderrs;  // binomial standard errors; empty on exact paths
  bool exact = true;
  std::size_t samples = 0;  // Monte Carlo sample count; 0 on exact paths

  std::size_t truncation() const noexcept { return probs.size(); }

  void validate() const {
    double s = tail;
    for (double p : probs) {
      require(p >= 0.0, ErrorKind::InvalidArgument, "negative return probability");
      s += p;
    }
    require(tail >= 0.0 && std::abs(s - 1.0) <= kProbTol, ErrorKind::InvalidArgument, "R1 law does not sum to 1");
  }
};

struct SampleOptions {
  std::size_t n_samples = 100'000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

inline constexpr double kDefaultTailTarget = 1e-6;

/// Exact for periodic, explicit and i.i.d. censoring processes; empirical
/// otherwise (then K defaults to ceil(20 / theta)).
inline R1Law r1_distribution(const ZeroOneView& v, std::optional<std::size_t> K = std::nullopt,
                             const SampleOptions& opt = {}) {
  if (K) require(*K >= 1, ErrorKind::InvalidArgument, "K must be positive");
  R1Law law;
  if (auto cycles = detail::conditioned_cycles(v)) {
    std::map<std::size_t, double> by_gap;
    for (const auto& [cyc, w] : *cycles) by_gap[detail::cycle_first_return(cyc)] += w;
    const std::size_t k_max = K ? *K : by_gap.rbegin()->first;
    law.probs.assign(k_max, 0.0);
    for (const auto& [g, w] : by_gap) (g <= k_max ? law.probs[g - 1] : law.tail) += w;
    return law;
  }
  if (v.model.as<IidModel>()) {
    const double th = v.theta;
    std::size_t k_max = 1;
    if (K) {
      k_max = *K;
    } else if (th < 1.0) {
      k_max = static_cast<std::size_t>(std::ceil(std::log(kDefaultTailTarget) / std::log1p(-th)));
      while (std::pow(1.0 - th, static_cast<double>(k_max)) >= kDefaultTailTarget) ++k_max;
      k_max = std::max<std::size_t>(k_max, 1);
    }
    law.probs.resize(k_max);
    double surv = 1.0;
    for (std::size_t k = 1; k <= k_max; ++k) {
      law.probs[k - 1] = surv * th;
      surv *= (1.0 - th);
    }
    double s = 0.0;
    for (double p : law.probs) s += p;
    law.tail = std::max(0.0, 1.0 - s);
    return law;
  }

  const std::size_t k_max = K ? *K : static_cast<std::size_t>(std::ceil(20.0 / v.theta));
  struct Acc {
    std::vector<std::size_t> counts;
    std::size_t tail = 0;
    void merge(const Acc& o) {
      if (counts.size() < o.counts.size()) counts.resize(o.counts.size(), 0);
      for (std::size_t i = 0; i < o.counts.size(); ++i) counts[i] += o.counts[i];
      tail += o.tail;
    }
  };
  const auto acc = chunked_reduce<Acc>(opt.n_samples, opt.threads, [&](std::size_t b, std::size_t e) {
    Acc a;
    a.counts.assign(k_max, 0);
    for (std::size_t i = b; i < e; ++i) {
      const auto w = sample_conditioned(v, 0, k_max, derive_seed(opt.seed, i));
      std::size_t g = 0;
      for (std::size_t j = 1; j <= k_max && g == 0; ++j)
        if (w.y[j] == 1) g = j;
      if (g == 0)
        ++a.tail;
      else
        ++a.counts[g - 1];
    }
    return a;
  });
  const auto n = static_cast<double>(opt.n_samples);
  law.exact = false;
  law.samples = opt.n_samples;
  law.probs.assign(k_max, 0.0);
  law.stderrs.assign(k_max, 0.0);
  for (std::size_t k = 0; k < k_max; ++k) {
    const double p = k < acc.counts.size() ? static_cast<double>(acc.counts[k]) / n : 0.0;
    law.probs[k] = p;
    law.stderrs[k] = std::sqrt(p * (1.0 - p) / n);
  }
  law.tail = static_cast<double>(acc.tail) / n;
  return law;
}

// ---------------------------------------------------------------------------
// Self-checks

inline constexpr double kStderrMultiplier = 4.0;
inline constexpr double kInvarianceMultiplier = 5.0;

struct KacReport {
  double mean = 0.0;
  double target = 0.0;
  double deviation = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  std::size_t censored = 0;
  bool exact = false;
  bool pass = false;
};

/// E[R_1 | Y_0 = 1] against 1/theta.
inline KacReport kac_check(const ZeroOneView& v, const SampleOptions& opt = {}) {
  KacReport r;
  r.target = 1.0 / v.theta;
  if (auto cycles = detail::conditioned_cycles(v)) {
    for (const auto& [cyc, w] : *cycles) r.mean += w * static_cast<double>(detail::cycle_first_return(cyc));
    r.exact = true;
    r.deviation = std::abs(r.mean - r.target);
    r.pass = r.deviation <= 1e-12 * r.target;
    return r;
  }
  struct Acc {
    MomentAcc m;
    std::size_t censored = 0;
    void merge(const Acc& o) {
      m.merge(o.m);
      censored += o.censored;
    }
  };
  const auto acc = chunked_reduce<Acc>(opt.n_samples, opt.threads, [&](std::size_t b, std::size_t e) {
    Acc a;
    for (std::size_t i = b; i < e; ++i) {
      const auto g = sample_first_return(v, derive_seed(opt.seed, i));
      if (g == 0)
        ++a.censored;
      else
        a.m.add(static_cast<double>(g));
    }
    return a;
  });
  r.mean = acc.m.mean();
  r.std_error = acc.m.stderr_of_mean();
  r.samples = acc.m.count;
  r.censored = acc.censored;
  r.deviation = std::abs(r.mean - r.target);
  r.pass = r.censored == 0 && r.deviation <= kStderrMultiplier * r.std_error;
  return r;
}

struct PoincareReport {
  std::size_t horizon = 0;
  double fraction = 0.0;
  double std_error = 0.0;
  bool exact = false;
};

/// Fraction of conditioned paths that return to 1 within each horizon.
inline std::vector<PoincareReport> poincare_check(const ZeroOneView& v, std::span<const std::size_t> horizons,
                                                  const SampleOptions& opt = {}) {
  std::vector<PoincareReport> out;
  if (auto cycles = detail::conditioned_cycles(v)) {
    for (auto h : horizons) {
      PoincareReport r{h, 0.0, 0.0, true};
      for (const auto& [cyc, w] : *cycles)
        if (detail::cycle_first_return(cyc) <= h) r.fraction += w;
      out.push_back(r);
    }
    return out;
  }
  const std::size_t h_max = horizons.empty() ? 0 : *std::max_element(horizons.begin(), horizons.end());
  struct Acc {
    std::vector<std::size_t> returned;
    void merge(const Acc& o) {
      if (returned.size() < o.returned.size()) returned.resize(o.returned.size(), 0);
      for (std::size_t i = 0; i < o.returned.size(); ++i) returned[i] += o.returned[i];
    }
  };
  const auto acc = chunked_reduce<Acc>(opt.n_samples, opt.threads, [&](std::size_t b, std::size_t e) {
    Acc a;
    a.returned.assign(horizons.size(), 0);
    for (std::size_t i = b; i < e; ++i) {
      const auto g = sample_first_return(v, derive_seed(opt.seed, i), std::max<std::size_t>(h_max, 1));
      for (std::size_t j = 0; j < horizons.size(); ++j)
        if (g > 0 && static_cast<std::size_t>(g) <= horizons[j]) ++a.returned[j];
    }
    return a;
  });
  const auto n = static_cast<double>(opt.n_samples);
  for (std::size_t j = 0; j < horizons.size(); ++j) {
    const double f = j < acc.returned.size() ? static_cast<double>(acc.returned[j]) / n : 0.0;
    out.push_back({horizons[j], f, std::sqrt(f * (1.0 - f) / n), false});
  }
  return out;
}

struct InvarianceReport {
  double tv = 0.0;
  double std_error = 0.0;
  double threshold = 0.0;
  std::size_t window = 0;
  bool pass = false;
};

struct InvarianceOptions {
  double multiplier = kInvarianceMultiplier;
  /// Replaces the induced shift by a fixed shift; used as a negative control.
  std::optional<std::size_t> fixed_shift;
};

/// Total variation between the law of y_[0, L) and of the same window after
/// the induced shift y -> S^{R_1} y, both under Y_0 = 1. The noise scale is
/// 1/2 sum_w sqrt((p_w(1-p_w) + q_w(1-q_w)) / n).
inline InvarianceReport induced_invariance_check(const ZeroOneView& v, std::size_t window_len,
                                                 const SampleOptions& opt = {}, const InvarianceOptions& inv = {}) {
  require(window_len >= 1 && window_len <= 62, ErrorKind::InvalidArgument, "window length must be in [1, 62]");
  struct Acc {
    std::map<std::uint64_t, std::size_t> before, after;
    void merge(const Acc& o) {
      for (const auto& [k, c] : o.before) before[k] += c;
      for (const auto& [k, c] : o.after) after[k] += c;
    }
  };
  auto encode = [&](const ConditionedWindow& w, std::size_t start) {
    std::uint64_t key = 0;
    for (std::size_t j = 0; j < window_len; ++j) key = (key << 1) | static_cast<std::uint64_t>(w.y[w.origin + start + j]);
    return key;
  };
  const std::size_t n = opt.n_samples;
  const auto acc = chunked_reduce<Acc>(n, opt.threads, [&](std::size_t b, std::size_t e) {
    Acc a;
    for (std::size_t i = b; i < e; ++i) {
      const auto seed = derive_seed(opt.seed, i);
      std::size_t shift = 0;
      if (inv.fixed_shift) {
        shift = *inv.fixed_shift;
      } else {
        const auto g = sample_first_return(v, seed);
        require(g > 0, ErrorKind::InsufficientArrivals, "censored return in invariance check");
        shift = static_cast<std::size_t>(g);
      }
      const auto w = sample_conditioned(v, 0, shift + window_len, seed);
      ++a.before[encode(w, 0)];
      ++a.after[encode(w, shift)];
    }
    return a;
  });
  std::map<std::uint64_t, std::pair<double, double>> joint;
  for (const auto& [k, c] : acc.before) joint[k].first = static_cast<double>(c) / static_cast<double>(n);
  for (const auto& [k, c] : acc.after) joint[k].second = static_cast<double>(c) / static_cast<double>(n);
  InvarianceReport r;
  r.window = window_len;
  for (const auto& [k, pq] : joint) {
    const auto [p, q] = pq;
    r.tv += 0.5 * std::abs(p - q);
    r.std_error += 0.5 * std::sqrt((p * (1.0 - p) + q * (1.0 - q)) / static_cast<double>(n));
  }
  r.threshold = inv.multiplier * r.std_error;
  r.pass = r.tv <= r.threshold + 1e-12;
  return r;
}

struct BirkhoffReport {
  double average = 0.0;
  double expectation = 0.0;
  double deviation = 0.0;
  double std_error = 0.0;
  std::vector<std::pair<std::size_t, double>> trace;  // running average at powers of two
  bool pass = false;
};

inline constexpr std::size_t kBirkhoffBatches = 32;

/// Time average of f(y_i) over one realization of length n versus E f(Y_0).
/// The standard error uses batch means, so it also covers dependent samples.
inline BirkhoffReport birkhoff_check(const ProcessModel& model, std::span<const double> statistic, std::size_t n,
                                     std::uint64_t seed) {
  require(statistic.size() == model.alphabet().size(), ErrorKind::InvalidArgument, "statistic must cover the alphabet");
  require(n >= kBirkhoffBatches, ErrorKind::InvalidArgument, "need at least 32 samples");
  BirkhoffReport r;
  const auto p = symbol_probs(model);
  for (std::size_t a = 0; a < p.size(); ++a) r.expectation += p[a] * statistic[a];
  const Word y = sample_window(model, 0, n, seed);
  double sum = 0.0;
  std::size_t next_mark = 1;
  for (std::size_t i = 0; i < n; ++i) {
    sum += statistic[static_cast<std::size_t>(y[i])];
    if (i + 1 == next_mark || i + 1 == n) {
      r.trace.push_back({i + 1, sum / static_cast<double>(i + 1)});
      next_mark *= 2;
    }
  }
  r.average = sum / static_cast<double>(n);
  const std::size_t batch = n / kBirkhoffBatches;
  MomentAcc batches;
  for (std::size_t b = 0; b < kBirkhoffBatches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * batch; i < (b + 1) * batch; ++i) s += statistic[static_cast<std::size_t>(y[i])];
    batches.add(s / static_cast<double>(batch));
  }
  r.std_error = batches.stderr_of_mean();
  r.deviation = std::abs(r.average - r.expectation);
  r.pass = r.deviation <= kStderrMultiplier * r.std_error + 1e-12;
  return r;
}

}  // namespace prodent
