#pragma once

// Finitely-valued stationary process models: exact joint laws at arbitrary
// coordinates and seeded sampling of windows.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "prodent/distribution.hpp"
#include "prodent/error.hpp"
#include "prodent/rng.hpp"

namespace prodent {

using Matrix = Eigen::MatrixXd;

inline constexpr std::size_t kDefaultMarginalBudget = 1'000'000;
inline constexpr double kStationaryTol = 1e-10;

enum class Tri { no, yes, unknown };

inline const char* to_string(Tri t) {
  switch (t) {
    case Tri::no: return "no";
    case Tri::yes: return "yes";
    case Tri::unknown: return "unknown";
  }
  return "unknown";
}

struct IidModel {
  Alphabet alphabet;
  std::vector<double> probs;
};

struct MarkovModel {
  Alphabet alphabet;
  Matrix transition;
  std::vector<double> stationary;

  std::size_t states() const noexcept { return alphabet.size(); }
};

/// X_i = relabel(xi_i, ..., xi_{i+window-1}) for a hidden chain xi. The hidden
/// window is encoded big-endian in base |hidden alphabet|.
struct FunctionOfMarkovModel {
  MarkovModel base;
  int window = 1;
  Alphabet alphabet;
  std::vector<int> relabel;
};

/// de Finetti mixture: a component index is drawn once, then symbols are
/// i.i.d. from that component.
struct ExchangeableMixtureModel {
  Alphabet alphabet;
  std::vector<double> weights;
  std::vector<std::vector<double>> components;
};

/// Uniform law over the distinct cyclic shifts of `word`; `rotations[t][j]`
/// is the value at coordinate j (mod period) under shift t.
struct PeriodicOrbitModel {
  Alphabet alphabet;
  Word word;
  std::vector<Word> rotations;

  std::size_t period() const noexcept { return word.size(); }
};

/// A random length-L word extended periodically with a uniform phase.
struct ExplicitFiniteSupportModel {
  Alphabet alphabet;
  std::size_t length = 0;
  std::vector<Word> words;
  std::vector<double> probs;
};

class ProcessModel {
 public:
  using Variant = std::variant<IidModel, MarkovModel, FunctionOfMarkovModel, ExchangeableMixtureModel,
                               PeriodicOrbitModel, ExplicitFiniteSupportModel>;

  ProcessModel(IidModel m) : v_(std::move(m)) {}
  ProcessModel(MarkovModel m) : v_(std::move(m)) {}
  ProcessModel(FunctionOfMarkovModel m) : v_(std::move(m)) {}
  ProcessModel(ExchangeableMixtureModel m) : v_(std::move(m)) {}
  ProcessModel(PeriodicOrbitModel m) : v_(std::move(m)) {}
  ProcessModel(ExplicitFiniteSupportModel m) : v_(std::move(m)) {}

  const Variant& variant() const noexcept { return v_; }

  template <class T>
  const T* as() const noexcept {
    return std::get_if<T>(&v_);
  }

  const Alphabet& alphabet() const {
    return std::visit([](const auto& m) -> const Alphabet& { return m.alphabet; }, v_);
  }

  std::string kind_name() const {
    static constexpr std::array<const char*, 6> names = {"iid", "markov", "function_of_markov",
                                                         "exchangeable", "periodic", "explicit"};
    return names[v_.index()];
  }

 private:
  Variant v_;
};

// ---------------------------------------------------------------------------
// Linear algebra helpers

/// P^k by repeated squaring; rows are renormalized to 1 after every product.
inline Matrix transition_power(const Matrix& p, std::uint64_t k) {
  const auto n = p.rows();
  Matrix result = Matrix::Identity(n, n);
  Matrix base = p;
  auto renormalize = [](Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double s = m.row(r).sum();
      if (s > 0.0) m.row(r) /= s;
    }
  };
  while (k > 0) {
    if (k & 1ULL) {
      result = result * base;
      renormalize(result);
    }
    k >>= 1;
    if (k > 0) {
      base = base * base;
      renormalize(base);
    }
  }
  return result;
}

inline void validate_stochastic(const Matrix& p) {
  require(p.rows() == p.cols() && p.rows() > 0, ErrorKind::InvalidModel, "transition matrix must be square");
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c)
      require(p(r, c) >= 0.0 && std::isfinite(p(r, c)), ErrorKind::InvalidModel, "negative transition entry");
    require(std::abs(p.row(r).sum() - 1.0) <= kProbTol, ErrorKind::InvalidModel,
            "transition row " + std::to_string(r) + " does not sum to 1");
  }
}

/// The unique pi with pi P = pi. Throws NonUniqueStationary when the fixed
/// space of P^T is more than one-dimensional.
inline std::vector<double> stationary_dist(const Matrix& p) {
  validate_stochastic(p);
  const auto n = p.rows();
  Matrix a = p.transpose() - Matrix::Identity(n, n);
  Eigen::FullPivLU<Matrix> lu(a);
  lu.setThreshold(1e-10);
  const Matrix kernel = lu.kernel();
  if (kernel.cols() != 1) fail(ErrorKind::NonUniqueStationary, "chain has several stationary laws; supply one");
  Eigen::VectorXd v = kernel.col(0);
  v /= v.sum();
  std::vector<double> pi(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) pi[static_cast<std::size_t>(i)] = std::abs(v(i)) < 1e-15 ? 0.0 : v(i);
  for (double x : pi) require(x >= -1e-12, ErrorKind::NonUniqueStationary, "kernel vector is not a probability");
  double s = 0.0;
  for (double& x : pi) s += (x = std::max(x, 0.0));
  for (double& x : pi) x /= s;
  return pi;
}

inline double stationarity_residual(const Matrix& p, std::span<const double> pi) {
  double r = 0.0;
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) s += pi[static_cast<std::size_t>(i)] * p(i, c);
    r += std::abs(s - pi[static_cast<std::size_t>(c)]);
  }
  return r;
}

inline bool is_irreducible(const Matrix& p) {
  const auto n = static_cast<std::size_t>(p.rows());
  for (std::size_t start = 0; start < n; ++start) {
    std::vector<bool> seen(n, false);
    std::queue<std::size_t> q;
    q.push(start);
    seen[start] = true;
    std::size_t reached = 1;
    while (!q.empty()) {
      const auto s = q.front();
      q.pop();
      for (std::size_t t = 0; t < n; ++t) {
        if (!seen[t] && p(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) > 0.0) {
          seen[t] = true;
          ++reached;
          q.push(t);
        }
      }
    }
    if (reached != n) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Construction

inline void validate_prob_vector(std::span<const double> p, std::size_t expected, const std::string& what) {
  require(p.size() == expected, ErrorKind::InvalidModel, what + ": wrong length");
  double s = 0.0;
  for (double x : p) {
    require(x >= 0.0 && std::isfinite(x), ErrorKind::InvalidModel, what + ": negative probability");
    s += x;
  }
  require(std::abs(s - 1.0) <= kProbTol, ErrorKind::InvalidModel, what + ": does not sum to 1");
}

inline IidModel make_iid(Alphabet alphabet, std::vector<double> probs) {
  validate_prob_vector(probs, alphabet.size(), "iid probabilities");
  return {std::move(alphabet), std::move(probs)};
}

/// When `stationary` is absent it is solved for, which requires uniqueness.
inline MarkovModel make_markov(Alphabet alphabet, Matrix transition,
                               std::optional<std::vector<double>> stationary = std::nullopt) {
  require(static_cast<std::size_t>(transition.rows()) == alphabet.size(), ErrorKind::InvalidModel,
          "transition size does not match alphabet");
  validate_stochastic(transition);
  std::vector<double> pi = stationary ? *stationary : stationary_dist(transition);
  validate_prob_vector(pi, alphabet.size(), "stationary law");
  require(stationarity_residual(transition, pi) <= kStationaryTol, ErrorKind::InvalidModel,
          "supplied law is not stationary for the chain");
  return {std::move(alphabet), std::move(transition), std::move(pi)};
}

inline std::size_t int_pow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) {
    require(r <= (std::size_t{1} << 40) / std::max<std::size_t>(base, 1), ErrorKind::Overflow, "window space too large");
    r *= base;
  }
  return r;
}

inline FunctionOfMarkovModel make_function_of_markov(MarkovModel base, int window, Alphabet alphabet,
                                                     std::vector<int> relabel) {
  require(window >= 1, ErrorKind::InvalidModel, "window must be positive");
  const std::size_t tuples = int_pow(base.states(), window);
  require(relabel.size() == tuples, ErrorKind::InvalidModel, "relabel must be total on hidden windows");
  for (int r : relabel)
    require(r >= 0 && static_cast<std::size_t>(r) < alphabet.size(), ErrorKind::InvalidModel,
            "relabel target outside output alphabet");
  return {std::move(base), window, std::move(alphabet), std::move(relabel)};
}

inline ExchangeableMixtureModel make_exchangeable(Alphabet alphabet, std::vector<double> weights,
                                                  std::vector<std::vector<double>> components) {
  validate_prob_vector(weights, components.size(), "mixture weights");
  require(!components.empty(), ErrorKind::InvalidModel, "mixture needs a component");
  for (const auto& c : components) validate_prob_vector(c, alphabet.size(), "mixture component");
  return {std::move(alphabet), std::move(weights), std::move(components)};
}

inline PeriodicOrbitModel make_periodic(Alphabet alphabet, Word word) {
  require(!word.empty(), ErrorKind::InvalidModel, "periodic word must be nonempty");
  for (int c : word)
    require(c >= 0 && static_cast<std::size_t>(c) < alphabet.size(), ErrorKind::InvalidModel, "symbol outside alphabet");
  const std::size_t p = word.size();
  std::vector<Word> rotations;
  for (std::size_t t = 0; t < p; ++t) {
    Word r(p);
    for (std::size_t j = 0; j < p; ++j) r[j] = word[(j + t) % p];
    if (std::find(rotations.begin(), rotations.end(), r) == rotations.end()) rotations.push_back(std::move(r));
  }
  return {std::move(alphabet), std::move(word), std::move(rotations)};
}

inline ExplicitFiniteSupportModel make_explicit(Alphabet alphabet, std::size_t length, std::vector<Word> words,
                                                std::vector<double> probs) {
  require(length >= 1, ErrorKind::InvalidModel, "explicit window length must be positive");
  validate_prob_vector(probs, words.size(), "explicit word probabilities");
  for (const auto& w : words) {
    require(w.size() == length, ErrorKind::InvalidModel, "explicit word of wrong length");
    for (int c : w)
      require(c >= 0 && static_cast<std::size_t>(c) < alphabet.size(), ErrorKind::InvalidModel,
              "symbol outside alphabet");
  }
  return {std::move(alphabet), length, std::move(words), std::move(probs)};
}

/// Word from a string of single-character symbols.
inline Word parse_word(const Alphabet& alphabet, const std::string& s) {
  Word w;
  for (char ch : s) w.push_back(alphabet.code(std::string(1, ch)));
  return w;
}

// ---------------------------------------------------------------------------
// Exact marginals

namespace detail {

inline std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

inline std::vector<std::int64_t> normalized_indices(std::span<const std::int64_t> indices) {
  for (std::size_t i = 1; i < indices.size(); ++i)
    require(indices[i] > indices[i - 1], ErrorKind::InvalidArgument, "indices must be strictly increasing");
  std::vector<std::int64_t> out(indices.begin(), indices.end());
  if (!out.empty()) {
    const auto first = out.front();
    for (auto& i : out) i -= first;
  }
  return out;
}

inline void check_budget(std::size_t n, std::size_t budget) {
  if (n > budget)
    fail(ErrorKind::BudgetExceeded, "enumeration of " + std::to_string(n) + " states exceeds budget " +
                                        std::to_string(budget));
}

class PowerCache {
 public:
  explicit PowerCache(const Matrix& p) : p_(p) {}
  const Matrix& get(std::uint64_t k) {
    auto it = cache_.find(k);
    if (it == cache_.end()) it = cache_.emplace(k, transition_power(p_, k)).first;
    return it->second;
  }

 private:
  const Matrix& p_;
  std::map<std::uint64_t, Matrix> cache_;
};

inline Distribution markov_marginal(const MarkovModel& m, std::span<const std::int64_t> idx, std::size_t budget) {
  PowerCache powers(m.transition);
  const std::size_t n = m.states();
  std::vector<std::pair<Word, double>> frontier;
  for (std::size_t s = 0; s < n; ++s)
    if (m.stationary[s] > 0.0) frontier.push_back({Word{static_cast<int>(s)}, m.stationary[s]});
  for (std::size_t j = 1; j < idx.size(); ++j) {
    const Matrix& pg = powers.get(static_cast<std::uint64_t>(idx[j] - idx[j - 1]));
    std::vector<std::pair<Word, double>> next;
    for (const auto& [w, pr] : frontier) {
      const auto last = static_cast<Eigen::Index>(w.back());
      for (std::size_t s = 0; s < n; ++s) {
        const double t = pg(last, static_cast<Eigen::Index>(s));
        if (t <= 0.0) continue;
        Word w2 = w;
        w2.push_back(static_cast<int>(s));
        next.push_back({std::move(w2), pr * t});
      }
      check_budget(next.size(), budget);
    }
    frontier = std::move(next);
  }
  Distribution d;
  for (auto& [w, p] : frontier) {
    d.support.push_back(std::move(w));
    d.probs.push_back(p);
  }
  return d;
}

inline Distribution iid_product(std::span<const std::vector<double>> factors, std::size_t k, std::size_t budget,
                                std::span<const double> weights) {
  // Mixture over `factors` (one factor = plain i.i.d.) of k-fold products.
  const std::size_t a = factors.front().size();
  std::map<Word, double> m;
  Word w(k, 0);
  std::size_t count = 0;
  while (true) {
    check_budget(++count, budget);
    double total = 0.0;
    for (std::size_t c = 0; c < factors.size(); ++c) {
      double p = weights[c];
      for (std::size_t j = 0; j < k && p > 0.0; ++j) p *= factors[c][static_cast<std::size_t>(w[j])];
      total += p;
    }
    if (total > 0.0) m[w] = total;
    std::size_t pos = k;
    while (pos > 0) {
      --pos;
      if (static_cast<std::size_t>(++w[pos]) < a) break;
      w[pos] = 0;
      if (pos == 0) return Distribution::from_map(m);
    }
    if (k == 0) return Distribution::from_map(m);
  }
}

}  // namespace detail

/// Joint law of a function-of-Markov model at output coordinates `indices`,
/// optionally together with hidden symbols at `hidden_positions`. Tuple layout
/// is [outputs..., hidden...]. Computed by a forward pass over the hull of the
/// needed hidden positions; index gaps are bridged with transition powers.
inline Distribution function_of_markov_joint(const FunctionOfMarkovModel& m, std::span<const std::int64_t> indices,
                                             std::span<const std::int64_t> hidden_positions = {},
                                             std::size_t budget = kDefaultMarginalBudget) {
  for (std::size_t i = 1; i < indices.size(); ++i)
    require(indices[i] > indices[i - 1], ErrorKind::InvalidArgument, "indices must be strictly increasing");
  for (std::size_t i = 1; i < hidden_positions.size(); ++i)
    require(hidden_positions[i] > hidden_positions[i - 1], ErrorKind::InvalidArgument,
            "hidden positions must be strictly increasing");
  if (indices.empty() && hidden_positions.empty()) return Distribution{{Word{}}, {1.0}};

  const int w = m.window;
  const std::size_t hs = m.base.states();
  std::map<std::int64_t, int> role;  // bit 1: hidden emit, bit 2: window end
  std::vector<std::int64_t> needed;
  for (auto i : indices) {
    for (int j = 0; j < w; ++j) needed.push_back(i + j);
    role[i + w - 1] |= 2;
  }
  for (auto h : hidden_positions) {
    needed.push_back(h);
    role[h] |= 1;
  }
  std::sort(needed.begin(), needed.end());
  needed.erase(std::unique(needed.begin(), needed.end()), needed.end());

  // State: {outputs, hidden emits, recent contiguous hidden history}.
  using Key = std::array<Word, 3>;
  std::map<Key, double> states;
  detail::PowerCache powers(m.base.transition);
  const std::size_t history_cap = static_cast<std::size_t>(std::max(1, w - 1));

  for (std::size_t step = 0; step < needed.size(); ++step) {
    const std::int64_t pos = needed[step];
    const int r = role.count(pos) ? role[pos] : 0;
    const bool contiguous = step > 0 && pos == needed[step - 1] + 1;
    std::map<Key, double> next;
    auto emit = [&](const Key& prev, double pr, int s) {
      Key k = prev;
      Word& hist = k[2];
      if (!contiguous) hist.clear();
      hist.push_back(s);
      if (r & 1) k[1].push_back(s);
      if (r & 2) {
        require(hist.size() >= static_cast<std::size_t>(w), ErrorKind::InvalidArgument, "window not contiguous");
        std::size_t code = 0;
        for (std::size_t j = hist.size() - static_cast<std::size_t>(w); j < hist.size(); ++j)
          code = code * hs + static_cast<std::size_t>(hist[j]);
        k[0].push_back(m.relabel[code]);
      }
      if (hist.size() > history_cap) hist.erase(hist.begin(), hist.end() - static_cast<std::ptrdiff_t>(history_cap));
      next[k] += pr;
    };
    if (step == 0) {
      for (std::size_t s = 0; s < hs; ++s)
        if (m.base.stationary[s] > 0.0) emit(Key{}, m.base.stationary[s], static_cast<int>(s));
    } else {
      const Matrix& pg = powers.get(static_cast<std::uint64_t>(pos - needed[step - 1]));
      for (const auto& [k, pr] : states) {
        const auto last = static_cast<Eigen::Index>(k[2].back());
        for (std::size_t s = 0; s < hs; ++s) {
          const double t = pg(last, static_cast<Eigen::Index>(s));
          if (t > 0.0) emit(k, pr * t, static_cast<int>(s));
        }
      }
    }
    detail::check_budget(next.size() * hs, budget);
    states = std::move(next);
  }
  std::map<Word, double> out;
  for (const auto& [k, pr] : states) {
    Word w2 = k[0];
    w2.insert(w2.end(), k[1].begin(), k[1].end());
    out[w2] += pr;
  }
  return Distribution::from_map(out);
}

/// Exact joint law at the given strictly increasing coordinates. Empty
/// `indices` gives the point mass on the empty tuple.
inline Distribution marginal(const ProcessModel& model, std::span<const std::int64_t> indices,
                             std::size_t budget = kDefaultMarginalBudget) {
  const auto idx = detail::normalized_indices(indices);
  if (idx.empty()) return Distribution{{Word{}}, {1.0}};
  const std::size_t k = idx.size();
  return std::visit(
      [&](const auto& m) -> Distribution {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IidModel>) {
          std::vector<std::vector<double>> f{m.probs};
          const std::vector<double> one{1.0};
          return detail::iid_product(f, k, budget, one);
        } else if constexpr (std::is_same_v<T, MarkovModel>) {
          return detail::markov_marginal(m, idx, budget);
        } else if constexpr (std::is_same_v<T, FunctionOfMarkovModel>) {
          return function_of_markov_joint(m, idx, {}, budget);
        } else if constexpr (std::is_same_v<T, ExchangeableMixtureModel>) {
          return detail::iid_product(m.components, k, budget, m.weights);
        } else if constexpr (std::is_same_v<T, PeriodicOrbitModel>) {
          std::map<Word, double> acc;
          const auto p = static_cast<std::int64_t>(m.period());
          const double wt = 1.0 / static_cast<double>(m.rotations.size());
          for (const auto& rot : m.rotations) {
            Word w(k);
            for (std::size_t j = 0; j < k; ++j) w[j] = rot[static_cast<std::size_t>(detail::floor_mod(idx[j], p))];
            acc[w] += wt;
          }
          return Distribution::from_map(acc);
        } else {
          std::map<Word, double> acc;
          const auto len = static_cast<std::int64_t>(m.length);
          detail::check_budget(m.words.size() * m.length, budget);
          for (std::size_t wi = 0; wi < m.words.size(); ++wi) {
            for (std::int64_t t = 0; t < len; ++t) {
              Word w(k);
              for (std::size_t j = 0; j < k; ++j)
                w[j] = m.words[wi][static_cast<std::size_t>(detail::floor_mod(idx[j] + t, len))];
              acc[w] += m.probs[wi] / static_cast<double>(len);
            }
          }
          return Distribution::from_map(acc);
        }
      },
      model.variant());
}

inline Distribution marginal(const ProcessModel& model, std::initializer_list<std::int64_t> indices,
                             std::size_t budget = kDefaultMarginalBudget) {
  const std::vector<std::int64_t> v(indices);
  return marginal(model, std::span<const std::int64_t>(v), budget);
}

/// Marginal on the contiguous block [0, n).
inline Distribution block_marginal(const ProcessModel& model, std::size_t n,
                                   std::size_t budget = kDefaultMarginalBudget) {
  std::vector<std::int64_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::int64_t>(i);
  return marginal(model, idx, budget);
}

/// P(X_0 = a) for every code a.
inline std::vector<double> symbol_probs(const ProcessModel& model) {
  const auto d = marginal(model, {0});
  std::vector<double> p(model.alphabet().size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) p[static_cast<std::size_t>(d.support[i][0])] = d.probs[i];
  return p;
}

// ---------------------------------------------------------------------------
// Sampling

namespace detail {

inline Word sample_markov_path(const MarkovModel& m, std::size_t length, CounterRng& rng) {
  Word out(length);
  if (length == 0) return out;
  const std::size_t n = m.states();
  std::vector<double> row(n);
  out[0] = static_cast<int>(rng.categorical(m.stationary));
  for (std::size_t i = 1; i < length; ++i) {
    for (std::size_t s = 0; s < n; ++s)
      row[s] = m.transition(static_cast<Eigen::Index>(out[i - 1]), static_cast<Eigen::Index>(s));
    out[i] = static_cast<int>(rng.categorical(row));
  }
  return out;
}

}  // namespace detail

/// Realization on coordinates [first, first + length). Deterministic in
/// (model, first, length, seed).
inline Word sample_window(const ProcessModel& model, std::int64_t first, std::size_t length, std::uint64_t seed) {
  CounterRng rng(seed);
  return std::visit(
      [&](const auto& m) -> Word {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IidModel>) {
          Word out(length);
          for (auto& x : out) x = static_cast<int>(rng.categorical(m.probs));
          return out;
        } else if constexpr (std::is_same_v<T, MarkovModel>) {
          return detail::sample_markov_path(m, length, rng);
        } else if constexpr (std::is_same_v<T, FunctionOfMarkovModel>) {
          const auto w = static_cast<std::size_t>(m.window);
          const Word hidden = detail::sample_markov_path(m.base, length + w - 1, rng);
          Word out(length);
          for (std::size_t i = 0; i < length; ++i) {
            std::size_t code = 0;
            for (std::size_t j = 0; j < w; ++j) code = code * m.base.states() + static_cast<std::size_t>(hidden[i + j]);
            out[i] = m.relabel[code];
          }
          return out;
        } else if constexpr (std::is_same_v<T, ExchangeableMixtureModel>) {
          const auto& comp = m.components[rng.categorical(m.weights)];
          Word out(length);
          for (auto& x : out) x = static_cast<int>(rng.categorical(comp));
          return out;
        } else if constexpr (std::is_same_v<T, PeriodicOrbitModel>) {
          const auto& rot = m.rotations[rng.below(m.rotations.size())];
          const auto p = static_cast<std::int64_t>(m.period());
          Word out(length);
          for (std::size_t i = 0; i < length; ++i)
            out[i] = rot[static_cast<std::size_t>(detail::floor_mod(first + static_cast<std::int64_t>(i), p))];
          return out;
        } else {
          const auto& word = m.words[rng.categorical(m.probs)];
          const auto len = static_cast<std::int64_t>(m.length);
          const auto phase = static_cast<std::int64_t>(rng.below(m.length));
          Word out(length);
          for (std::size_t i = 0; i < length; ++i)
            out[i] = word[static_cast<std::size_t>(detail::floor_mod(first + static_cast<std::int64_t>(i) + phase, len))];
          return out;
        }
      },
      model.variant());
}

// ---------------------------------------------------------------------------
// Structural queries

/// The model as a Markov chain over its own alphabet when it is one by
/// construction: i.i.d., Markov, single-component mixtures, and
/// function-of-Markov models whose relabel is injective on the hidden windows
/// of positive probability.
inline std::optional<MarkovModel> as_markov(const ProcessModel& model) {
  if (const auto* m = model.as<MarkovModel>()) return *m;
  auto iid_chain = [](const Alphabet& a, const std::vector<double>& p) {
    const auto n = static_cast<Eigen::Index>(p.size());
    Matrix t(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) t(r, c) = p[static_cast<std::size_t>(c)];
    return MarkovModel{a, t, p};
  };
  if (const auto* m = model.as<IidModel>()) return iid_chain(m->alphabet, m->probs);
  if (const auto* m = model.as<ExchangeableMixtureModel>()) {
    for (const auto& c : m->components)
      if (c != m->components.front()) return std::nullopt;
    return iid_chain(m->alphabet, m->components.front());
  }
  if (const auto* m = model.as<FunctionOfMarkovModel>()) {
    const std::size_t hs = m->base.states();
    const auto w = static_cast<std::size_t>(m->window);
    const std::size_t tuples = int_pow(hs, m->window);
    // Stationary law of hidden windows.
    std::vector<double> tp(tuples, 0.0);
    for (std::size_t code = 0; code < tuples; ++code) {
      std::size_t c = code;
      Word t(w);
      for (std::size_t j = w; j-- > 0;) {
        t[j] = static_cast<int>(c % hs);
        c /= hs;
      }
      double p = m->base.stationary[static_cast<std::size_t>(t[0])];
      for (std::size_t j = 1; j < w && p > 0.0; ++j)
        p *= m->base.transition(static_cast<Eigen::Index>(t[j - 1]), static_cast<Eigen::Index>(t[j]));
      tp[code] = p;
    }
    const std::size_t na = m->alphabet.size();
    std::vector<long> owner(na, -1);
    for (std::size_t code = 0; code < tuples; ++code) {
      if (tp[code] <= 0.0) continue;
      auto& o = owner[static_cast<std::size_t>(m->relabel[code])];
      if (o >= 0 && static_cast<std::size_t>(o) != code) return std::nullopt;
      o = static_cast<long>(code);
    }
    Matrix t = Matrix::Zero(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(na));
    std::vector<double> pi(na, 0.0);
    for (std::size_t a = 0; a < na; ++a) {
      if (owner[a] < 0) {
        t(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = 1.0;
        continue;
      }
      const auto code = static_cast<std::size_t>(owner[a]);
      pi[a] = tp[code];
      const std::size_t last = code % hs;
      const std::size_t shifted = (code * hs) % tuples;
      for (std::size_t s = 0; s < hs; ++s) {
        const double q = m->base.transition(static_cast<Eigen::Index>(last), static_cast<Eigen::Index>(s));
        if (q <= 0.0) continue;
        const auto b = static_cast<Eigen::Index>(m->relabel[shifted + s]);
        t(static_cast<Eigen::Index>(a), b) += q;
      }
    }
    return MarkovModel{m->alphabet, t, pi};
  }
  return std::nullopt;
}

/// Ergodicity where it can be decided from the model description.
inline Tri is_ergodic(const ProcessModel& model) {
  return std::visit(
      [](const auto& m) -> Tri {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IidModel> || std::is_same_v<T, PeriodicOrbitModel>) {
          return Tri::yes;
        } else if constexpr (std::is_same_v<T, MarkovModel>) {
          return is_irreducible(m.transition) ? Tri::yes : Tri::unknown;
        } else if constexpr (std::is_same_v<T, FunctionOfMarkovModel>) {
          return is_irreducible(m.base.transition) ? Tri::yes : Tri::unknown;
        } else if constexpr (std::is_same_v<T, ExchangeableMixtureModel>) {
          std::size_t distinct = 0;
          for (std::size_t c = 0; c < m.components.size(); ++c) {
            if (m.weights[c] <= 0.0) continue;
            bool seen = false;
            for (std::size_t d = 0; d < c; ++d) seen = seen || (m.weights[d] > 0.0 && m.components[d] == m.components[c]);
            if (!seen) ++distinct;
          }
          return distinct <= 1 ? Tri::yes : Tri::no;
        } else {
          std::size_t positive = 0;
          for (double p : m.probs) positive += p > 0.0;
          return positive == 1 ? Tri::yes : Tri::unknown;
        }
      },
      model.variant());
}

/// A model over {0,1} seen as the censoring process, with theta = P(Y_0 = 1).
struct ZeroOneView {
  ProcessModel model;
  double theta = 0.0;
  Tri ergodic = Tri::unknown;
};

inline ZeroOneView make_zero_one_view(ProcessModel model) {
  require(model.alphabet() == Alphabet::binary(), ErrorKind::InvalidModel, "censoring process must be over {0,1}");
  const double theta = symbol_probs(model)[1];
  require(theta > 0.0, ErrorKind::InvalidTheta, "P(Y_0 = 1) must be positive");
  const Tri erg = is_ergodic(model);
  return {std::move(model), theta, erg};
}

// ---------------------------------------------------------------------------
// Fixtures used throughout tests, demos and the CLI.

namespace fixtures {

/// I.i.d. {0,1} with P(1) = p.
inline IidModel bernoulli(double p) { return make_iid(Alphabet::binary(), {1.0 - p, p}); }

inline MarkovModel symmetric_chain(double stay) {
  Matrix t(2, 2);
  t << stay, 1.0 - stay, 1.0 - stay, stay;
  return make_markov(Alphabet::binary(), t);
}

/// Deterministic rotation i -> i+1 mod n with its uniform law.
inline MarkovModel rotation(std::size_t n) {
  Matrix t = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>((i + 1) % n)) = 1.0;
  return make_markov(Alphabet::numbered(n), t, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

/// Periodic orbit of a string over single-character symbols; 0/1 strings get
/// the binary alphabet so they can serve as censoring processes.
inline PeriodicOrbitModel periodic(const std::string& word) {
  bool binary = true;
  for (char c : word) binary = binary && (c == '0' || c == '1');
  if (binary) return make_periodic(Alphabet::binary(), parse_word(Alphabet::binary(), word));
  std::vector<std::string> syms;
  for (char c : word)
    if (std::find(syms.begin(), syms.end(), std::string(1, c)) == syms.end()) syms.emplace_back(1, c);
  std::sort(syms.begin(), syms.end());
  Alphabet a(syms);
  return make_periodic(a, parse_word(a, word));
}

/// X_i = 2 xi_i + xi_{i+1} for i.i.d. fair bits xi.
inline FunctionOfMarkovModel pair_window_process() {
  Matrix t(2, 2);
  t << 0.5, 0.5, 0.5, 0.5;
  return make_function_of_markov(make_markov(Alphabet::binary(), t), 2, Alphabet::numbered(4), {0, 1, 2, 3});
}

/// The same process written as a 4-state chain: (a,b) -> (b,c) w.p. 1/2.
inline MarkovModel pair_window_chain() {
  Matrix t = Matrix::Zero(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) t(2 * a + b, 2 * b + c) = 0.5;
  return make_markov(Alphabet::numbered(4), t);
}

}  // namespace fixtures

}  // namespace prodent
