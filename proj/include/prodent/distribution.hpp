#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "prodent/error.hpp"

namespace prodent {

/// A finite sequence of symbol codes. Codes index into an Alphabet.
using Word = std::vector<int>;

inline constexpr double kProbTol = 1e-12;

class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
    require(!symbols_.empty(), ErrorKind::InvalidModel, "alphabet must be nonempty");
    require(symbols_.size() <= 64, ErrorKind::InvalidModel, "alphabet larger than 64 symbols");
    std::unordered_set<std::string> seen(symbols_.begin(), symbols_.end());
    require(seen.size() == symbols_.size(), ErrorKind::InvalidModel, "alphabet symbols must be distinct");
  }

  static Alphabet binary() { return Alphabet({"0", "1"}); }

  /// Symbols "0", "1", ..., "n-1".
  static Alphabet numbered(std::size_t n) {
    std::vector<std::string> s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(std::to_string(i));
    return Alphabet(std::move(s));
  }

  std::size_t size() const noexcept { return symbols_.size(); }
  const std::string& label(int code) const { return symbols_.at(static_cast<std::size_t>(code)); }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }

  int code(const std::string& label) const {
    auto it = std::find(symbols_.begin(), symbols_.end(), label);
    require(it != symbols_.end(), ErrorKind::InvalidModel, "unknown symbol '" + label + "'");
    return static_cast<int>(it - symbols_.begin());
  }

  bool operator==(const Alphabet&) const = default;

 private:
  std::vector<std::string> symbols_;
};

/// Probability vector over distinct tuples of equal arity. Support is kept in
/// lexicographic order, which is the canonical form compared by tests.
struct Distribution {
  std::vector<Word> support;
  std::vector<double> probs;

  std::size_t size() const noexcept { return probs.size(); }
  std::size_t arity() const noexcept { return support.empty() ? 0 : support.front().size(); }

  /// Builds the canonical form, dropping exact zeros.
  static Distribution from_map(const std::map<Word, double>& m) {
    Distribution d;
    d.support.reserve(m.size());
    d.probs.reserve(m.size());
    for (const auto& [w, p] : m) {
      if (p == 0.0) continue;
      d.support.push_back(w);
      d.probs.push_back(p);
    }
    return d;
  }

  /// Single-symbol distribution from a probability vector over codes.
  static Distribution over_symbols(std::span<const double> p) {
    std::map<Word, double> m;
    for (std::size_t i = 0; i < p.size(); ++i) m[Word{static_cast<int>(i)}] += p[i];
    return from_map(m);
  }

  double total() const noexcept {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }

  void validate(double tol = kProbTol) const {
    require(support.size() == probs.size(), ErrorKind::InvalidArgument, "support/probs size mismatch");
    for (double p : probs) require(p >= 0.0 && std::isfinite(p), ErrorKind::InvalidArgument, "negative probability");
    require(std::abs(total() - 1.0) <= tol, ErrorKind::InvalidArgument, "probabilities do not sum to 1");
    const std::size_t k = arity();
    for (const auto& w : support) require(w.size() == k, ErrorKind::InvalidArgument, "tuples of mixed arity");
    auto sorted = support;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorKind::InvalidArgument,
            "duplicate support entries");
  }

  double prob(const Word& w) const {
    auto it = std::lower_bound(support.begin(), support.end(), w);
    if (it == support.end() || *it != w) return 0.0;
    return probs[static_cast<std::size_t>(it - support.begin())];
  }

  /// Marginal on the given tuple positions, in the given order.
  Distribution project(std::span<const std::size_t> positions) const {
    std::map<Word, double> m;
    Word key(positions.size());
    for (std::size_t i = 0; i < support.size(); ++i) {
      for (std::size_t j = 0; j < positions.size(); ++j) key[j] = support[i][positions[j]];
      m[key] += probs[i];
    }
    return from_map(m);
  }
};

}  // namespace prodent
