#include <gtest/gtest.h>

#include <cmath>

#include "brute.hpp"
#include "prodent/formulas.hpp"
#include "prodent/oracle.hpp"

using namespace prodent;

// Randomized invariants. Every case is drawn from a fixed seed so failures
// reproduce; the case index is printed on failure.

namespace {

constexpr double kTol = 1e-9;

std::vector<double> random_simplex(CounterRng& rng, std::size_t n, double floor = 0.02) {
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& v : p) s += v = floor + rng.uniform();
  for (auto& v : p) v /= s;
  return p;
}

MarkovModel random_chain(CounterRng& rng, std::size_t states) {
  Matrix t(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
  for (std::size_t r = 0; r < states; ++r) {
    const auto row = random_simplex(rng, states);
    for (std::size_t c = 0; c < states; ++c) t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return make_markov(Alphabet::numbered(states), t);
}

ProcessModel random_censor(CounterRng& rng) {
  if (rng.bernoulli(0.5)) return fixtures::bernoulli(0.1 + 0.8 * rng.uniform());
  const std::size_t len = 1 + rng.below(6);
  std::string w(len, '0');
  for (auto& ch : w) ch = rng.bernoulli(0.5) ? '1' : '0';
  w[rng.below(len)] = '1';
  return fixtures::periodic(w);
}

}  // namespace

TEST(Sandwich, MarkovFormulaLiesBetweenTheC4BoundsAndBelowB) {
  CounterRng rng(20260101);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < 120; ++i) {
    SCOPED_TRACE("case " + std::to_string(i));
    const auto chain = random_chain(rng, 2 + rng.below(3));
    const auto y = make_zero_one_view(random_censor(rng));
    const auto law = r1_distribution(y);
    const auto ma = markov_product_entropy(chain, law, y.theta);
    const auto b = theorem_b_upper_markov(chain, law, y.theta);
    const auto c4 = c4_bounds(chain, y.theta);
    ma.validate();
    b.validate();
    EXPECT_GE(ma.value, c4.lower - kTol);
    EXPECT_LE(ma.value, c4.upper + kTol);
    EXPECT_LE(ma.value, b.value + kTol);
    EXPECT_LE(b.value, markov_entropy_rate(chain) + kTol);
    ++checked;
  }
  EXPECT_GE(checked, 100u);
}

TEST(Sandwich, OracleIncrementsDominateTheMarkovFormula) {
  // For periodic censoring the per-period oracle increment equals the
  // formula once the block covers two periods; before that it is larger.
  CounterRng rng(77);
  for (std::size_t i = 0; i < 20; ++i) {
    SCOPED_TRACE("case " + std::to_string(i));
    const auto chain = random_chain(rng, 2);
    std::string w = rng.bernoulli(0.5) ? "01" : "011";
    const ProcessModel y = fixtures::periodic(w);
    const auto view = make_zero_one_view(y);
    const double ma = markov_product_entropy(chain, r1_distribution(view), view.theta).value;
    const auto h = exact_conditional_block_entropies(chain, y, 9);
    const std::size_t p = w.size();
    for (std::size_t n = 2 * p; n <= 9; ++n)
      EXPECT_NEAR((h[n - 1] - h[n - 1 - p]) / static_cast<double>(p), ma, 1e-10) << "n=" << n;
    for (std::size_t n = 1; n <= 9; ++n) EXPECT_GE(h[n - 1] / static_cast<double>(n), ma - kTol);
  }
}

TEST(Exchangeable, ProductEntropyAttainsTheLowerBound) {
  CounterRng rng(5);
  for (std::size_t i = 0; i < 25; ++i) {
    SCOPED_TRACE("case " + std::to_string(i));
    const std::size_t k = 1 + rng.below(4);
    const std::size_t a = 2 + rng.below(2);
    std::vector<std::vector<double>> comps;
    for (std::size_t c = 0; c < k; ++c) comps.push_back(random_simplex(rng, a));
    const auto mix = make_exchangeable(Alphabet::numbered(a), random_simplex(rng, k), comps);
    const double theta = 0.05 + 0.9 * rng.uniform();
    EXPECT_NEAR(exchangeable_product_entropy(mix, theta).value, c4_bounds(mix, theta).lower, 1e-12);
  }
}

TEST(Determinism, ProfilesAreMonotoneAndMatchTheMarkovClosedForm) {
  CounterRng rng(9);
  for (std::size_t i = 0; i < 15; ++i) {
    SCOPED_TRACE("case " + std::to_string(i));
    const auto chain = random_chain(rng, 2 + rng.below(2));
    const auto p = determinism_profile(chain, 3, 3);
    for (std::size_t k = 0; k <= 3; ++k) {
      for (std::size_t m = 1; m <= 3; ++m) {
        EXPECT_LE(p.at(k, m), p.at(k, m - 1) + 1e-12);
        EXPECT_GE(p.at(k, m), -1e-12);
        EXPECT_NEAR(p.at(k, m), markov_determinism_closed_form(chain, k), 1e-10);
      }
    }
  }
}

TEST(Oracle, BlockEntropiesAreMonotoneAndSubadditive) {
  CounterRng rng(13);
  for (std::size_t i = 0; i < 12; ++i) {
    SCOPED_TRACE("case " + std::to_string(i));
    const ProcessModel x = random_chain(rng, 2);
    const ProcessModel y = rng.bernoulli(0.5) ? ProcessModel(random_chain(rng, 2)) : random_censor(rng);
    const auto h = exact_conditional_block_entropies(x, y, 8);
    for (std::size_t n = 1; n < h.size(); ++n) EXPECT_GE(h[n], h[n - 1] - 1e-12);
    for (std::size_t a = 1; a <= 8; ++a)
      for (std::size_t b = 1; a + b <= 8; ++b) EXPECT_LE(h[a + b - 1], h[a - 1] + h[b - 1] + 1e-10);
  }
}

TEST(Oracle, MatchesEnumerationOnRandomPairs) {
  CounterRng rng(17);
  for (std::size_t i = 0; i < 10; ++i) {
    SCOPED_TRACE("case " + std::to_string(i));
    const ProcessModel x = random_chain(rng, 3);
    const ProcessModel y = random_chain(rng, 2);
    for (std::size_t n = 1; n <= 5; ++n)
      EXPECT_NEAR(exact_conditional_block_entropy(x, y, n), brute::conditional_block(x, y, n), 1e-11);
  }
}

TEST(Marginals, RandomIndexSetsMatchEnumeration) {
  CounterRng rng(23);
  for (std::size_t i = 0; i < 30; ++i) {
    SCOPED_TRACE("case " + std::to_string(i));
    const ProcessModel m = random_chain(rng, 2 + rng.below(2));
    std::vector<std::int64_t> idx;
    std::int64_t at = static_cast<std::int64_t>(rng.below(5)) - 2;
    for (std::size_t j = 0, n = 1 + rng.below(4); j < n; ++j) {
      idx.push_back(at);
      at += 1 + static_cast<std::int64_t>(rng.below(3));
    }
    const auto got = marginal(m, idx);
    const auto want = brute::marginal(m, idx);
    ASSERT_EQ(got.size(), want.size());
    std::size_t j = 0;
    for (const auto& [w, p] : want) {
      EXPECT_EQ(got.support[j], w);
      EXPECT_NEAR(got.probs[j], p, 1e-12);
      ++j;
    }
  }
}

TEST(TheoremA, TruncationsDecreaseInMForHiddenMarkovModels) {
  CounterRng rng(29);
  for (std::size_t i = 0; i < 10; ++i) {
    SCOPED_TRACE("case " + std::to_string(i));
    const auto base = random_chain(rng, 2);
    const ProcessModel x = make_function_of_markov(base, 2, Alphabet::binary(), {0, 1, 1, 0});
    const auto y = make_zero_one_view(random_censor(rng));
    if (!y.model.as<PeriodicOrbitModel>()) continue;
    const auto rate = entropy_rate(x, 10);
    double prev = INFINITY;
    for (std::size_t m = 1; m <= 5; ++m) {
      TheoremAOptions opt;
      opt.m_returns = m;
      const double v = relative_entropy_rate_A(x, y, opt).value;
      EXPECT_LE(v, prev + 1e-12);
      EXPECT_GE(v, y.theta * rate.lower - 1e-12);
      EXPECT_LE(v, y.theta * symbol_entropy(x) + 1e-12);
      prev = v;
    }
  }
}
