#include <gtest/gtest.h>

#include <cmath>

#include "brute.hpp"
#include "prodent/oracle.hpp"

using namespace prodent;

namespace {

struct Blocks {
  std::vector<Word> m, y;
};

Blocks sample_blocks(const ProcessModel& x, const ProcessModel& y, std::size_t len, std::size_t n, std::uint64_t seed) {
  Blocks b;
  for (std::size_t i = 0; i < n; ++i) {
    const auto xw = sample_window(x, 0, len, derive_seed(seed, 2 * i));
    auto yw = sample_window(y, 0, len, derive_seed(seed, 2 * i + 1));
    Word mw(len);
    for (std::size_t j = 0; j < len; ++j) mw[j] = xw[j] * yw[j];
    b.m.push_back(std::move(mw));
    b.y.push_back(std::move(yw));
  }
  return b;
}

}  // namespace

TEST(Oracle, SingleCoordinateIsThetaTimesSymbolEntropy) {
  const ProcessModel x = fixtures::symmetric_chain(0.7);
  for (const ProcessModel& y : {ProcessModel(fixtures::bernoulli(0.3)), ProcessModel(fixtures::periodic("011"))}) {
    const double theta = marginal(y, {0}).probs.back();
    EXPECT_NEAR(exact_conditional_block_entropy(x, y, 1), theta * symbol_entropy(x), 1e-12);
  }
}

TEST(Oracle, PairWindowHasUnitRateAtEvenLengths) {
  const ProcessModel x = fixtures::pair_window_process();
  const ProcessModel y = fixtures::periodic("01");
  const auto h = exact_conditional_block_entropies(x, y, 12);
  EXPECT_NEAR(h[1], 2.0, 1e-12);
  for (std::size_t n = 2; n <= 12; n += 2) EXPECT_NEAR(h[n - 1] / static_cast<double>(n), 1.0, 1e-9) << n;
}

TEST(Oracle, SymmetricChainPeriodIncrementsMatchTheMarkovFormula) {
  const ProcessModel x = fixtures::symmetric_chain(0.9);
  const ProcessModel y = fixtures::periodic("01");
  const auto h = exact_conditional_block_entropies(x, y, 12);
  const auto r = rate_estimates(h, 2);
  for (std::size_t n = 4; n <= 12; ++n) EXPECT_NEAR(r.increments[n - 3], 0.340038522864, 1e-11) << n;
  EXPECT_NEAR(r.per_n[11], 0.366698769, 1e-9);
  for (double v : r.per_n) EXPECT_GE(v, 0.340038522864 - 1e-12);
}

TEST(Oracle, IidPairsAreAdditive) {
  const ProcessModel x = fixtures::bernoulli(0.2);
  const ProcessModel y = fixtures::bernoulli(0.6);
  const double h0 = symbol_entropy(x);
  for (std::size_t n = 1; n <= 8; ++n)
    EXPECT_NEAR(exact_conditional_block_entropy(x, y, n), static_cast<double>(n) * 0.6 * h0, 1e-11);
}

TEST(Oracle, AgreesWithJointEnumeration) {
  Matrix h(2, 2);
  h << 0.7, 0.3, 0.4, 0.6;
  const ProcessModel fom = make_function_of_markov(make_markov(Alphabet::binary(), h), 2, Alphabet::binary(), {0, 1, 1, 0});
  Matrix t(2, 2);
  t << 0.6, 0.4, 0.3, 0.7;
  const ProcessModel ychain = make_markov(Alphabet::binary(), t);
  const std::vector<std::pair<ProcessModel, ProcessModel>> pairs{
      {fom, ychain},
      {fixtures::symmetric_chain(0.9), fixtures::periodic("0110")},
      {make_exchangeable(Alphabet::binary(), {0.5, 0.5}, {{0.9, 0.1}, {0.2, 0.8}}), fixtures::bernoulli(0.5)},
      {fixtures::pair_window_process(), ychain},
  };
  for (const auto& [x, y] : pairs)
    for (std::size_t n = 1; n <= 6; ++n)
      EXPECT_NEAR(exact_conditional_block_entropy(x, y, n), brute::conditional_block(x, y, n), 1e-11)
          << x.kind_name() << " n=" << n;
}

TEST(Oracle, ThreadCountDoesNotChangeTheResult) {
  const ProcessModel x = fixtures::symmetric_chain(0.8);
  const ProcessModel y = fixtures::bernoulli(0.5);
  const double a = exact_conditional_block_entropy(x, y, 10, {kDefaultOracleBudget, 1});
  const double b = exact_conditional_block_entropy(x, y, 10, {kDefaultOracleBudget, 4});
  EXPECT_NEAR(a, b, 1e-12);
}

TEST(Oracle, BudgetIsEnforced) {
  try {
    (void)exact_conditional_block_entropy(fixtures::symmetric_chain(0.8), fixtures::bernoulli(0.5), 16, {1000, 1});
    FAIL() << "expected BudgetExceeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BudgetExceeded);
  }
}

TEST(RateEstimates, PerNAndIncrements) {
  const double h[] = {1.0, 1.5, 2.25, 3.0};
  const auto r = rate_estimates(h, 1);
  EXPECT_EQ(r.per_n, (std::vector<double>{1.0, 0.75, 0.75, 0.75}));
  EXPECT_EQ(r.increments, (std::vector<double>{0.5, 0.75, 0.75}));
}

TEST(Plugin, ConstantProductHasZeroEntropy) {
  const auto b = sample_blocks(fixtures::bernoulli(0.5), fixtures::periodic("0"), 4, 2000, 1);
  const auto e = plugin_conditional_block_entropy(b.m, b.y);
  EXPECT_EQ(e.estimate.value, 0.0);
  EXPECT_EQ(*e.estimate.std_error, 0.0);
}

TEST(Plugin, FairBitsFullyObservedGiveFourBitsPerBlock) {
  const auto b = sample_blocks(fixtures::bernoulli(0.5), fixtures::periodic("1"), 4, 50000, 2);
  const auto e = plugin_conditional_block_entropy(b.m, b.y);
  EXPECT_FALSE(e.insufficient_data);
  EXPECT_NEAR(e.estimate.value, 4.0, kStderrMultiplier * *e.estimate.std_error);
  e.estimate.validate();
}

TEST(Plugin, PairWindowBlockMatchesTheExactOracle) {
  const ProcessModel x = fixtures::pair_window_process();
  const ProcessModel y = fixtures::periodic("01");
  const double exact = exact_conditional_block_entropy(x, y, 4);
  EXPECT_NEAR(exact, 4.0, 1e-12);
  const auto b = sample_blocks(x, y, 4, 50000, 3);
  const auto e = plugin_conditional_block_entropy(b.m, b.y);
  EXPECT_NEAR(e.estimate.value, exact, kStderrMultiplier * *e.estimate.std_error);
}

TEST(Plugin, SparseClassesAreFlagged) {
  const auto b = sample_blocks(fixtures::bernoulli(0.5), fixtures::bernoulli(0.5), 8, 300, 4);
  EXPECT_TRUE(plugin_conditional_block_entropy(b.m, b.y).insufficient_data);
}

TEST(Plugin, BootstrapIsSeeded) {
  const auto b = sample_blocks(fixtures::bernoulli(0.3), fixtures::bernoulli(0.5), 3, 5000, 5);
  PluginOptions o;
  o.seed = 9;
  const auto e1 = plugin_conditional_block_entropy(b.m, b.y, o);
  const auto e2 = plugin_conditional_block_entropy(b.m, b.y, o);
  EXPECT_EQ(*e1.estimate.std_error, *e2.estimate.std_error);
  EXPECT_GT(*e1.estimate.std_error, 0.0);
}

TEST(Plugin, MillerMadowReducesDownwardBias) {
  const auto b = sample_blocks(fixtures::bernoulli(0.5), fixtures::periodic("1"), 6, 2000, 6);
  PluginOptions raw;
  raw.miller_madow = false;
  raw.bootstrap = 0;
  PluginOptions mm;
  mm.bootstrap = 0;
  const double r = plugin_conditional_block_entropy(b.m, b.y, raw).estimate.value;
  const double c = plugin_conditional_block_entropy(b.m, b.y, mm).estimate.value;
  EXPECT_LT(r, c);
  EXPECT_LT(std::abs(c - 6.0), std::abs(r - 6.0));
}
