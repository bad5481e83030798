#include <gtest/gtest.h>

#include <cmath>

#include "brute.hpp"
#include "prodent/models.hpp"

using namespace prodent;

namespace {

void expect_same_law(const Distribution& got, const std::map<Word, double>& want, double tol = 1e-12) {
  ASSERT_EQ(got.size(), want.size());
  std::size_t i = 0;
  for (const auto& [w, p] : want) {
    EXPECT_EQ(got.support[i], w);
    EXPECT_NEAR(got.probs[i], p, tol);
    ++i;
  }
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Config;
}

std::vector<ProcessModel> zoo() {
  Matrix t(3, 3);
  t << 0.2, 0.5, 0.3, 0.6, 0.1, 0.3, 0.25, 0.25, 0.5;
  Matrix h(2, 2);
  h << 0.7, 0.3, 0.4, 0.6;
  return {
      fixtures::bernoulli(0.3),
      make_markov(Alphabet::numbered(3), t),
      make_function_of_markov(make_markov(Alphabet::binary(), h), 2, Alphabet::binary(), {0, 1, 1, 0}),
      make_exchangeable(Alphabet::binary(), {0.25, 0.75}, {{0.9, 0.1}, {0.3, 0.7}}),
      fixtures::periodic("00101"),
      make_explicit(Alphabet::binary(), 3, {{1, 0, 0}, {1, 1, 0}}, {0.4, 0.6}),
  };
}

}  // namespace

TEST(Alphabet, RejectsEmptyAndDuplicateSymbols) {
  EXPECT_EQ(kind_of([] { Alphabet a(std::vector<std::string>{}); }), ErrorKind::InvalidModel);
  EXPECT_EQ(kind_of([] { Alphabet a({"x", "x"}); }), ErrorKind::InvalidModel);
  EXPECT_EQ(Alphabet::binary().code("1"), 1);
  EXPECT_EQ(kind_of([] { (void)Alphabet::binary().code("2"); }), ErrorKind::InvalidModel);
}

TEST(Markov, StationaryLawOfTwoStateChain) {
  Matrix t(2, 2);
  t << 0.5, 0.5, 0.25, 0.75;
  const auto m = make_markov(Alphabet::binary(), t);
  EXPECT_NEAR(m.stationary[0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.stationary[1], 2.0 / 3.0, 1e-12);
  EXPECT_LE(stationarity_residual(t, m.stationary), 1e-12);
}

TEST(Markov, ReducibleChainHasNoUniqueStationaryLaw) {
  const Matrix t = Matrix::Identity(2, 2);
  EXPECT_EQ(kind_of([&] { (void)make_markov(Alphabet::binary(), t); }), ErrorKind::NonUniqueStationary);
  // an explicit invariant law is accepted
  EXPECT_NO_THROW((void)make_markov(Alphabet::binary(), t, std::vector<double>{0.3, 0.7}));
}

TEST(Markov, RejectsBadRowsAndWrongStationaryLaw) {
  Matrix t(2, 2);
  t << 0.5, 0.6, 0.5, 0.5;
  EXPECT_EQ(kind_of([&] { (void)make_markov(Alphabet::binary(), t); }), ErrorKind::InvalidModel);
  t << 0.9, 0.1, 0.1, 0.9;
  EXPECT_ANY_THROW((void)make_markov(Alphabet::binary(), t, std::vector<double>{0.3, 0.7}));
}

TEST(Markov, TransitionPowerMatchesRepeatedProduct) {
  Matrix t(3, 3);
  t << 0.2, 0.5, 0.3, 0.6, 0.1, 0.3, 0.25, 0.25, 0.5;
  Matrix acc = Matrix::Identity(3, 3);
  for (int k = 1; k <= 13; ++k) {
    acc = acc * t;
    EXPECT_LE((transition_power(t, static_cast<std::uint64_t>(k)) - acc).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Models, FactoriesValidateParameters) {
  EXPECT_EQ(kind_of([] { (void)make_iid(Alphabet::binary(), {0.5, 0.6}); }), ErrorKind::InvalidModel);
  EXPECT_EQ(kind_of([] { (void)make_exchangeable(Alphabet::binary(), {1.0}, {{0.5, 0.4}}); }), ErrorKind::InvalidModel);
  EXPECT_EQ(kind_of([] { (void)make_periodic(Alphabet::binary(), {}); }), ErrorKind::InvalidModel);
  EXPECT_EQ(kind_of([] { (void)make_explicit(Alphabet::binary(), 2, {{0, 1, 1}}, {1.0}); }), ErrorKind::InvalidModel);
}

TEST(Marginals, AgreeWithPathEnumerationForEveryFamily) {
  const std::vector<std::vector<std::int64_t>> index_sets{{0}, {0, 1}, {-2, 0, 3}, {1, 2, 5, 6}, {-1, 4}};
  for (const auto& m : zoo())
    for (const auto& idx : index_sets) {
      SCOPED_TRACE(m.kind_name());
      const auto got = marginal(m, idx);
      got.validate();
      expect_same_law(got, brute::marginal(m, idx));
    }
}

TEST(Marginals, AreShiftInvariant) {
  for (const auto& m : zoo()) {
    SCOPED_TRACE(m.kind_name());
    const auto a = marginal(m, {0, 2, 3});
    const auto b = marginal(m, {7, 9, 10});
    ASSERT_EQ(a.support, b.support);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.probs[i], b.probs[i], 1e-13);
  }
}

TEST(Marginals, ProjectionsAreConsistent) {
  for (const auto& m : zoo()) {
    SCOPED_TRACE(m.kind_name());
    const auto joint = marginal(m, {0, 1, 4});
    const std::size_t keep[] = {0, 2};
    const auto proj = joint.project(keep);
    const auto direct = marginal(m, {0, 4});
    ASSERT_EQ(proj.support, direct.support);
    for (std::size_t i = 0; i < proj.size(); ++i) EXPECT_NEAR(proj.probs[i], direct.probs[i], 1e-13);
  }
}

TEST(Marginals, EmptyIndexSetIsPointMass) {
  const auto d = marginal(fixtures::symmetric_chain(0.9), std::span<const std::int64_t>{});
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.probs[0], 1.0);
}

TEST(Marginals, BudgetIsEnforced) {
  const ProcessModel m = make_iid(Alphabet::numbered(4), {0.25, 0.25, 0.25, 0.25});
  EXPECT_EQ(kind_of([&] { (void)block_marginal(m, 12, 1000); }), ErrorKind::BudgetExceeded);
}

TEST(Sampling, IsDeterministicAndPrefixConsistent) {
  for (const auto& m : zoo()) {
    SCOPED_TRACE(m.kind_name());
    const auto a = sample_window(m, -3, 40, 99);
    EXPECT_EQ(a, sample_window(m, -3, 40, 99));
    const auto b = sample_window(m, -3, 25, 99);
    EXPECT_TRUE(std::equal(b.begin(), b.end(), a.begin()));
  }
}

TEST(Sampling, PairFrequenciesMatchMarginals) {
  constexpr std::size_t kDraws = 40000;
  for (const auto& m : zoo()) {
    SCOPED_TRACE(m.kind_name());
    const auto law = marginal(m, {0, 1});
    std::map<Word, double> freq;
    for (std::size_t i = 0; i < kDraws; ++i) {
      const auto w = sample_window(m, 0, 2, derive_seed(5, i));
      freq[w] += 1.0 / kDraws;
    }
    for (std::size_t i = 0; i < law.size(); ++i) {
      const double p = law.probs[i];
      EXPECT_NEAR(freq[law.support[i]], p, 5.0 * std::sqrt(p * (1 - p) / kDraws) + 1e-12);
    }
  }
}

TEST(Structure, PairWindowProcessIsTheFourStateChain) {
  const auto chain = as_markov(fixtures::pair_window_process());
  ASSERT_TRUE(chain.has_value());
  const auto ref = fixtures::pair_window_chain();
  EXPECT_LE((chain->transition - ref.transition).cwiseAbs().maxCoeff(), 1e-15);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(chain->stationary[i], 0.25, 1e-15);
}

TEST(Structure, NonInjectiveFunctionOfMarkovIsNotReportedAsMarkov) {
  Matrix h(2, 2);
  h << 0.7, 0.3, 0.4, 0.6;
  const ProcessModel m = make_function_of_markov(make_markov(Alphabet::binary(), h), 2, Alphabet::binary(), {0, 1, 1, 0});
  EXPECT_FALSE(as_markov(m).has_value());
  EXPECT_TRUE(as_markov(fixtures::bernoulli(0.2)).has_value());
  EXPECT_FALSE(as_markov(fixtures::periodic("01")).has_value());
}

TEST(Structure, ErgodicityVerdicts) {
  EXPECT_EQ(is_ergodic(fixtures::bernoulli(0.2)), Tri::yes);
  EXPECT_EQ(is_ergodic(fixtures::periodic("011")), Tri::yes);
  EXPECT_EQ(is_ergodic(fixtures::symmetric_chain(0.9)), Tri::yes);
  EXPECT_EQ(is_ergodic(make_exchangeable(Alphabet::binary(), {0.5, 0.5}, {{0.9, 0.1}, {0.1, 0.9}})), Tri::no);
  const Matrix id = Matrix::Identity(2, 2);
  EXPECT_EQ(is_ergodic(make_markov(Alphabet::binary(), id, std::vector<double>{0.5, 0.5})), Tri::unknown);
}

TEST(ZeroOneView, RequiresBinaryAlphabetAndPositiveTheta) {
  EXPECT_EQ(kind_of([] { (void)make_zero_one_view(fixtures::bernoulli(0.0)); }), ErrorKind::InvalidTheta);
  EXPECT_EQ(kind_of([] { (void)make_zero_one_view(fixtures::periodic("ab")); }), ErrorKind::InvalidModel);
  const auto v = make_zero_one_view(fixtures::periodic("0010"));
  EXPECT_DOUBLE_EQ(v.theta, 0.25);
}

TEST(Fixtures, PeriodicOrbitKeepsDistinctRotations) {
  EXPECT_EQ(fixtures::periodic("0101").rotations.size(), 2u);
  EXPECT_EQ(fixtures::periodic("001").rotations.size(), 3u);
  const auto m = fixtures::periodic("abca");
  EXPECT_EQ(m.alphabet.symbols(), (std::vector<std::string>{"a", "b", "c"}));
}
