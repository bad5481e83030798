#include <gtest/gtest.h>

#include <cmath>

#include "prodent/demos.hpp"

using namespace prodent;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Config;
}

std::string word_string(const Word& w) {
  std::string s;
  for (int v : w) s += static_cast<char>('0' + v);
  return s;
}

}  // namespace

TEST(DependentZero, ProductVanishesWhileXHasEntropy) {
  const ProcessModel z = fixtures::bernoulli(0.5);
  const auto r = dependent_zero_demo(z, fixtures::periodic("01"));
  EXPECT_EQ(r.nonzero_products, 0u);
  EXPECT_EQ(r.h_m.value, 0.0);
  EXPECT_EQ(r.h_m.method, Method::exact);
  EXPECT_NEAR(r.h_x.value, 0.5, 1e-12);
  EXPECT_TRUE(r.positive_entropy);
  EXPECT_NEAR(r.c4.lower, 0.5, 1e-12);
  EXPECT_NEAR(r.oracle_rate, 0.5, 1e-12);
}

TEST(DependentZero, SparserOrbit) {
  const auto r = dependent_zero_demo(fixtures::bernoulli(0.5), fixtures::periodic("100"));
  EXPECT_EQ(r.nonzero_products, 0u);
  EXPECT_NEAR(r.theta_w, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.h_x.value, 1.0 / 3.0, 1e-12);
  EXPECT_GE(r.h_x.value, r.c4.lower - 1e-12);
  EXPECT_LE(r.h_x.value, r.c4.upper + 1e-12);
}

TEST(DependentZero, RejectsDegenerateOrbitsAndUnlabelledZ) {
  EXPECT_EQ(kind_of([] { (void)dependent_zero_demo(fixtures::bernoulli(0.5), fixtures::periodic("1")); }),
            ErrorKind::InvalidTheta);
  EXPECT_EQ(kind_of([] { (void)dependent_zero_demo(fixtures::bernoulli(0.5), fixtures::periodic("00")); }),
            ErrorKind::InvalidTheta);
  const ProcessModel no_zero = make_iid(Alphabet({"a", "b"}), {0.5, 0.5});
  EXPECT_EQ(kind_of([&] { (void)dependent_zero_demo(no_zero, fixtures::periodic("01")); }), ErrorKind::InvalidModel);
}

TEST(SurvivorsVictims, SplitSeparatesTheSublattices) {
  const sv::Seq x{-2, {5, 6, 7, 8, 9, 4}};  // x_{-2}, ..., x_3
  const auto a = sv::split(0, x);
  EXPECT_EQ(a.hat.v, (Word{6, 8, 4}));  // x_{-1}, x_1, x_3
  EXPECT_EQ(a.hat.start, -1);
  EXPECT_EQ(a.tilde.v, (Word{5, 7, 9}));  // x_{-2}, x_0, x_2
  EXPECT_EQ(a.tilde.start, -1);
  const auto b = sv::split(1, x);
  EXPECT_EQ(b.hat.v, a.tilde.v);
  EXPECT_EQ(sv::mismatches(sv::merge(a), x), 0u);
  EXPECT_EQ(sv::point_at(0, 1), 1);
  EXPECT_EQ(sv::point_at(1, 0), 1);
  EXPECT_EQ(sv::point_at(sv::shift(0), 0), sv::point_at(0, 1));
}

TEST(SurvivorsVictims, EmptyOverlapIsAMismatch) {
  EXPECT_EQ(sv::mismatches(sv::Seq{0, {1}}, sv::Seq{5, {1}}), 1u);
}

TEST(SurvivorsVictims, IdentitiesHoldAndProductForgetsTheVictims) {
  SurvivorsVictimsOptions o;
  o.samples = 20000;
  o.identity_windows = 500;
  const auto r = survivors_victims_demo(o);
  EXPECT_EQ(r.commute_mismatches, 0u);
  EXPECT_EQ(r.product_mismatches, 0u);
  EXPECT_EQ(r.inverse_mismatches, 0u);
  const auto& j = r.joint_rate.estimate;
  EXPECT_NEAR(j.value, 1.0, kStderrMultiplier * *j.std_error);
  EXPECT_LE(r.product_entropy.estimate.value, 0.01);
  EXPECT_LE(r.product_rate.estimate.value, 0.01);
}

TEST(SurvivorsVictims, FairSurvivorsAreVisibleInTheProduct) {
  SurvivorsVictimsOptions o;
  o.khat = ComponentChoice::fair;
  o.ktilde = ComponentChoice::zero;
  o.samples = 20000;
  o.identity_windows = 50;
  const auto r = survivors_victims_demo(o);
  // The phase is hidden only by an all-zero block, so for even n
  // H_n = 1 + n/2 - 2^{-n/2}, and H_8 - H_6 = 1 + 1/8 - 1/16.
  const auto& p = r.product_rate.estimate;
  EXPECT_NEAR(p.value, 1.0625, kStderrMultiplier * *p.std_error);
}

TEST(SurvivorsVictims, ComponentChoiceParsing) {
  EXPECT_EQ(parse_component_choice("zero"), ComponentChoice::zero);
  EXPECT_EQ(parse_component_choice("fair"), ComponentChoice::fair);
  EXPECT_STREQ(to_string(ComponentChoice::fair), "fair");
  EXPECT_ANY_THROW((void)parse_component_choice("half"));
}

TEST(BFree, SmallSets) {
  const auto two = bfree_indicator({2});
  EXPECT_EQ(two.period, 2u);
  EXPECT_EQ(word_string(two.orbit.word), "01");
  EXPECT_DOUBLE_EQ(two.theta, 0.5);
  const auto six = bfree_indicator({3, 2}, -3, 9);
  EXPECT_EQ(word_string(six.orbit.word), "010001");
  EXPECT_DOUBLE_EQ(six.theta, 1.0 / 3.0);
  EXPECT_EQ(six.b, (std::vector<std::uint64_t>{2, 3}));
  EXPECT_EQ(word_string(six.window), "001010001");  // eta(-3), ..., eta(5)
  const auto redundant = bfree_indicator({2, 4});
  EXPECT_EQ(redundant.period, 4u);
  EXPECT_DOUBLE_EQ(redundant.theta, 0.5);
}

TEST(BFree, CoprimeDensityIsAProduct) {
  for (const std::vector<std::uint64_t>& b : {std::vector<std::uint64_t>{2, 3, 5}, {3, 5, 7}, {4, 9, 25}, {2, 3, 5, 7, 11}}) {
    double want = 1.0;
    for (auto v : b) want *= 1.0 - 1.0 / static_cast<double>(v);
    EXPECT_NEAR(bfree_indicator(b).theta, want, 1e-12);
  }
}

TEST(BFree, LargePeriodsAreRejected) {
  EXPECT_EQ(kind_of([] { (void)bfree_indicator({1000003, 1000033}); }), ErrorKind::Overflow);
  EXPECT_EQ(kind_of([] { (void)bfree_indicator({}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { (void)bfree_indicator({1}); }), ErrorKind::InvalidArgument);
}
