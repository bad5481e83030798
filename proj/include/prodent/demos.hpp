#pragma once

// Dependent-case constructions: a product that is identically zero although
// its factor has positive entropy, the survivors/victims joining over the
// period-2 orbit, and B-free indicator sequences for finite B.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "prodent/formulas.hpp"
#include "prodent/models.hpp"
#include "prodent/oracle.hpp"
#include "prodent/rng.hpp"

namespace prodent {

// ---------------------------------------------------------------------------
// X = Z.W, Y = 1 - W

struct DependentZeroOptions {
  std::size_t windows = 1000;
  std::size_t window_len = 64;
  std::size_t oracle_n = 8;
  std::uint64_t seed = 1;
};

struct DependentZeroReport {
  double theta_w = 0.0;
  std::size_t windows = 0;
  std::size_t nonzero_products = 0;  // entries of M = X.Y that are not zero
  EntropyEstimate h_m;               // exact zero once no nonzero entry is seen
  EntropyEstimate h_x;               // H(Z.W) from the return-time formula
  C4Bounds c4;                       // theta_W H(Z) <= H(X) <= theta_W H(Z_0)
  double oracle_rate = 0.0;          // H(X_[0,n) | W_[0,n)) / n
  bool positive_entropy = false;     // certified: enclosure lower end > 0
};

/// Z must have a symbol labelled "0", which the product uses for W = 0.
inline DependentZeroReport dependent_zero_demo(const ProcessModel& z, const PeriodicOrbitModel& w,
                                               const DependentZeroOptions& opt = {}) {
  require(w.alphabet == Alphabet::binary(), ErrorKind::InvalidModel, "W must be a {0,1} orbit");
  const ProcessModel w_model = w;
  const double theta_w = symbol_probs(w_model)[1];
  require(theta_w > 0.0 && theta_w < 1.0, ErrorKind::InvalidTheta, "P(W_0 = 1) must lie in (0, 1)");
  const auto& labels = z.alphabet().symbols();
  require(std::find(labels.begin(), labels.end(), "0") != labels.end(), ErrorKind::InvalidModel,
          "Z needs a symbol labelled 0");
  const int zero = z.alphabet().code("0");

  DependentZeroReport r;
  r.theta_w = theta_w;
  r.windows = opt.windows;
  for (std::size_t i = 0; i < opt.windows; ++i) {
    const Word zw = sample_window(z, 0, opt.window_len, derive_seed(opt.seed, 2 * i));
    const Word ww = sample_window(w_model, 0, opt.window_len, derive_seed(opt.seed, 2 * i + 1));
    for (std::size_t j = 0; j < opt.window_len; ++j) {
      const int x = ww[j] == 1 ? zw[j] : zero;
      const int y = 1 - ww[j];
      if (y == 1 && x != zero) ++r.nonzero_products;
    }
  }
  if (r.nonzero_products == 0) r.h_m = {0.0, 0.0, 0.0, std::nullopt, Method::exact};
  else r.h_m = {NAN, 0.0, INFINITY, std::nullopt, Method::exact};

  const auto view = make_zero_one_view(w_model);
  r.h_x = relative_entropy_rate_A(z, view);
  r.c4 = c4_bounds(z, theta_w);
  r.oracle_rate = exact_conditional_block_entropy(z, w_model, opt.oracle_n) / static_cast<double>(opt.oracle_n);
  r.positive_entropy = r.h_x.lower > 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Survivors and victims over the orbit {a, b}, a = ...0101..., b = Sa

enum class ComponentChoice { zero, fair };

inline const char* to_string(ComponentChoice c) { return c == ComponentChoice::zero ? "zero" : "fair"; }

inline ComponentChoice parse_component_choice(const std::string& s) {
  if (s == "zero") return ComponentChoice::zero;
  if (s == "fair") return ComponentChoice::fair;
  fail(ErrorKind::InvalidArgument, "component choice must be 'zero' or 'fair', got '" + s + "'");
}

namespace sv {

/// Orbit point: 0 is a (ones at odd coordinates), 1 is b = Sa.
using Point = int;

inline int point_at(Point c, std::int64_t i) { return static_cast<int>(prodent::detail::floor_mod(i + c, 2)); }
inline Point shift(Point c) { return 1 - c; }

/// A finite window of a two-sided sequence: values on [start, start + size).
struct Seq {
  std::int64_t start = 0;
  Word v;

  std::int64_t end() const { return start + static_cast<std::int64_t>(v.size()); }
  int at(std::int64_t i) const { return v[static_cast<std::size_t>(i - start)]; }
};

/// (Sx)_i = x_{i+1}.
inline Seq shift(const Seq& x) { return {x.start - 1, x.v}; }

inline std::int64_t ceil_half(std::int64_t a) { return (a + prodent::detail::floor_mod(a, 2)) / 2; }

/// j -> x_{2j + offset} over all j with 2j + offset inside the window.
inline Seq sublattice(const Seq& x, std::int64_t offset) {
  const std::int64_t lo = ceil_half(x.start - offset);
  const std::int64_t hi = ceil_half(x.end() - offset);
  Seq out{lo, {}};
  for (std::int64_t j = lo; j < hi; ++j) out.v.push_back(x.at(2 * j + offset));
  return out;
}

struct Split {
  Point c = 0;
  Seq hat;    // survivors
  Seq tilde;  // victims
};

/// Psi-bar: survivors sit where the orbit point is 1.
inline Split split(Point c, const Seq& x) {
  if (c == 0) return {c, sublattice(x, 1), sublattice(x, 0)};
  return {c, sublattice(x, 0), sublattice(x, 1)};
}

/// Inverse of `split` on the coordinates covered by both halves.
inline Seq merge(const Split& s) {
  const std::int64_t hat_off = s.c == 0 ? 1 : 0;
  const std::int64_t tilde_off = 1 - hat_off;
  const std::int64_t lo = std::min(2 * s.hat.start + hat_off, 2 * s.tilde.start + tilde_off);
  const std::int64_t hi = std::max(2 * s.hat.end() - 2 + hat_off, 2 * s.tilde.end() - 2 + tilde_off) + 1;
  Seq x{lo, Word(static_cast<std::size_t>(hi - lo), -1)};
  for (std::int64_t j = s.hat.start; j < s.hat.end(); ++j) x.v[static_cast<std::size_t>(2 * j + hat_off - lo)] = s.hat.at(j);
  for (std::int64_t j = s.tilde.start; j < s.tilde.end(); ++j)
    x.v[static_cast<std::size_t>(2 * j + tilde_off - lo)] = s.tilde.at(j);
  return x;
}

/// S-bar(a, y, z) = (b, y, Sz); S-bar(b, y, z) = (a, Sy, z).
inline Split skew_shift(const Split& s) {
  if (s.c == 0) return {1, s.hat, shift(s.tilde)};
  return {0, shift(s.hat), s.tilde};
}

/// m(a, y) puts y on odd coordinates, m(b, y) on even ones; zeros elsewhere.
inline Seq spread(Point c, const Seq& y) {
  const std::int64_t off = c == 0 ? 1 : 0;
  Seq out{2 * y.start, Word(2 * y.v.size(), 0)};
  for (std::int64_t j = y.start; j < y.end(); ++j) out.v[static_cast<std::size_t>(2 * j + off - out.start)] = y.at(j);
  return out;
}

/// M_i = c_i x_i.
inline Seq product(Point c, const Seq& x) {
  Seq out{x.start, x.v};
  for (std::int64_t i = x.start; i < x.end(); ++i) out.v[static_cast<std::size_t>(i - x.start)] *= point_at(c, i);
  return out;
}

/// Entries that differ on the common coordinates; an empty overlap counts
/// as one mismatch so that vacuous comparisons cannot pass.
inline std::size_t mismatches(const Seq& p, const Seq& q) {
  const std::int64_t lo = std::max(p.start, q.start);
  const std::int64_t hi = std::min(p.end(), q.end());
  if (lo >= hi) return 1;
  std::size_t n = 0;
  for (std::int64_t i = lo; i < hi; ++i) n += p.at(i) != q.at(i);
  return n;
}

}  // namespace sv

struct SurvivorsVictimsOptions {
  ComponentChoice khat = ComponentChoice::zero;
  ComponentChoice ktilde = ComponentChoice::fair;
  std::size_t block = 8;
  std::size_t samples = 100'000;
  std::size_t identity_windows = 1000;
  std::int64_t half_width = 32;
  std::uint64_t seed = 1;
};

struct SurvivorsVictimsReport {
  std::size_t identity_windows = 0;
  std::size_t commute_mismatches = 0;  // Psi-bar o (S x S) against S-bar o Psi-bar
  std::size_t product_mismatches = 0;  // M against m o pi_{1,2} o Psi-bar
  std::size_t inverse_mismatches = 0;  // Psi-bar^-1 o Psi-bar against identity
  PluginEstimate joint_rate;           // H_n - H_{n-2} of the (orbit, x) blocks: one period of the orbit
  PluginEstimate product_entropy;      // H of the length-n product block
  PluginEstimate product_rate;         // H_n - H_{n-2} of the product blocks
};

inline SurvivorsVictimsReport survivors_victims_demo(const SurvivorsVictimsOptions& opt = {}) {
  require(opt.block >= 3, ErrorKind::InvalidArgument, "block must be at least 3");
  require(opt.half_width >= 2, ErrorKind::InvalidArgument, "half width must be at least 2");
  SurvivorsVictimsReport r;
  r.identity_windows = opt.identity_windows;

  // (i), (ii) and the inverse hold for every x, so test on fair bits.
  const auto len = static_cast<std::size_t>(2 * opt.half_width);
  for (std::size_t w = 0; w < opt.identity_windows; ++w) {
    CounterRng rng(derive_seed(opt.seed, w));
    const sv::Point c = static_cast<sv::Point>(rng.below(2));
    sv::Seq x{-opt.half_width, Word(len)};
    for (auto& v : x.v) v = static_cast<int>(rng.below(2));

    const auto lhs = sv::split(sv::shift(c), sv::shift(x));
    const auto rhs = sv::skew_shift(sv::split(c, x));
    r.commute_mismatches += (lhs.c != rhs.c) + sv::mismatches(lhs.hat, rhs.hat) + sv::mismatches(lhs.tilde, rhs.tilde);

    const auto s = sv::split(c, x);
    r.product_mismatches += sv::mismatches(sv::product(c, x), sv::spread(c, s.hat));
    r.inverse_mismatches += sv::mismatches(sv::merge(s), x);
  }

  // Stationary joining: orbit point uniform, survivors and victims drawn
  // from their component measures, x reassembled.
  auto draw = [](ComponentChoice k, CounterRng& rng) { return k == ComponentChoice::zero ? 0 : static_cast<int>(rng.below(2)); };
  const std::size_t n = opt.block;
  std::vector<Word> joint_n(opt.samples), joint_n2(opt.samples), prod_n(opt.samples), prod_n2(opt.samples);
  for (std::size_t i = 0; i < opt.samples; ++i) {
    CounterRng rng(derive_seed(opt.seed ^ 0x5a5a5a5a5a5a5a5aULL, i));
    const sv::Point c = static_cast<sv::Point>(rng.below(2));
    const std::int64_t half = static_cast<std::int64_t>(n + 1) / 2 + 1;
    sv::Split s{c, {0, Word(static_cast<std::size_t>(half))}, {0, Word(static_cast<std::size_t>(half))}};
    for (auto& v : s.hat.v) v = draw(opt.khat, rng);
    for (auto& v : s.tilde.v) v = draw(opt.ktilde, rng);
    const auto x = sv::merge(s);
    Word joint(n), prod(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto i_ = static_cast<std::int64_t>(j);
      joint[j] = 2 * sv::point_at(c, i_) + x.at(i_);
      prod[j] = sv::point_at(c, i_) * x.at(i_);
    }
    joint_n[i] = joint;
    joint_n2[i] = Word(joint.begin(), joint.end() - 2);
    prod_n[i] = prod;
    prod_n2[i] = Word(prod.begin(), prod.end() - 2);
  }
  PluginOptions po;
  po.seed = opt.seed;
  const double diff[] = {1.0, -1.0};
  const double single[] = {1.0};
  {
    const CodedSamples views[] = {code_samples(joint_n), code_samples(joint_n2)};
    r.joint_rate = plugin_combination(views, diff, po);
  }
  {
    const CodedSamples views[] = {code_samples(prod_n), code_samples(prod_n2)};
    r.product_rate = plugin_combination(views, diff, po);
    r.product_entropy = plugin_combination(std::span(views, 1), single, po);
  }
  return r;
}

// ---------------------------------------------------------------------------
// B-free indicators

inline constexpr std::uint64_t kMaxBFreePeriod = std::uint64_t{1} << 22;

struct BFreeIndicator {
  std::vector<std::uint64_t> b;
  std::uint64_t period = 0;
  std::size_t free_residues = 0;
  double theta = 0.0;
  PeriodicOrbitModel orbit;
  std::int64_t first = 0;
  Word window;  // eta(first), ..., eta(first + length - 1)
};

/// eta(n) = 1 iff no element of B divides n; eta has period lcm(B).
inline BFreeIndicator bfree_indicator(std::vector<std::uint64_t> b, std::int64_t first = 0, std::size_t length = 0) {
  require(!b.empty(), ErrorKind::InvalidArgument, "B must be nonempty");
  std::uint64_t l = 1;
  for (auto v : b) {
    require(v >= 2, ErrorKind::InvalidArgument, "elements of B must be at least 2");
    const std::uint64_t g = std::gcd(l, v);
    require(l / g <= kMaxBFreePeriod / v, ErrorKind::Overflow, "lcm(B) exceeds the supported period");
    l = l / g * v;
  }
  BFreeIndicator out;
  std::sort(b.begin(), b.end());
  out.b = b;
  out.period = l;
  Word word(l);
  for (std::uint64_t n = 0; n < l; ++n) {
    bool free = true;
    for (auto v : b) free = free && n % v != 0;
    word[n] = free ? 1 : 0;
    out.free_residues += free;
  }
  out.theta = static_cast<double>(out.free_residues) / static_cast<double>(l);
  out.orbit = make_periodic(Alphabet::binary(), word);
  out.first = first;
  for (std::size_t i = 0; i < length; ++i)
    out.window.push_back(word[static_cast<std::size_t>(detail::floor_mod(first + static_cast<std::int64_t>(i), static_cast<std::int64_t>(l)))]);
  return out;
}

}  // namespace prodent
