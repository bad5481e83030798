#pragma once

// Config-driven experiments: JSON config in, ResultRow tables out as CSV
// and JSON, plus re-verification of a finished run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prodent/demos.hpp"
#include "prodent/formulas.hpp"
#include "prodent/models.hpp"
#include "prodent/oracle.hpp"
#include "prodent/returns.hpp"

namespace prodent {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Model specs

namespace detail {

inline void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), ErrorKind::Config, where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    require(ok, ErrorKind::Config, "unknown key '" + k + "' in " + where);
  }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("bad value for '") + key + "': " + e.what());
  }
}

template <class T>
T get_req(const Json& j, const char* key, const std::string& where) {
  require(j.contains(key) && !j[key].is_null(), ErrorKind::Config, std::string("missing '") + key + "' in " + where);
  return get_or<T>(j, key, T{});
}

inline Alphabet alphabet_or(const Json& j, std::size_t size) {
  if (j.contains("alphabet")) return Alphabet(get_req<std::vector<std::string>>(j, "alphabet", "model"));
  return Alphabet::numbered(size);
}

inline Matrix matrix_from(const std::vector<std::vector<double>>& rows) {
  require(!rows.empty(), ErrorKind::InvalidModel, "empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == rows.size(), ErrorKind::InvalidModel, "transition matrix must be square");
    for (std::size_t c = 0; c < rows.size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

/// A word given as a string of single-character labels or as a list of labels.
inline Word word_from(const Alphabet& a, const Json& j) {
  if (j.is_string()) return parse_word(a, j.get<std::string>());
  require(j.is_array(), ErrorKind::Config, "word must be a string or a list of labels");
  Word w;
  for (const auto& s : j) w.push_back(a.code(s.is_string() ? s.get<std::string>() : s.dump()));
  return w;
}

}  // namespace detail

/// Builds a model from its spec and returns the spec with defaults filled.
inline std::pair<ProcessModel, Json> parse_model(const Json& spec, const std::string& where) {
  require(spec.is_object(), ErrorKind::Config, where + " must be an object");
  const auto type = detail::get_req<std::string>(spec, "type", where);
  Json out = spec;
  auto fill_alphabet = [&](const Alphabet& a) { out["alphabet"] = a.symbols(); };

  if (type == "iid") {
    detail::reject_unknown_keys(spec, {"type", "alphabet", "probs"}, where);
    const auto p = detail::get_req<std::vector<double>>(spec, "probs", where);
    const auto a = detail::alphabet_or(spec, p.size());
    fill_alphabet(a);
    return {make_iid(a, p), out};
  }
  if (type == "markov") {
    detail::reject_unknown_keys(spec, {"type", "alphabet", "transition", "stationary"}, where);
    const auto rows = detail::get_req<std::vector<std::vector<double>>>(spec, "transition", where);
    const auto a = detail::alphabet_or(spec, rows.size());
    fill_alphabet(a);
    std::optional<std::vector<double>> pi;
    if (spec.contains("stationary")) pi = detail::get_req<std::vector<double>>(spec, "stationary", where);
    return {make_markov(a, detail::matrix_from(rows), pi), out};
  }
  if (type == "function_of_markov") {
    detail::reject_unknown_keys(spec, {"type", "alphabet", "base", "window", "relabel"}, where);
    auto [base, base_spec] = parse_model(detail::get_req<Json>(spec, "base", where), where + ".base");
    const auto* chain = base.as<MarkovModel>();
    require(chain != nullptr, ErrorKind::Config, where + ".base must be a markov model");
    const auto relabel = detail::get_req<std::vector<int>>(spec, "relabel", where);
    int top = 0;
    for (int r : relabel) top = std::max(top, r);
    const auto a = detail::alphabet_or(spec, static_cast<std::size_t>(top) + 1);
    fill_alphabet(a);
    out["base"] = base_spec;
    return {make_function_of_markov(*chain, detail::get_req<int>(spec, "window", where), a, relabel), out};
  }
  if (type == "exchangeable") {
    detail::reject_unknown_keys(spec, {"type", "alphabet", "weights", "components"}, where);
    const auto comps = detail::get_req<std::vector<std::vector<double>>>(spec, "components", where);
    require(!comps.empty(), ErrorKind::InvalidModel, "mixture needs at least one component");
    const auto a = detail::alphabet_or(spec, comps.front().size());
    fill_alphabet(a);
    return {make_exchangeable(a, detail::get_req<std::vector<double>>(spec, "weights", where), comps), out};
  }
  if (type == "periodic") {
    detail::reject_unknown_keys(spec, {"type", "alphabet", "word"}, where);
    const auto& w = spec.at("word");
    PeriodicOrbitModel m;
    if (spec.contains("alphabet")) {
      const Alphabet a(detail::get_req<std::vector<std::string>>(spec, "alphabet", where));
      m = make_periodic(a, detail::word_from(a, w));
    } else {
      require(w.is_string(), ErrorKind::Config, where + ": a list word needs an explicit alphabet");
      m = fixtures::periodic(w.get<std::string>());
    }
    fill_alphabet(m.alphabet);
    return {m, out};
  }
  if (type == "explicit") {
    detail::reject_unknown_keys(spec, {"type", "alphabet", "length", "words", "probs"}, where);
    const auto listed = detail::get_req<Json>(spec, "words", where);
    std::optional<Alphabet> alpha;
    if (spec.contains("alphabet")) {
      alpha.emplace(detail::get_req<std::vector<std::string>>(spec, "alphabet", where));
    } else {
      // labels seen in the words; {0,1} words get the binary alphabet
      std::set<std::string> seen{"0", "1"};
      for (const auto& w : listed) {
        if (w.is_string())
          for (char ch : w.get<std::string>()) seen.insert(std::string(1, ch));
        else if (w.is_array())
          for (const auto& s : w) seen.insert(s.is_string() ? s.get<std::string>() : s.dump());
      }
      alpha.emplace(std::vector<std::string>(seen.begin(), seen.end()));
    }
    const Alphabet& a = *alpha;
    fill_alphabet(a);
    std::vector<Word> words;
    for (const auto& w : listed) words.push_back(detail::word_from(a, w));
    return {make_explicit(a, detail::get_req<std::size_t>(spec, "length", where), words,
                          detail::get_req<std::vector<double>>(spec, "probs", where)),
            out};
  }
  if (type == "fixture") {
    detail::reject_unknown_keys(spec, {"type", "name", "param"}, where);
    const auto name = detail::get_req<std::string>(spec, "name", where);
    if (name == "pair_window_process") return {fixtures::pair_window_process(), out};
    if (name == "pair_window_chain") return {fixtures::pair_window_chain(), out};
    if (name == "bernoulli") return {fixtures::bernoulli(detail::get_req<double>(spec, "param", where)), out};
    if (name == "symmetric_chain") return {fixtures::symmetric_chain(detail::get_req<double>(spec, "param", where)), out};
    if (name == "rotation") return {fixtures::rotation(detail::get_req<std::size_t>(spec, "param", where)), out};
    fail(ErrorKind::Config, where + ": unknown fixture '" + name + "'");
  }
  fail(ErrorKind::Config, where + ": unknown model type '" + type + "'");
}

// ---------------------------------------------------------------------------
// Config

struct ExperimentConfig {
  std::string experiment;
  std::string id;
  Json x_model;
  Json y_model;
  std::size_t n = 12;
  std::optional<std::size_t> K;
  std::size_t m_returns = 8;
  std::size_t n_samples = 100'000;
  std::size_t budget = kDefaultMarginalBudget;
  std::size_t oracle_budget = kDefaultOracleBudget;
  std::size_t k_max = 4;
  std::size_t m_max = 2;
  std::size_t window = 8;
  std::vector<std::size_t> horizons{1, 2, 4, 8, 16};
  std::string khat = "zero";
  std::string ktilde = "fair";
  std::vector<std::uint64_t> b{2};
  std::int64_t first = 0;
  std::uint64_t seed = 1;
  std::string units = "bits";
  unsigned threads = 1;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k{"theorem_a", "markov_formula", "exchangeable", "c4", "theorem_b",
                                          "oracle_compare", "determinism", "beta", "returns_checks", "www",
                                          "demo_dependent_zero", "demo_survivors_victims", "demo_bfree"};
  return k;
}

inline ExperimentConfig parse_config(const Json& j) {
  detail::reject_unknown_keys(j,
                              {"experiment", "id", "x_model", "y_model", "n", "K", "m_returns", "n_samples", "budget",
                               "oracle_budget", "k_max", "m_max", "window", "horizons", "khat", "ktilde", "B", "first",
                               "seed", "units", "threads"},
                              "config");
  ExperimentConfig c;
  c.experiment = detail::get_req<std::string>(j, "experiment", "config");
  const auto& kinds = experiment_kinds();
  require(std::find(kinds.begin(), kinds.end(), c.experiment) != kinds.end(), ErrorKind::Config,
          "unknown experiment '" + c.experiment + "'");
  c.id = detail::get_or<std::string>(j, "id", c.experiment);
  if (j.contains("x_model")) c.x_model = j["x_model"];
  if (j.contains("y_model")) c.y_model = j["y_model"];
  c.n = detail::get_or(j, "n", c.n);
  if (j.contains("K") && !j["K"].is_null()) c.K = detail::get_req<std::size_t>(j, "K", "config");
  c.m_returns = detail::get_or(j, "m_returns", c.m_returns);
  c.n_samples = detail::get_or(j, "n_samples", c.n_samples);
  c.budget = detail::get_or(j, "budget", c.budget);
  c.oracle_budget = detail::get_or(j, "oracle_budget", c.oracle_budget);
  c.k_max = detail::get_or(j, "k_max", c.k_max);
  c.m_max = detail::get_or(j, "m_max", c.m_max);
  c.window = detail::get_or(j, "window", c.window);
  c.horizons = detail::get_or(j, "horizons", c.horizons);
  c.khat = detail::get_or(j, "khat", c.khat);
  c.ktilde = detail::get_or(j, "ktilde", c.ktilde);
  c.b = detail::get_or(j, "B", c.b);
  c.first = detail::get_or(j, "first", c.first);
  c.seed = detail::get_or(j, "seed", c.seed);
  c.units = detail::get_or(j, "units", c.units);
  c.threads = detail::get_or(j, "threads", c.threads);
  require(c.units == "bits" || c.units == "nats", ErrorKind::Config, "units must be 'bits' or 'nats'");
  require(c.threads >= 1, ErrorKind::Config, "threads must be positive");
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Config, "cannot read config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

/// The fully resolved config. Model specs gain their default alphabets;
/// `threads` is omitted because it never changes results.
inline Json echo_config(const ExperimentConfig& c) {
  Json j;
  j["experiment"] = c.experiment;
  j["id"] = c.id;
  if (!c.x_model.is_null()) j["x_model"] = parse_model(c.x_model, "x_model").second;
  if (!c.y_model.is_null()) j["y_model"] = parse_model(c.y_model, "y_model").second;
  j["n"] = c.n;
  j["K"] = c.K ? Json(*c.K) : Json(nullptr);
  j["m_returns"] = c.m_returns;
  j["n_samples"] = c.n_samples;
  j["budget"] = c.budget;
  j["oracle_budget"] = c.oracle_budget;
  j["k_max"] = c.k_max;
  j["m_max"] = c.m_max;
  j["window"] = c.window;
  j["horizons"] = c.horizons;
  j["khat"] = c.khat;
  j["ktilde"] = c.ktilde;
  j["B"] = c.b;
  j["first"] = c.first;
  j["seed"] = c.seed;
  j["units"] = c.units;
  return j;
}

// ---------------------------------------------------------------------------
// Rows

struct ResultRow {
  std::string experiment;
  std::string quantity;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> std_error;
  std::string method;
  std::string flag;  // "PASS", "FAIL" or empty
  double wall_time = 0.0;
  bool entropy = true;  // scaled by the units toggle
};

inline const char* pass_fail(bool ok) { return ok ? "PASS" : "FAIL"; }

namespace detail {

class RowSink {
 public:
  explicit RowSink(std::string id) : id_(std::move(id)) {}

  ResultRow& add(std::string quantity, const EntropyEstimate& e, std::string flag = {}) {
    rows_.push_back({id_, std::move(quantity), e.value, e.lower, e.upper, e.std_error, to_string(e.method),
                     std::move(flag), 0.0, true});
    return rows_.back();
  }

  ResultRow& add_exact(std::string quantity, double v, std::string flag = {}, bool entropy = true) {
    rows_.push_back({id_, std::move(quantity), v, v, v, std::nullopt, "exact", std::move(flag), 0.0, entropy});
    return rows_.back();
  }

  ResultRow& add_mc(std::string quantity, double v, double se, std::string flag = {}, bool entropy = true) {
    rows_.push_back({id_, std::move(quantity), v, v - kStderrMultiplier * se, v + kStderrMultiplier * se, se,
                     "monte-carlo", std::move(flag), 0.0, entropy});
    return rows_.back();
  }

  std::vector<ResultRow> take() { return std::move(rows_); }

 private:
  std::string id_;
  std::vector<ResultRow> rows_;
};

struct Pair {
  ProcessModel x;
  std::optional<ZeroOneView> y;
};

inline ProcessModel require_model(const Json& spec, const char* which) {
  require(!spec.is_null(), ErrorKind::Config, std::string("experiment needs ") + which);
  return parse_model(spec, which).first;
}

inline ZeroOneView require_view(const Json& spec) {
  Json s = spec;
  if (s.is_object() && !s.contains("alphabet") && s.value("type", "") != "fixture" && s.value("type", "") != "periodic")
    s["alphabet"] = Alphabet::binary().symbols();
  return make_zero_one_view(require_model(s, "y_model"));
}

inline bool zero_entropy(const ProcessModel& y) {
  return y.as<PeriodicOrbitModel>() != nullptr || y.as<ExplicitFiniteSupportModel>() != nullptr;
}

inline void add_c4_rows(RowSink& sink, const ProcessModel& x, double theta, std::size_t budget) {
  const auto rate = entropy_rate(x, 8, budget);
  const EntropyEstimate lo{theta * rate.lower, theta * rate.lower, theta * rate.upper, std::nullopt,
                           rate.exact ? Method::exact : Method::truncated_bound};
  const double up = theta * symbol_entropy(x);
  sink.add("c4_lower", lo);
  sink.add_exact("c4_upper", up);
}

inline bool in_sandwich(const EntropyEstimate& e, const C4Bounds& c4) {
  const double slack = 1e-9 + (e.std_error ? kStderrMultiplier * *e.std_error : 0.0);
  return c4.lower - slack <= e.value && e.value <= c4.upper + slack;
}

inline SampleOptions sampling(const ExperimentConfig& c) { return {c.n_samples, c.seed, c.threads}; }

inline TheoremAOptions theorem_a_options(const ExperimentConfig& c) {
  TheoremAOptions o;
  o.m_returns = c.m_returns;
  o.sampling = sampling(c);
  o.budget = c.budget;
  return o;
}

inline void run_theorem_a(const ExperimentConfig& c, RowSink& sink) {
  const auto x = require_model(c.x_model, "x_model");
  const auto y = require_view(c.y_model);
  const auto a = relative_entropy_rate_A(x, y, theorem_a_options(c));
  const auto c4 = c4_bounds(x, y.theta, 8, c.budget);
  const std::string flag = pass_fail(in_sandwich(a, c4));
  sink.add("H(M|Y) theorem_a", a, flag);
  if (zero_entropy(y.model)) sink.add("H(M)", a, flag);
  add_c4_rows(sink, x, y.theta, c.budget);
}

inline void run_markov_formula(const ExperimentConfig& c, RowSink& sink, bool primary_is_bound) {
  const auto x = require_model(c.x_model, "x_model");
  const auto y = require_view(c.y_model);
  const auto chain = as_markov(x);
  if (!chain) {
    if (primary_is_bound) {
      const auto law = r1_distribution(y, c.K, sampling(c));
      sink.add("theorem_b_truncated", theorem_b_truncated_estimate(x, law, y.theta, 2, c.budget));
      return;
    }
    fail(ErrorKind::NotMarkov, "the Markov formula needs a Markov model, got " + x.kind_name());
  }
  const auto law = r1_distribution(y, c.K, sampling(c));
  const auto ma = markov_product_entropy(*chain, law, y.theta);
  const auto b = theorem_b_upper_markov(*chain, law, y.theta);
  const auto c4 = c4_bounds(x, y.theta, 8, c.budget);
  const bool dominated = ma.value <= b.value + 1e-9;
  const std::string ma_flag = pass_fail(in_sandwich(ma, c4) && dominated);
  sink.add("H(M|Y) markov_formula", ma, ma_flag);
  if (zero_entropy(y.model)) sink.add("H(M)", ma, ma_flag);
  sink.add("theorem_b_upper", b, pass_fail(dominated));
  add_c4_rows(sink, x, y.theta, c.budget);
  for (std::size_t k = 1; k <= law.truncation(); ++k) {
    auto& r = law.exact ? sink.add_exact("P(R1=" + std::to_string(k) + ")", law.probs[k - 1], {}, false)
                        : sink.add_mc("P(R1=" + std::to_string(k) + ")", law.probs[k - 1], law.stderrs[k - 1], {}, false);
    r.lower = std::max(0.0, r.lower);
    r.upper = std::min(1.0, r.upper);
  }
  sink.add_exact("P(R1>K)", law.tail, {}, false);
}

inline void run_exchangeable(const ExperimentConfig& c, RowSink& sink) {
  const auto x = require_model(c.x_model, "x_model");
  const auto* mix = x.as<ExchangeableMixtureModel>();
  require(mix != nullptr, ErrorKind::InvalidModel, "exchangeable experiment needs an exchangeable x_model");
  const auto y = require_view(c.y_model);
  const auto closed = exchangeable_product_entropy(*mix, y.theta);
  const auto c4 = c4_bounds(x, y.theta, 8, c.budget);
  sink.add("H(M|Y) exchangeable", closed, pass_fail(std::abs(closed.value - c4.lower) <= 1e-12));
  const auto a = relative_entropy_rate_A(x, y, theorem_a_options(c));
  const double slack = y.theta * exchangeable_prefix_entropy(*mix, c.m_returns, c.budget).mixing_given_prefix;
  const double se = a.std_error.value_or(0.0);
  const bool agrees = closed.value >= a.value - kStderrMultiplier * se - slack - 1e-12 &&
                      closed.value <= a.value + kStderrMultiplier * se + 1e-12;
  sink.add("H(M|Y) theorem_a", a, pass_fail(agrees));
  add_c4_rows(sink, x, y.theta, c.budget);
}

inline std::size_t y_step(const ProcessModel& y) {
  if (const auto* p = y.as<PeriodicOrbitModel>()) return p->period();
  if (const auto* e = y.as<ExplicitFiniteSupportModel>()) return e->length;
  return 1;
}

/// Best available value of H(M|Y) for the oracle to be compared against.
inline std::pair<std::string, EntropyEstimate> reference_value(const ProcessModel& x, const ZeroOneView& y,
                                                               const ExperimentConfig& c) {
  if (const auto* mix = x.as<ExchangeableMixtureModel>())
    return {"exchangeable", exchangeable_product_entropy(*mix, y.theta)};
  if (auto chain = as_markov(x); chain && (y.model.as<IidModel>() || detail::conditioned_cycles(y)))
    return {"markov_formula", markov_product_entropy(*chain, r1_distribution(y, c.K, sampling(c)), y.theta)};
  return {"theorem_a", relative_entropy_rate_A(x, y, theorem_a_options(c))};
}

inline constexpr double kOracleTolerance = 1e-3;

inline void run_oracle_compare(const ExperimentConfig& c, RowSink& sink) {
  const auto x = require_model(c.x_model, "x_model");
  const auto y = require_view(c.y_model);
  require(c.n >= 1, ErrorKind::Config, "n must be positive");
  const auto h = exact_conditional_block_entropies(x, y.model, c.n, {c.oracle_budget, c.threads});
  const std::size_t step = y_step(y.model);
  const auto rates = rate_estimates(h, step);
  const auto [name, ref] = reference_value(x, y, c);
  sink.add("reference " + name, ref);
  for (std::size_t i = 0; i < rates.per_n.size(); ++i) {
    const bool last = i + 1 == rates.per_n.size();
    // H_n / n is subadditive, so it dominates the rate for every n.
    std::string flag = last ? pass_fail(rates.per_n[i] >= ref.lower - 1e-9) : "";
    sink.add_exact("oracle H_n/n n=" + std::to_string(i + 1), rates.per_n[i], flag);
  }
  for (std::size_t i = 0; i < rates.increments.size(); ++i) {
    const std::size_t n = i + step + 1;
    std::string flag;
    if (i + 1 == rates.increments.size() && zero_entropy(y.model))
      flag = pass_fail(std::abs(rates.increments[i] - ref.value) <= kOracleTolerance);
    sink.add_exact("oracle increment n=" + std::to_string(n) + " step=" + std::to_string(step), rates.increments[i], flag);
  }
}

inline void run_determinism(const ExperimentConfig& c, RowSink& sink) {
  const auto x = require_model(c.x_model, "x_model");
  const auto p = determinism_profile(x, c.k_max, c.m_max, c.budget);
  const auto chain = as_markov(x);
  for (std::size_t k = 0; k <= c.k_max; ++k)
    for (std::size_t m = 0; m <= c.m_max; ++m) {
      const std::string q = "D(" + std::to_string(k) + "," + std::to_string(m) + ")";
      std::string flag;
      if (chain && m >= 1) flag = pass_fail(std::abs(p.at(k, m) - markov_determinism_closed_form(*chain, k)) <= 1e-10);
      sink.add_exact(q, p.at(k, m), flag);
    }
  if (chain)
    for (std::size_t k = 0; k <= c.k_max; ++k)
      sink.add("D(" + std::to_string(k) + ",m>=1) closed_form",
               EntropyEstimate{markov_determinism_closed_form(*chain, k), markov_determinism_closed_form(*chain, k),
                               markov_determinism_closed_form(*chain, k), std::nullopt, Method::closed_form});
}

inline void run_beta(const ExperimentConfig& c, RowSink& sink) {
  const auto x = require_model(c.x_model, "x_model");
  const auto chain = as_markov(x);
  if (!chain) fail(ErrorKind::NotMarkov, "beta coefficients need a Markov model, got " + x.kind_name());
  for (std::size_t n = 1; n <= c.n; ++n) {
    auto& r = sink.add_exact("beta(" + std::to_string(n) + ")", markov_beta(*chain, n), {}, false);
    r.method = "closed-form";
  }
}

inline void run_returns_checks(const ExperimentConfig& c, RowSink& sink) {
  const auto y = require_view(c.y_model);
  const auto opt = sampling(c);
  const auto kac = kac_check(y, opt);
  if (kac.exact)
    sink.add_exact("kac mean return time", kac.mean, pass_fail(kac.pass), false);
  else
    sink.add_mc("kac mean return time", kac.mean, kac.std_error, pass_fail(kac.pass), false);
  sink.add_exact("kac target 1/theta", kac.target, {}, false);
  for (const auto& p : poincare_check(y, c.horizons, opt)) {
    const std::string q = "poincare P(R1<=" + std::to_string(p.horizon) + ")";
    auto& r = p.exact ? sink.add_exact(q, p.fraction, {}, false) : sink.add_mc(q, p.fraction, p.std_error, {}, false);
    r.lower = std::max(0.0, r.lower);
    r.upper = std::min(1.0, r.upper);
  }
  const auto inv = induced_invariance_check(y, c.window, opt);
  auto& r = sink.add_mc("induced_invariance tv", inv.tv, inv.std_error, pass_fail(inv.pass), false);
  r.lower = std::max(0.0, r.lower);
  const double indicator[] = {0.0, 1.0};
  const auto bk = birkhoff_check(y.model, indicator, std::max<std::size_t>(c.n_samples, kBirkhoffBatches), c.seed);
  sink.add_mc("birkhoff time average of Y", bk.average, bk.std_error, pass_fail(bk.pass), false);
}

inline void run_www(const ExperimentConfig& c, RowSink& sink) {
  const auto x = require_model(c.x_model, "x_model");
  const auto y = require_view(c.y_model);
  WwwOptions o;
  o.k_max = c.k_max;
  o.m_max = c.m_max;
  o.budget = c.budget;
  const auto v = www_check(x, y, o);
  sink.add_exact(std::string("www return_support_infinite=") + to_string(v.return_support_infinite),
                 v.return_support_infinite == Tri::yes ? 1.0 : 0.0, {}, false);
  sink.add_exact(std::string("www not_bilaterally_deterministic=") + to_string(v.not_bilaterally_deterministic),
                 v.determinism_evidence);
  if (v.certified_gap)
    sink.add(std::string("www strict_drop_certified=") + (v.strict_drop_certified ? "yes" : "no") + " gap h-(B)",
             {*v.certified_gap, *v.certified_gap, *v.certified_gap, std::nullopt, Method::closed_form});
}

inline void run_demo_dependent_zero(const ExperimentConfig& c, RowSink& sink) {
  const auto z = require_model(c.x_model, "x_model");
  const auto w = require_model(c.y_model, "y_model");
  const auto* orbit = w.as<PeriodicOrbitModel>();
  require(orbit != nullptr, ErrorKind::InvalidModel, "W must be a periodic orbit");
  DependentZeroOptions o;
  o.seed = c.seed;
  o.oracle_n = std::min<std::size_t>(c.n, 12);
  const auto r = dependent_zero_demo(z, *orbit, o);
  sink.add("H(M)", r.h_m, pass_fail(r.nonzero_products == 0));
  sink.add("H(X)", r.h_x, pass_fail(r.positive_entropy && in_sandwich(r.h_x, r.c4)));
  sink.add_exact("nonzero product entries", static_cast<double>(r.nonzero_products), {}, false);
  sink.add("c4_lower", {r.c4.lower, r.c4.lower, r.c4.lower, std::nullopt,
                        r.c4.lower_exact ? Method::exact : Method::truncated_bound});
  sink.add_exact("c4_upper", r.c4.upper);
  sink.add_exact("oracle H_n/n n=" + std::to_string(o.oracle_n), r.oracle_rate);
}

inline void run_demo_survivors_victims(const ExperimentConfig& c, RowSink& sink) {
  SurvivorsVictimsOptions o;
  o.khat = parse_component_choice(c.khat);
  o.ktilde = parse_component_choice(c.ktilde);
  o.block = c.window;
  o.samples = c.n_samples;
  o.seed = c.seed;
  const auto r = survivors_victims_demo(o);
  sink.add_exact("identity (i) mismatches", static_cast<double>(r.commute_mismatches), pass_fail(r.commute_mismatches == 0), false);
  sink.add_exact("identity (ii) mismatches", static_cast<double>(r.product_mismatches), pass_fail(r.product_mismatches == 0), false);
  sink.add_exact("inverse mismatches", static_cast<double>(r.inverse_mismatches), pass_fail(r.inverse_mismatches == 0), false);
  const double expected = (o.khat == ComponentChoice::fair ? 1.0 : 0.0) + (o.ktilde == ComponentChoice::fair ? 1.0 : 0.0);
  const auto& j = r.joint_rate.estimate;
  sink.add("joint plug-in rate per period", j, pass_fail(std::abs(j.value - expected) <= kStderrMultiplier * *j.std_error + 1e-12));
  const auto& p = r.product_entropy.estimate;
  sink.add("product plug-in block entropy", p, o.khat == ComponentChoice::zero ? pass_fail(p.value <= 0.01) : "");
  sink.add("product plug-in rate per period", r.product_rate.estimate);
}

inline void run_demo_bfree(const ExperimentConfig& c, RowSink& sink) {
  const auto r = bfree_indicator(c.b, c.first, c.n);
  bool coprime = true;
  double product = 1.0;
  for (std::size_t i = 0; i < r.b.size(); ++i) {
    product *= 1.0 - 1.0 / static_cast<double>(r.b[i]);
    for (std::size_t k = i + 1; k < r.b.size(); ++k) coprime = coprime && std::gcd(r.b[i], r.b[k]) == 1;
  }
  sink.add_exact("period lcm(B)", static_cast<double>(r.period), {}, false);
  sink.add_exact("theta free density", r.theta, coprime ? pass_fail(std::abs(r.theta - product) <= 1e-12) : "", false);
  const auto view = make_zero_one_view(r.orbit);
  const auto kac = kac_check(view);
  sink.add_exact("kac mean return time", kac.mean, pass_fail(kac.pass), false);
}

}  // namespace detail

struct RunResult {
  Json config;
  std::vector<ResultRow> rows;
};

inline RunResult run_experiment(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::RowSink sink(c.id);
  const auto& e = c.experiment;
  if (e == "theorem_a") detail::run_theorem_a(c, sink);
  else if (e == "markov_formula") detail::run_markov_formula(c, sink, false);
  else if (e == "theorem_b") detail::run_markov_formula(c, sink, true);
  else if (e == "exchangeable") detail::run_exchangeable(c, sink);
  else if (e == "c4") {
    const auto x = detail::require_model(c.x_model, "x_model");
    detail::add_c4_rows(sink, x, detail::require_view(c.y_model).theta, c.budget);
  } else if (e == "oracle_compare") detail::run_oracle_compare(c, sink);
  else if (e == "determinism") detail::run_determinism(c, sink);
  else if (e == "beta") detail::run_beta(c, sink);
  else if (e == "returns_checks") detail::run_returns_checks(c, sink);
  else if (e == "www") detail::run_www(c, sink);
  else if (e == "demo_dependent_zero") detail::run_demo_dependent_zero(c, sink);
  else if (e == "demo_survivors_victims") detail::run_demo_survivors_victims(c, sink);
  else if (e == "demo_bfree") detail::run_demo_bfree(c, sink);
  RunResult out{echo_config(c), sink.take()};
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double scale = c.units == "nats" ? std::log(2.0) : 1.0;
  for (auto& r : out.rows) {
    r.wall_time = wall;
    if (r.entropy && scale != 1.0) {
      r.value *= scale;
      r.lower *= scale;
      r.upper *= scale;
      if (r.std_error) *r.std_error *= scale;
    }
  }
  return out;
}

inline bool any_failed(const std::vector<ResultRow>& rows) {
  for (const auto& r : rows)
    if (r.flag == "FAIL") return true;
  return false;
}

// ---------------------------------------------------------------------------
// Writers

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline constexpr const char* kCsvHeader = "experiment,quantity,value,lower,upper,stderr,method,flag";

/// Wall time is left out so identical runs give identical files.
inline std::string to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << kCsvHeader << "\r\n";
  for (const auto& r : rows) {
    os << csv_field(r.experiment) << ',' << csv_field(r.quantity) << ',' << format_number(r.value) << ','
       << format_number(r.lower) << ',' << format_number(r.upper) << ','
       << (r.std_error ? format_number(*r.std_error) : "") << ',' << r.method << ',' << r.flag << "\r\n";
  }
  return os.str();
}

inline Json to_json(const RunResult& run) {
  Json rows = Json::array();
  for (const auto& r : run.rows) {
    Json j;
    j["experiment"] = r.experiment;
    j["quantity"] = r.quantity;
    j["value"] = r.value;
    j["lower"] = r.lower;
    j["upper"] = r.upper;
    j["stderr"] = r.std_error ? Json(*r.std_error) : Json(nullptr);
    j["method"] = r.method;
    j["flag"] = r.flag;
    j["wall_time"] = r.wall_time;
    rows.push_back(j);
  }
  Json out;
  out["config"] = run.config;
  out["rows"] = rows;
  return out;
}

inline void write_outputs(const RunResult& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "results.csv", std::ios::binary);
    csv << to_csv(run.rows);
    require(csv.good(), ErrorKind::Config, "cannot write results.csv");
  }
  std::ofstream js(dir / "results.json");
  js << to_json(run).dump(2) << '\n';
  require(js.good(), ErrorKind::Config, "cannot write results.json");
}

// ---------------------------------------------------------------------------
// Verification of a finished run

struct VerifyReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

inline VerifyReport verify_results(const Json& results) {
  VerifyReport v;
  require(results.contains("rows") && results["rows"].is_array(), ErrorKind::Config, "results.json has no rows");
  auto num = [](const Json& j) { return j.is_number() ? j.get<double>() : NAN; };
  std::map<std::string, std::map<std::string, Json>> by_id;
  for (const auto& r : results["rows"]) {
    const auto id = r.value("experiment", "");
    const auto q = r.value("quantity", "");
    by_id[id][q] = r;
    const double value = num(r["value"]), lo = num(r["lower"]), hi = num(r["upper"]);
    if (!(lo <= value + 1e-9 && value <= hi + 1e-9))
      v.violations.push_back(id + ": " + q + " lies outside its enclosure");
    if (r.value("flag", "") == "FAIL") v.violations.push_back(id + ": " + q + " is flagged FAIL");
  }
  for (const auto& [id, rows] : by_id) {
    const auto lo = rows.find("c4_lower");
    const auto hi = rows.find("c4_upper");
    if (lo != rows.end() && hi != rows.end()) {
      for (const char* q : {"H(M|Y) theorem_a", "H(M|Y) markov_formula", "H(M|Y) exchangeable"}) {
        const auto it = rows.find(q);
        if (it == rows.end()) continue;
        const auto& r = it->second;
        const double se = r["stderr"].is_number() ? r["stderr"].get<double>() : 0.0;
        const double slack = 1e-9 + kStderrMultiplier * se;
        const double value = num(r["value"]);
        if (!(num(lo->second["lower"]) - slack <= value && value <= num(hi->second["upper"]) + slack))
          v.violations.push_back(id + ": " + q + " violates the c4 sandwich");
      }
    }
    const auto ma = rows.find("H(M|Y) markov_formula");
    const auto b = rows.find("theorem_b_upper");
    if (ma != rows.end() && b != rows.end() && !(num(ma->second["value"]) <= num(b->second["value"]) + 1e-9))
      v.violations.push_back(id + ": markov formula exceeds the (B) bound");
  }
  return v;
}

inline VerifyReport verify_dir(const std::filesystem::path& dir) {
  std::ifstream in(dir / "results.json");
  require(in.good(), ErrorKind::Config, "cannot read " + (dir / "results.json").string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("malformed results.json: ") + e.what());
  }
  return verify_results(j);
}

}  // namespace prodent
