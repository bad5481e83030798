#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prodent/experiment.hpp"

namespace {

using namespace prodent;

int cmd_run(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
            std::optional<unsigned> threads) {
  auto cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  const auto run = run_experiment(cfg);
  write_outputs(run, out_dir);
  for (const auto& r : run.rows) {
    std::printf("%-44s %14s  [%s, %s]  %-15s %s\n", r.quantity.c_str(), format_number(r.value).c_str(),
                format_number(r.lower).c_str(), format_number(r.upper).c_str(), r.method.c_str(), r.flag.c_str());
  }
  return any_failed(run.rows) ? 2 : 0;
}

int cmd_verify(const std::string& out_dir) {
  const auto v = verify_dir(out_dir);
  for (const auto& s : v.violations) std::printf("violation: %s\n", s.c_str());
  std::printf("%s: %zu violation(s)\n", v.ok() ? "ok" : "FAIL", v.violations.size());
  return v.ok() ? 0 : 2;
}

std::string word_string(const Word& w) {
  std::string s;
  for (int v : w) s += static_cast<char>('0' + v);
  return s;
}

int demo_dependent_zero(std::uint64_t seed, const std::string& w_word) {
  DependentZeroOptions o;
  o.seed = seed;
  const auto w = fixtures::periodic(w_word);
  const auto r = dependent_zero_demo(fixtures::bernoulli(0.5), w, o);
  std::printf("Z = i.i.d. fair bits, W = periodic \"%s\" (theta_W = %.6g)\n", w_word.c_str(), r.theta_w);
  std::printf("X = Z.W, Y = 1 - W, M = X.Y\n");
  std::printf("sampled %zu windows of length %zu: %zu nonzero entries of M\n", r.windows, o.window_len,
              r.nonzero_products);
  std::printf("H(M) = %s bits (%s)\n", format_number(r.h_m.value).c_str(), to_string(r.h_m.method));
  std::printf("H(X) = %s bits, enclosure [%s, %s], c4 [%s, %s], oracle H_%zu/%zu = %s\n",
              format_number(r.h_x.value).c_str(), format_number(r.h_x.lower).c_str(),
              format_number(r.h_x.upper).c_str(), format_number(r.c4.lower).c_str(),
              format_number(r.c4.upper).c_str(), o.oracle_n, o.oracle_n, format_number(r.oracle_rate).c_str());
  const bool ok = r.nonzero_products == 0 && r.positive_entropy;
  std::printf("%s: H(M) = 0 while H(X) > 0\n", pass_fail(ok));
  return ok ? 0 : 2;
}

int demo_survivors_victims(std::uint64_t seed, const std::string& khat, const std::string& ktilde) {
  SurvivorsVictimsOptions o;
  o.seed = seed;
  o.khat = parse_component_choice(khat);
  o.ktilde = parse_component_choice(ktilde);
  const auto r = survivors_victims_demo(o);
  std::printf("orbit {a, b} of period 2; survivors ~ %s, victims ~ %s\n", to_string(o.khat), to_string(o.ktilde));
  std::printf("identity checks on %zu windows of length %lld:\n", r.identity_windows,
              static_cast<long long>(2 * o.half_width));
  std::printf("  split o (S x S) vs skew shift o split: %zu mismatches\n", r.commute_mismatches);
  std::printf("  product vs m o split:                  %zu mismatches\n", r.product_mismatches);
  std::printf("  merge o split vs identity:             %zu mismatches\n", r.inverse_mismatches);
  const auto& j = r.joint_rate.estimate;
  const auto& p = r.product_entropy.estimate;
  std::printf("joint plug-in rate per period (block %zu, %zu samples): %s +- %s bits\n", o.block, o.samples,
              format_number(j.value).c_str(), format_number(*j.std_error).c_str());
  std::printf("product plug-in block entropy: %s bits, rate per period %s bits\n", format_number(p.value).c_str(),
              format_number(r.product_rate.estimate.value).c_str());
  const bool ok = r.commute_mismatches == 0 && r.product_mismatches == 0 && r.inverse_mismatches == 0;
  std::printf("%s: identities hold exactly\n", pass_fail(ok));
  return ok ? 0 : 2;
}

int demo_bfree(const std::vector<std::uint64_t>& b, std::int64_t first, std::size_t length) {
  const auto r = bfree_indicator(b, first, length);
  std::printf("B = {");
  for (std::size_t i = 0; i < r.b.size(); ++i) std::printf(i ? ", %llu" : "%llu", static_cast<unsigned long long>(r.b[i]));
  std::printf("}, period %llu, %zu free residues, theta = %.12g\n", static_cast<unsigned long long>(r.period),
              r.free_residues, r.theta);
  if (r.period <= 120) std::printf("one period from 0: %s\n", word_string(r.orbit.word).c_str());
  std::printf("eta on [%lld, %lld): %s\n", static_cast<long long>(first),
              static_cast<long long>(first + static_cast<std::int64_t>(length)), word_string(r.window).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy of products of independent stationary processes"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_path, "experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--threads", threads, "worker threads (results do not depend on it)");

  std::string verify_dir_arg;
  auto* verify = app.add_subcommand("verify", "re-check the invariants recorded in a results directory");
  verify->add_option("--out,dir", verify_dir_arg, "results directory")->required();

  std::string demo_name, w_word = "01", khat = "zero", ktilde = "fair";
  std::uint64_t demo_seed = 1;
  std::vector<std::uint64_t> b{2, 3};
  std::int64_t first = 0;
  std::size_t length = 24;
  auto* demo = app.add_subcommand("demo", "run a dependent-case demonstration");
  demo->add_option("name", demo_name, "dependent_zero | survivors_victims | bfree")
      ->required()
      ->check(CLI::IsMember({"dependent_zero", "survivors_victims", "bfree"}));
  demo->add_option("--seed", demo_seed, "seed");
  demo->add_option("--w", w_word, "W orbit word for dependent_zero");
  demo->add_option("--khat", khat, "survivor measure: zero | fair");
  demo->add_option("--ktilde", ktilde, "victim measure: zero | fair");
  demo->add_option("--B", b, "elements of B for bfree")->delimiter(',');
  demo->add_option("--first", first, "first coordinate of the bfree window");
  demo->add_option("--length", length, "length of the bfree window");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // usage errors share exit code 1 with every other input error
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir, seed, threads);
    if (*verify) return cmd_verify(verify_dir_arg);
    if (demo_name == "dependent_zero") return demo_dependent_zero(demo_seed, w_word);
    if (demo_name == "survivors_victims") return demo_survivors_victims(demo_seed, khat, ktilde);
    return demo_bfree(b, first, length);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
