#pragma once

// Slow reference computations for tests: every marginal is a sum over full
// paths of the window spanned by the requested coordinates.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "prodent/models.hpp"

namespace brute {

using prodent::Word;

inline double entropy(const std::map<Word, double>& law) {
  double h = 0.0;
  for (const auto& [w, p] : law)
    if (p > 0.0) h -= p * std::log(p);
  return h / std::log(2.0);
}

inline std::map<Word, double> project(const std::map<Word, double>& law, const std::vector<std::size_t>& pos) {
  std::map<Word, double> out;
  for (const auto& [w, p] : law) {
    Word k;
    for (auto i : pos) k.push_back(w[i]);
    out[k] += p;
  }
  return out;
}

/// Calls fn(path, prob) for every path of `len` steps of a chain started
/// from `init`.
template <class Fn>
void for_each_path(const Eigen::MatrixXd& p, const std::vector<double>& init, std::size_t len, Fn&& fn) {
  const std::size_t s = init.size();
  Word path(len, 0);
  while (true) {
    double pr = init[static_cast<std::size_t>(path[0])];
    for (std::size_t i = 1; i < len && pr > 0.0; ++i) pr *= p(path[i - 1], path[i]);
    fn(path, pr);
    std::size_t i = len;
    while (i > 0) {
      --i;
      if (static_cast<std::size_t>(++path[i]) < s) break;
      path[i] = 0;
      if (i == 0) return;
    }
    if (len == 0) return;
  }
}

inline std::map<Word, double> marginal(const prodent::ProcessModel& model, const std::vector<std::int64_t>& idx) {
  std::map<Word, double> out;
  const std::int64_t lo = *std::min_element(idx.begin(), idx.end());
  const std::int64_t hi = *std::max_element(idx.begin(), idx.end());
  const auto len = static_cast<std::size_t>(hi - lo + 1);
  auto pick = [&](const Word& full) {
    Word k;
    for (auto i : idx) k.push_back(full[static_cast<std::size_t>(i - lo)]);
    return k;
  };
  if (const auto* m = model.as<prodent::IidModel>()) {
    const auto n = m->probs.size();
    Eigen::MatrixXd p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) p(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m->probs[c];
    for_each_path(p, m->probs, len, [&](const Word& w, double pr) { out[pick(w)] += pr; });
  } else if (const auto* m = model.as<prodent::MarkovModel>()) {
    for_each_path(m->transition, m->stationary, len, [&](const Word& w, double pr) { out[pick(w)] += pr; });
  } else if (const auto* m = model.as<prodent::FunctionOfMarkovModel>()) {
    const auto w_len = static_cast<std::size_t>(m->window);
    for_each_path(m->base.transition, m->base.stationary, len + w_len - 1, [&](const Word& h, double pr) {
      Word full(len);
      for (std::size_t i = 0; i < len; ++i) {
        std::size_t code = 0;
        for (std::size_t j = 0; j < w_len; ++j) code = code * m->base.states() + static_cast<std::size_t>(h[i + j]);
        full[i] = m->relabel[code];
      }
      out[pick(full)] += pr;
    });
  } else if (const auto* m = model.as<prodent::ExchangeableMixtureModel>()) {
    const auto n = m->alphabet.size();
    for (std::size_t c = 0; c < m->components.size(); ++c) {
      Eigen::MatrixXd p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < n; ++k) p(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = m->components[c][k];
      for_each_path(p, m->components[c], len, [&](const Word& w, double pr) { out[pick(w)] += m->weights[c] * pr; });
    }
  } else if (const auto* m = model.as<prodent::PeriodicOrbitModel>()) {
    const auto per = static_cast<std::int64_t>(m->word.size());
    for (std::int64_t t = 0; t < per; ++t) {
      Word k;
      for (auto i : idx) k.push_back(m->word[static_cast<std::size_t>(((i + t) % per + per) % per)]);
      out[k] += 1.0 / static_cast<double>(per);
    }
  } else if (const auto* m = model.as<prodent::ExplicitFiniteSupportModel>()) {
    const auto per = static_cast<std::int64_t>(m->length);
    for (std::size_t w = 0; w < m->words.size(); ++w)
      for (std::int64_t t = 0; t < per; ++t) {
        Word k;
        for (auto i : idx) k.push_back(m->words[w][static_cast<std::size_t>(((i + t) % per + per) % per)]);
        out[k] += m->probs[w] / static_cast<double>(per);
      }
  }
  std::erase_if(out, [](const auto& kv) { return kv.second == 0.0; });
  return out;
}

inline double conditional(const prodent::ProcessModel& model, const std::vector<std::int64_t>& target,
                          const std::vector<std::int64_t>& given) {
  std::vector<std::int64_t> all = given;
  all.insert(all.end(), target.begin(), target.end());
  const auto joint = marginal(model, all);
  std::vector<std::size_t> g(given.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = i;
  return entropy(joint) - (given.empty() ? 0.0 : entropy(project(joint, g)));
}

/// H(M_[0,n) | Y_[0,n)) from the joint law of (X, Y) blocks.
inline double conditional_block(const prodent::ProcessModel& x, const prodent::ProcessModel& y, std::size_t n) {
  std::vector<std::int64_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::int64_t>(i);
  const auto lx = marginal(x, idx);
  const auto ly = marginal(y, idx);
  std::map<Word, double> joint_my;
  for (const auto& [xw, px] : lx)
    for (const auto& [yw, py] : ly) {
      Word k(2 * n);
      for (std::size_t i = 0; i < n; ++i) {
        k[i] = yw[i] == 1 ? xw[i] : -1;
        k[n + i] = yw[i];
      }
      joint_my[k] += px * py;
    }
  return entropy(joint_my) - entropy(ly);
}

}  // namespace brute
