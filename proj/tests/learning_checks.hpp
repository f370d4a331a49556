#pragma once

// Learning oracles shared by the dispatch unit tests and the acceptance run.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "fleetsim/dispatch.hpp"
#include "fleetsim/qnet.hpp"
#include "fleetsim/random.hpp"

namespace fleetsim::checks {

// Two states, two actions, deterministic transitions:
//   s0: a0 -> r 1, s1    a1 -> r 0, s0
//   s1: a0 -> r 0, s0    a1 -> r 2, s1
struct TinyMdp {
  static constexpr double gamma = 0.9;
  static constexpr std::array<std::array<double, 2>, 2> reward{{{1.0, 0.0}, {0.0, 2.0}}};
  static constexpr std::array<std::array<int, 2>, 2> next{{{1, 0}, {0, 1}}};
};

// Value iteration to convergence.
inline std::array<std::array<double, 2>, 2> tiny_mdp_fixed_point() {
  std::array<std::array<double, 2>, 2> q{};
  for (int it = 0; it < 2000; ++it) {
    auto nq = q;
    for (int s = 0; s < 2; ++s) {
      for (int a = 0; a < 2; ++a) {
        const int n = TinyMdp::next[s][a];
        nq[s][a] = TinyMdp::reward[s][a] + TinyMdp::gamma * std::max(q[n][0], q[n][1]);
      }
    }
    q = nq;
  }
  return q;
}

// Trains a DQN learner on the four transitions; returns the worst relative
// error of the learned Q against the fixed point.
inline double tiny_mdp_max_rel_error() {
  auto one_hot = [](int s) { return std::vector<float>{s == 0 ? 1.0f : 0.0f, s == 1 ? 1.0f : 0.0f}; };
  std::vector<Transition> all;
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) {
      all.push_back({one_hot(s), a, TinyMdp::reward[s][a], one_hot(TinyMdp::next[s][a]), 0b11, TinyMdp::gamma});
    }
  }
  std::vector<const Transition*> batch;
  for (const Transition& t : all) batch.push_back(&t);

  DqnConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.target_sync = 100;
  cfg.grad_clip = 0.0;
  Mlp net({2, 16, 2});
  Rng rng(3);
  net.init(rng);
  DqnLearner learner(net, cfg);
  for (int i = 0; i < 30000; ++i) learner.train_step(batch);

  const auto oracle = tiny_mdp_fixed_point();
  double worst = 0.0;
  for (int s = 0; s < 2; ++s) {
    const std::vector<float> x = one_hot(s);
    const auto q = learner.online().predict(std::vector<double>(x.begin(), x.end()));
    for (int a = 0; a < 2; ++a) worst = std::max(worst, std::abs(q[a] - oracle[s][a]) / std::abs(oracle[s][a]));
  }
  return worst;
}

// Analytic TD-loss gradient against central differences on a 4-4-4-2
// network (50 parameters). Returns the worst relative error.
inline double td_gradient_max_rel_error(int* param_count = nullptr) {
  Rng rng(12);
  Mlp online({4, 4, 4, 2});
  online.init(rng);
  Mlp target({4, 4, 4, 2});
  target.init(rng);
  if (param_count) *param_count = static_cast<int>(online.param_count());

  std::vector<Transition> ts;
  for (int i = 0; i < 3; ++i) {
    Transition t;
    for (int k = 0; k < 4; ++k) {
      t.state.push_back(static_cast<float>(uniform01(rng) * 2 - 1));
      t.next_state.push_back(static_cast<float>(uniform01(rng) * 2 - 1));
    }
    t.action = i % 2;
    t.reward = uniform01(rng) * 2 - 1;
    t.next_valid = 0b11;
    t.discount = 0.9;
    ts.push_back(t);
  }
  std::vector<const Transition*> batch;
  for (const Transition& t : ts) batch.push_back(&t);

  std::vector<double> grad(online.param_count(), 0.0);
  td_loss(online, target, batch, grad);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < online.param_count(); ++i) {
    Mlp plus = online, minus = online;
    plus.params()[i] += h;
    minus.params()[i] -= h;
    const double fd = (td_loss(plus, target, batch) - td_loss(minus, target, batch)) / (2 * h);
    const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - grad[i]) / scale);
  }
  return worst;
}

}  // namespace fleetsim::checks
