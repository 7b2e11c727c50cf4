#pragma once

#include <cmath>

#include "dagsm/mdp.hpp"

namespace dagsm {

struct SolverConfig {
  double horizon = 1e5;       // expected difficulty units before termination
  double precision = 1e-5;    // value-change stopping threshold
  double linear_tolerance = 1e-9;
  std::size_t linear_max_iterations = 0;  // 0: 10 * sqrt(state count)
  std::size_t max_policy_rounds = 1000;
  std::size_t max_value_sweeps = 50'000'000;

  void check() const {
    if (!(horizon >= 1.0)) throw MdpError("horizon must be >= 1");
    if (!(precision > 0.0)) throw MdpError("precision must be positive");
    if (!(linear_tolerance > 0.0)) throw MdpError("linear solver tolerance must be positive");
  }
};

/// Probability that a transition of difficulty d survives the per-unit
/// termination chance 1/H.
inline double survival_probability(double difficulty, double horizon) {
  if (difficulty == 0.0) return 1.0;
  if (difficulty == 1.0) return 1.0 - 1.0 / horizon;
  return std::exp(difficulty * std::log1p(-1.0 / horizon));
}

/// Reduces the reward-per-difficulty objective to a stochastic shortest path:
/// every unit of difficulty terminates the process with probability 1/H. A
/// transition keeps its reward on both the continuing and the terminating
/// branch, so per-action expected reward and difficulty are unchanged. The
/// terminating branches of an action are pooled into one transition to the
/// appended terminal state, carrying their probability-weighted reward and
/// difficulty.
inline Mdp pto_transform(const Mdp& mdp, const SolverConfig& cfg) {
  cfg.check();
  if (mdp.has_terminal()) throw MdpError("MDP already has a terminal state");
  validate_for_pto(mdp);

  const auto n = mdp.num_states();
  const auto terminal = static_cast<StateId>(n);
  MdpBuilder b;
  b.reserve(n + 1, mdp.num_actions(), mdp.num_transitions() + mdp.num_actions());
  for (StateId s = 0; s < n; ++s) {
    b.add_state(mdp.state_key(s));
    for (std::size_t la = 0; la < mdp.num_actions(s); ++la) {
      b.add_action(mdp.label(s, la), mdp.honest_action(s) == static_cast<int>(la));
      double stop_prob = 0.0, stop_reward = 0.0, stop_difficulty = 0.0;
      for (const auto& t : mdp.transitions(s, la)) {
        const double keep = survival_probability(t.difficulty, cfg.horizon);
        b.add_transition(t.next, t.prob * keep, t.reward, t.difficulty);
        const double stop = t.prob * (1.0 - keep);
        if (stop > 0.0) {
          stop_prob += stop;
          stop_reward += stop * t.reward;
          stop_difficulty += stop * t.difficulty;
        }
      }
      if (stop_prob > 0.0) {
        b.add_transition(terminal, stop_prob, stop_reward / stop_prob, stop_difficulty / stop_prob);
      }
    }
  }
  b.add_state(~std::uint64_t{0});
  b.set_initial(mdp.initial());
  b.set_terminal(terminal);
  return std::move(b).build();
}

}  // namespace dagsm
