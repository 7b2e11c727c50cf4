#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "dagsm/linear.hpp"
#include "dagsm/mdp.hpp"
#include "dagsm/pto.hpp"

namespace dagsm {

struct SolveResult {
  Policy policy;
  std::vector<double> values;
  double ratio = 0.0;  // reward per unit of difficulty, values[initial] / H
  std::size_t rounds = 0;
  std::string linear_methods;  // e.g. "bicg x12, bicgstab x1"
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_ssp(const Mdp& ssp) {
  if (!ssp.has_terminal()) throw SolverError("expected a stochastic shortest path MDP (no terminal state)");
}

inline std::size_t linear_iteration_cap(const SolverConfig& cfg, std::size_t n) {
  if (cfg.linear_max_iterations > 0) return cfg.linear_max_iterations;
  return std::max<std::size_t>(10, static_cast<std::size_t>(10.0 * std::sqrt(static_cast<double>(n))));
}

/// Builds I - P_pi and the expected one-step reward under the policy. The
/// terminal state keeps an identity row so its value is pinned to zero.
inline void policy_system(const Mdp& ssp, const Policy& policy, linalg::CsrMatrix& a, linalg::Vec& b) {
  const auto n = ssp.num_states();
  const auto terminal = ssp.terminal();
  a.n = n;
  a.row_begin.assign(1, 0);
  a.row_begin.reserve(n + 1);
  a.col.clear();
  a.val.clear();
  b.assign(n, 0.0);
  std::vector<std::pair<std::uint32_t, double>> row;
  for (StateId s = 0; s < n; ++s) {
    row.clear();
    row.emplace_back(s, 1.0);
    if (s != terminal) {
      double expected = 0.0;
      for (const auto& t : ssp.transitions(s, policy[s])) {
        expected += t.prob * t.reward;
        if (t.next != terminal) row.emplace_back(t.next, -t.prob);
      }
      b[s] = expected;
    }
    std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (std::size_t i = 0; i < row.size();) {
      const auto c = row[i].first;
      double v = 0.0;
      for (; i < row.size() && row[i].first == c; ++i) v += row[i].second;
      a.col.push_back(c);
      a.val.push_back(v);
    }
    a.row_begin.push_back(a.col.size());
  }
}

inline double q_value(const Mdp& ssp, ActionId a, const std::vector<double>& values) {
  double q = 0.0;
  for (const auto& t : ssp.transitions(a)) q += t.prob * (t.reward + values[t.next]);
  return q;
}

}  // namespace detail

struct EvaluationStats {
  linalg::SolveStats primary;
  linalg::SolveStats fallback;
  bool used_fallback = false;
};

/// Expected total reward to termination from every state under `policy`:
/// solves v = r_pi + P_pi v with preconditioned BiCG, retrying once with
/// BiCGSTAB on failure. `values` carries the initial guess in and the
/// solution out.
inline EvaluationStats evaluate_policy(const Mdp& ssp, const Policy& policy, std::vector<double>& values,
                                       const SolverConfig& cfg = {}) {
  detail::require_ssp(ssp);
  const auto n = ssp.num_states();
  if (policy.size() != n) throw SolverError("policy size does not match the state count");
  for (StateId s = 0; s < n; ++s) {
    if (s != ssp.terminal() && policy[s] >= ssp.num_actions(s)) {
      throw SolverError("policy selects an illegal action in state " + std::to_string(s));
    }
  }
  if (values.size() != n) values.assign(n, 0.0);
  values[ssp.terminal()] = 0.0;

  linalg::CsrMatrix a;
  linalg::Vec b;
  detail::policy_system(ssp, policy, a, b);
  const linalg::Ilu0 precond(a);
  const auto cap = detail::linear_iteration_cap(cfg, n);

  EvaluationStats stats;
  linalg::Vec x = values;
  stats.primary = linalg::bicg(a, precond, b, x, cfg.linear_tolerance, cap);
  if (stats.primary.converged) {
    values = std::move(x);
    return stats;
  }
  stats.used_fallback = true;
  x = values;
  stats.fallback = linalg::bicgstab(a, precond, b, x, cfg.linear_tolerance, cap);
  if (!stats.fallback.converged) {
    std::ostringstream msg;
    msg << "policy evaluation did not converge: bicg residual " << stats.primary.residual << " after "
        << stats.primary.iterations << " iterations, bicgstab residual " << stats.fallback.residual << " after "
        << stats.fallback.iterations << " iterations";
    throw SolverError(msg.str());
  }
  values = std::move(x);
  return stats;
}

/// Policy iteration on a stochastic shortest path MDP. Starts from the
/// honest-mimicking policy; each round evaluates the current policy and
/// switches a state to the greedy action (lowest index among ties) only when
/// it improves on the current action by more than round-off.
inline SolveResult policy_iteration(const Mdp& ssp, const SolverConfig& cfg = {}) {
  cfg.check();
  detail::require_ssp(ssp);
  const auto n = ssp.num_states();
  SolveResult res;
  res.policy = default_policy(ssp);
  res.values.assign(n, 0.0);
  std::size_t bicg_count = 0, stab_count = 0;
  std::vector<double> previous;
  for (std::size_t round = 1; round <= cfg.max_policy_rounds; ++round) {
    res.rounds = round;
    previous = res.values;
    try {
      const auto st = evaluate_policy(ssp, res.policy, res.values, cfg);
      ++(st.used_fallback ? stab_count : bicg_count);
    } catch (const SolverError& e) {
      throw SolverError("policy iteration round " + std::to_string(round) + ": " + e.what());
    }
    double max_change = 0.0;
    for (StateId s = 0; s < n; ++s) max_change = std::max(max_change, std::abs(res.values[s] - previous[s]));

    bool changed = false;
    for (StateId s = 0; s < n; ++s) {
      if (s == ssp.terminal()) continue;
      const ActionId first = ssp.first_action(s);
      const auto count = ssp.num_actions(s);
      double best = -std::numeric_limits<double>::infinity();
      std::uint32_t best_action = 0;
      for (std::uint32_t la = 0; la < count; ++la) {
        const double q = detail::q_value(ssp, first + la, res.values);
        if (q > best) {
          best = q;
          best_action = la;
        }
      }
      const double current = detail::q_value(ssp, first + res.policy[s], res.values);
      const double slack = 1e-12 * std::max(1.0, std::abs(current));
      if (best_action != res.policy[s] && best > current + slack) {
        res.policy[s] = best_action;
        changed = true;
      }
    }
    if (!changed || (round > 1 && max_change < cfg.precision)) break;
    if (round == cfg.max_policy_rounds) throw SolverError("policy iteration hit the round cap");
  }
  res.ratio = res.values[ssp.initial()] / cfg.horizon;
  res.linear_methods = "bicg x" + std::to_string(bicg_count) + ", bicgstab x" + std::to_string(stab_count);
  return res;
}

/// Gauss-Seidel value iteration with sup-norm stopping; cross-check backend
/// for policy_iteration.
inline SolveResult value_iteration(const Mdp& ssp, const SolverConfig& cfg = {}) {
  cfg.check();
  detail::require_ssp(ssp);
  const auto n = ssp.num_states();
  SolveResult res;
  res.values.assign(n, 0.0);
  res.policy.assign(n, 0);
  for (std::size_t sweep = 1;; ++sweep) {
    if (sweep > cfg.max_value_sweeps) throw SolverError("value iteration exceeded its sweep cap");
    double change = 0.0;
    for (StateId s = 0; s < n; ++s) {
      if (s == ssp.terminal()) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t la = 0; la < ssp.num_actions(s); ++la) {
        best = std::max(best, detail::q_value(ssp, ssp.first_action(s) + la, res.values));
      }
      change = std::max(change, std::abs(best - res.values[s]));
      res.values[s] = best;
    }
    res.rounds = sweep;
    if (change < cfg.precision) break;
  }
  for (StateId s = 0; s < n; ++s) {
    if (s == ssp.terminal()) continue;
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint32_t la = 0; la < ssp.num_actions(s); ++la) {
      const double q = detail::q_value(ssp, ssp.first_action(s) + la, res.values);
      if (q > best) {
        best = q;
        res.policy[s] = la;
      }
    }
  }
  res.ratio = res.values[ssp.initial()] / cfg.horizon;
  res.linear_methods = "value-iteration";
  return res;
}

}  // namespace dagsm
