#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dagsm/models.hpp"
#include "dagsm/params.hpp"
#include "dagsm/pto.hpp"
#include "dagsm/solver.hpp"

namespace dagsm {

/// Average whale transactions per block under honest mining when arrivals
/// interrupt block creation at rate delta and the pool holds at most
/// max_pool whales: q = (delta - delta^(M+1)) / (1 - delta^(M+1)).
inline double whale_inclusion_rate(double delta, int max_pool) {
  if (!(delta >= 0.0 && delta < 1.0)) throw ParamError("delta must lie in [0, 1)");
  if (max_pool < 1) throw ParamError("max pool must be at least 1");
  if (delta == 0.0) return 0.0;
  const double top = std::pow(delta, max_pool + 1);
  return (delta - top) / (1.0 - top);
}

inline double honest_utility(const ModelParams& p) {
  return p.alpha * (1.0 + p.guaranteed_fee + whale_inclusion_rate(p.delta, p.max_pool) * p.whale_fee);
}

struct RevenueResult {
  SolveResult solve;
  double policy_ratio = 0.0;  // ratio of solve.policy with the horizon bias removed
  std::size_t states = 0;
  std::size_t transitions = 0;
  double honest = 0.0;
};

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Long-run ratio of a fixed policy on the original MDP, from two
/// transformed evaluations: V_H / H = rho + b / H + O(1 / H^2), so
/// 2 V_2H / 2H - V_H / H removes the first-order horizon bias. Scales to
/// models far beyond the direct-solve oracle.
inline double extrapolated_policy_ratio(const Mdp& mdp, const Policy& policy, const SolverConfig& cfg,
                                        const std::vector<double>* values_h = nullptr) {
  auto ratio_at = [&](double horizon, const std::vector<double>* guess) {
    SolverConfig c = cfg;
    c.horizon = horizon;
    const Mdp ssp = pto_transform(mdp, c);
    Policy full = policy;
    full.resize(ssp.num_states(), 0);
    std::vector<double> v;
    if (guess != nullptr) {
      v = *guess;
      v.resize(ssp.num_states(), 0.0);
    }
    evaluate_policy(ssp, full, v, c);
    return v[ssp.initial()] / horizon;
  };
  const double r1 = values_h != nullptr ? (*values_h)[mdp.initial()] / cfg.horizon : ratio_at(cfg.horizon, nullptr);
  std::vector<double> guess;
  if (values_h != nullptr) {
    guess = *values_h;
    for (auto& x : guess) x *= 2.0;
  }
  const double r2 = ratio_at(2.0 * cfg.horizon, values_h != nullptr ? &guess : nullptr);
  return 2.0 * r2 - r1;
}

/// Builds the selected model, transforms it and solves it.
inline RevenueResult optimal_revenue(const ModelParams& p, const SolverConfig& cfg = {}) {
  try {
    const Mdp mdp = build_model(p);
    RevenueResult r;
    r.states = mdp.num_states();
    r.transitions = mdp.num_transitions();
    r.solve = policy_iteration(pto_transform(mdp, cfg), cfg);
    r.solve.policy.resize(mdp.num_states());
    r.solve.values.resize(mdp.num_states());
    r.policy_ratio = extrapolated_policy_ratio(mdp, r.solve.policy, cfg, &r.solve.values);
    r.honest = honest_utility(p);
    return r;
  } catch (const ModelTooLarge&) {
    throw;
  } catch (const std::exception& e) {
    throw AnalysisError(std::string(e.what()) + " [" + p.describe() + "]");
  }
}

/// Strict profitability test; the margin absorbs solver noise where the
/// optimal policy is honest mining.
inline constexpr double kProfitMargin = 1e-6;

struct ThresholdProbe {
  double alpha;
  double revenue;
  double honest;
  bool profitable() const { return revenue > honest + kProfitMargin; }
};

struct ThresholdResult {
  double threshold = 0.5;
  double lower = 0.0;  // largest probed unprofitable alpha (0 if none)
  double upper = 0.5;  // smallest probed profitable alpha
  bool none_below_half = false;  // no profitable deviation found below 0.5
  std::vector<ThresholdProbe> probes;

  double bracket() const { return upper - lower; }
};

using RevenueFn = std::function<double(const ModelParams&)>;

inline RevenueFn solved_revenue(const SolverConfig& cfg = {}) {
  return [cfg](const ModelParams& p) { return optimal_revenue(p, cfg).policy_ratio; };
}

/// Bisects alpha over [0, 0.5] for the smallest profitable mining share.
/// `revenue` defaults to the full solve; callers may pass a cached one.
inline ThresholdResult security_threshold(const ModelParams& tmpl, double tol = 1e-3, RevenueFn revenue = {},
                                          const SolverConfig& cfg = {}) {
  if (!(tol > 0.0 && tol < 0.5)) throw ParamError("threshold tolerance must lie in (0, 0.5)");
  if (!revenue) revenue = solved_revenue(cfg);
  ThresholdResult res;
  auto probe = [&](double alpha) {
    ModelParams p = tmpl;
    p.alpha = alpha;
    ThresholdProbe pr{alpha, revenue(p), honest_utility(p)};
    res.probes.push_back(pr);
    return pr.profitable();
  };
  if (!probe(0.5 - tol)) {
    res.threshold = 0.5;
    res.lower = 0.5 - tol;
    res.upper = 0.5;
    res.none_below_half = true;
    return res;
  }
  double lo = 0.0, hi = 0.5 - tol;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (probe(mid) ? hi : lo) = mid;
  }
  res.lower = lo;
  res.upper = hi;
  res.threshold = 0.5 * (lo + hi);
  return res;
}

}  // namespace dagsm
