#pragma once

// Monte Carlo rollouts: honest mining with whale arrivals, and fixed
// policies on a model MDP. Standard errors come from 100 batch means.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "dagsm/analysis.hpp"
#include "dagsm/mdp.hpp"

namespace dagsm {

inline constexpr int kSimBatches = 100;

struct SimReport {
  std::uint64_t steps = 0;   // blocks for simulate_honest, transitions for simulate_policy
  double q = 0.0;            // whales included per block (honest only)
  double q_se = 0.0;
  double revenue = 0.0;      // reward per unit of difficulty
  double revenue_se = 0.0;
  double total_reward = 0.0;
  double total_difficulty = 0.0;
};

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit Mersenne Twister with a fixed bits-to-double mapping, so reports
/// are identical across standard libraries.
class SimRng {
 public:
  explicit SimRng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 gen_;
};

namespace detail {

/// Ratio-of-sums estimate with a delta-method standard error over batches.
inline void batch_ratio(const std::vector<double>& num, const std::vector<double>& den, double& ratio, double& se) {
  double sn = 0.0, sd = 0.0;
  for (std::size_t b = 0; b < num.size(); ++b) {
    sn += num[b];
    sd += den[b];
  }
  if (sd == 0.0) throw SimError("no difficulty accumulated");
  ratio = sn / sd;
  const double k = static_cast<double>(num.size());
  double ss = 0.0;
  for (std::size_t b = 0; b < num.size(); ++b) {
    const double e = num[b] - ratio * den[b];
    ss += e * e;
  }
  se = k > 1 ? std::sqrt(ss / (k * (k - 1))) / (sd / k) : 0.0;
}

inline std::uint64_t batch_end(std::uint64_t n, int b) { return n * static_cast<std::uint64_t>(b + 1) / kSimBatches; }

}  // namespace detail

/// All miners follow the protocol. Between blocks a whale arrives with
/// probability delta / (1 + delta) per event and is dropped at a full pool;
/// each block takes one pooled whale if any. The tracked miner creates a
/// block with probability alpha and earns 1 + f plus F per whale.
inline SimReport simulate_honest(const ModelParams& p, std::uint64_t n_blocks, std::uint64_t seed) {
  if (n_blocks == 0) throw SimError("need at least one block");
  p.check();
  SimRng rng(seed);
  const double arrive = p.delta / (1.0 + p.delta);
  std::vector<double> whales(kSimBatches, 0.0), reward(kSimBatches, 0.0), blocks(kSimBatches, 0.0);
  int pool = 0;
  std::uint64_t done = 0;
  for (int b = 0; b < kSimBatches; ++b) {
    for (; done < detail::batch_end(n_blocks, b); ++done) {
      while (p.delta > 0.0 && rng.uniform() < arrive) pool = std::min(pool + 1, p.max_pool);
      const bool whale = pool > 0;
      pool -= whale ? 1 : 0;
      blocks[b] += 1.0;
      whales[b] += whale ? 1.0 : 0.0;
      if (rng.uniform() < p.alpha) reward[b] += 1.0 + p.guaranteed_fee + (whale ? p.whale_fee : 0.0);
    }
  }
  SimReport r;
  r.steps = n_blocks;
  detail::batch_ratio(whales, blocks, r.q, r.q_se);
  detail::batch_ratio(reward, blocks, r.revenue, r.revenue_se);
  for (int b = 0; b < kSimBatches; ++b) {
    r.total_reward += reward[b];
    r.total_difficulty += blocks[b];
  }
  return r;
}

/// Rolls the untransformed MDP under a policy from its initial state.
inline SimReport simulate_policy(const Mdp& mdp, const Policy& policy, std::uint64_t n_steps, std::uint64_t seed) {
  if (n_steps == 0) throw SimError("need at least one step");
  if (policy.size() < mdp.num_states()) throw SimError("policy does not cover every state");
  SimRng rng(seed);
  std::vector<double> reward(kSimBatches, 0.0), difficulty(kSimBatches, 0.0);
  StateId s = mdp.initial();
  std::uint64_t done = 0;
  for (int b = 0; b < kSimBatches; ++b) {
    for (; done < detail::batch_end(n_steps, b); ++done) {
      if (policy[s] >= mdp.num_actions(s)) throw SimError("policy picks an illegal action");
      const auto ts = mdp.transitions(s, policy[s]);
      double u = rng.uniform();
      std::size_t k = 0;
      while (k + 1 < ts.size() && u >= ts[k].prob) u -= ts[k++].prob;
      reward[b] += ts[k].reward;
      difficulty[b] += ts[k].difficulty;
      s = ts[k].next;
    }
  }
  SimReport r;
  r.steps = n_steps;
  detail::batch_ratio(reward, difficulty, r.revenue, r.revenue_se);
  for (int b = 0; b < kSimBatches; ++b) {
    r.total_reward += reward[b];
    r.total_difficulty += difficulty[b];
  }
  return r;
}

}  // namespace dagsm
