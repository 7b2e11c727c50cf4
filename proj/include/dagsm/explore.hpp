#pragma once

// Reachable-state expansion shared by the model builders, plus the whale
// arrival rule that every block-adding transition goes through.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "dagsm/mdp.hpp"

namespace dagsm {

/// One stochastic outcome of an action in model space. `adds_block` marks
/// outcomes that extend the longest chain and so race against whale arrival.
template <class State>
struct Outcome {
  State next;
  double prob = 1.0;
  double reward = 0.0;
  double difficulty = 0.0;
  bool adds_block = false;
};

template <class State>
struct ActionSpec {
  ActionLabel label;
  bool honest = false;
  std::vector<Outcome<State>> outcomes;
};

/// Interleaves whale arrivals with block creation. With w the total
/// probability of block-adding outcomes, one interrupt outcome of weight
/// delta w returns to `source` with one more whale in the pool and no reward
/// or difficulty; all outcomes are then divided by 1 + delta w. At a full
/// pool the arrival is discarded and the outcomes stay as they are.
template <class State, class PoolRef>
void whale_arrival_expansion(std::vector<Outcome<State>>& outcomes, const State& source, double delta, int max_pool,
                             PoolRef&& pool_of) {
  if (delta == 0.0) return;
  State twin = source;
  if (pool_of(twin) >= max_pool) return;
  double w = 0.0;
  for (const auto& o : outcomes) w += o.adds_block ? o.prob : 0.0;
  if (w == 0.0) return;
  const double scale = 1.0 / (1.0 + delta * w);
  for (auto& o : outcomes) o.prob *= scale;
  ++pool_of(twin);
  outcomes.push_back({twin, delta * w * scale, 0.0, 0.0, false});
}

class ModelTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Memory cap for model construction in bytes, read from
/// DAGSM_MEMORY_BUDGET_MB; 0 means unlimited.
inline std::size_t memory_budget_bytes() {
  const char* env = std::getenv("DAGSM_MEMORY_BUDGET_MB");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const auto mb = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') throw std::invalid_argument("DAGSM_MEMORY_BUDGET_MB must be an integer");
  return static_cast<std::size_t>(mb) << 20;
}

/// Rough resident size of a model with these counts, covering the builder's
/// temporary tables and the transformed copy held during solving.
inline std::size_t estimated_model_bytes(std::size_t states, std::size_t actions, std::size_t transitions) {
  return states * 96 + actions * 24 + transitions * 2 * 3 * sizeof(Transition);
}

/// Expands every state reachable from `initial`. `Model` supplies
///   std::uint64_t key(const State&) and
///   void actions(const State&, std::vector<ActionSpec<State>>&).
/// States are numbered in increasing key order and outcomes with the same
/// target, reward and difficulty are merged, so the layout does not depend on
/// discovery order.
template <class State, class Model>
Mdp explore(const Model& model, const State& initial) {
  const std::size_t budget = memory_budget_bytes();
  std::unordered_map<std::uint64_t, std::uint32_t> index;
  std::vector<State> states{initial};
  std::vector<std::uint64_t> keys{model.key(initial)};
  index.emplace(keys[0], 0);

  struct RawTransition {
    std::uint32_t next;
    double prob, reward, difficulty;
  };
  std::vector<std::uint64_t> action_begin{0};
  std::vector<std::uint64_t> transition_begin{0};
  std::vector<ActionLabel> labels;
  std::vector<std::int32_t> honest;
  std::vector<RawTransition> transitions;
  std::vector<ActionSpec<State>> specs;
  std::vector<RawTransition> merged;

  for (std::size_t i = 0; i < states.size(); ++i) {
    specs.clear();
    const State current = states[i];
    model.actions(current, specs);
    if (specs.empty()) throw MdpError("model emitted a state without actions");
    honest.push_back(-1);
    for (std::size_t a = 0; a < specs.size(); ++a) {
      auto& spec = specs[a];
      if (spec.honest) honest.back() = static_cast<std::int32_t>(a);
      merged.clear();
      for (const auto& o : spec.outcomes) {
        if (o.prob == 0.0) continue;
        const auto k = model.key(o.next);
        auto [it, inserted] = index.emplace(k, static_cast<std::uint32_t>(states.size()));
        if (inserted) {
          states.push_back(o.next);
          keys.push_back(k);
        }
        bool found = false;
        for (auto& m : merged) {
          if (m.next == it->second && m.reward == o.reward && m.difficulty == o.difficulty) {
            m.prob += o.prob;
            found = true;
            break;
          }
        }
        if (!found) merged.push_back({it->second, o.prob, o.reward, o.difficulty});
      }
      labels.push_back(spec.label);
      transitions.insert(transitions.end(), merged.begin(), merged.end());
      transition_begin.push_back(transitions.size());
    }
    action_begin.push_back(labels.size());
    if (budget != 0 && (i & 0xFFF) == 0 &&
        estimated_model_bytes(states.size(), labels.size(), transitions.size()) > budget) {
      throw ModelTooLarge("model exceeds the memory budget after " + std::to_string(states.size()) +
                          " states; raise DAGSM_MEMORY_BUDGET_MB or shrink the instance");
    }
  }
  if (budget != 0 && estimated_model_bytes(states.size(), labels.size(), transitions.size()) > budget) {
    throw ModelTooLarge("model with " + std::to_string(states.size()) + " states exceeds the memory budget");
  }

  const auto n = states.size();
  std::vector<std::uint32_t> order(n), rank(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return keys[x] < keys[y]; });
  for (std::uint32_t r = 0; r < n; ++r) rank[order[r]] = r;
  states.clear();
  states.shrink_to_fit();
  index.clear();

  MdpBuilder b;
  b.reserve(n, labels.size(), transitions.size());
  for (std::uint32_t r = 0; r < n; ++r) {
    const auto old = order[r];
    b.add_state(keys[old]);
    for (auto a = action_begin[old]; a < action_begin[old + 1]; ++a) {
      const auto local = static_cast<std::int32_t>(a - action_begin[old]);
      b.add_action(labels[a], local == honest[old]);
      for (auto t = transition_begin[a]; t < transition_begin[a + 1]; ++t) {
        const auto& tr = transitions[t];
        b.add_transition(rank[tr.next], tr.prob, tr.reward, tr.difficulty);
      }
    }
  }
  b.set_initial(rank[0]);
  return std::move(b).build();
}

/// Fixed-width little field packer for state keys; the first field put is
/// the most significant so keys order lexicographically by field.
class KeyPacker {
 public:
  void put(std::uint64_t value, int bits) {
    used_ += bits;
    if (used_ > 64) throw std::logic_error("state key exceeds 64 bits");
    key_ = (key_ << bits) | (value & ((std::uint64_t{1} << bits) - 1));
  }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  int used_ = 0;
};

inline int bits_for(std::uint64_t max_value) {
  int b = 1;
  while ((std::uint64_t{1} << b) <= max_value) ++b;
  return b;
}

}  // namespace dagsm
