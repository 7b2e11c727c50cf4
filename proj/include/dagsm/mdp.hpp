#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dagsm {

using StateId = std::uint32_t;
using ActionId = std::uint64_t;

struct Transition {
  StateId next = 0;
  double prob = 0.0;
  double reward = 0.0;
  double difficulty = 0.0;
};

/// Kind of a parameterized action; the argument is stored beside it.
enum class ActionKind : std::uint8_t { kGeneric, kAdopt, kReveal, kWait, kMine, kMerge };

struct ActionLabel {
  ActionKind kind = ActionKind::kGeneric;
  std::uint8_t arg = 0;

  friend bool operator==(const ActionLabel&, const ActionLabel&) = default;
};

inline std::string to_string(ActionLabel label) {
  switch (label.kind) {
    case ActionKind::kAdopt: return "Adopt " + std::to_string(label.arg);
    case ActionKind::kReveal: return "Reveal " + std::to_string(label.arg);
    case ActionKind::kWait: return "Wait";
    case ActionKind::kMine: return "Mine " + std::to_string(label.arg);
    case ActionKind::kMerge: return "Merge";
    case ActionKind::kGeneric: break;
  }
  return "A" + std::to_string(label.arg);
}

class MdpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sparse ratio-objective MDP. States, their legal actions and the
/// transitions of every action are stored in compressed row form, so a
/// state's actions and an action's transitions are contiguous slices.
///
/// A per-state "honest" action (local index, or -1) marks the action that
/// mimics protocol-following behaviour; solvers start from it.
class Mdp {
 public:
  std::size_t num_states() const { return action_begin_.size() - 1; }
  std::size_t num_actions() const { return labels_.size(); }
  std::size_t num_transitions() const { return transitions_.size(); }

  ActionId first_action(StateId s) const { return action_begin_[s]; }
  std::size_t num_actions(StateId s) const { return action_begin_[s + 1] - action_begin_[s]; }

  std::span<const Transition> transitions(ActionId a) const {
    return {transitions_.data() + transition_begin_[a],
            transitions_.data() + transition_begin_[a + 1]};
  }
  std::span<const Transition> transitions(StateId s, std::size_t local_action) const {
    return transitions(first_action(s) + local_action);
  }
  ActionLabel label(ActionId a) const { return labels_[a]; }
  ActionLabel label(StateId s, std::size_t local_action) const {
    return labels_[first_action(s) + local_action];
  }

  StateId initial() const { return initial_; }
  bool has_terminal() const { return terminal_ >= 0; }
  StateId terminal() const { return static_cast<StateId>(terminal_); }
  int honest_action(StateId s) const { return honest_[s]; }
  std::uint64_t state_key(StateId s) const { return keys_[s]; }

  /// Finds the state with the given builder key; returns -1 when absent.
  std::int64_t find_key(std::uint64_t key) const {
    for (std::size_t s = 0; s < keys_.size(); ++s) {
      if (keys_[s] == key) return static_cast<std::int64_t>(s);
    }
    return -1;
  }

  const std::vector<Transition>& all_transitions() const { return transitions_; }

 private:
  friend class MdpBuilder;

  std::vector<std::uint64_t> action_begin_{0};
  std::vector<std::uint64_t> transition_begin_{0};
  std::vector<Transition> transitions_;
  std::vector<ActionLabel> labels_;
  std::vector<int> honest_;
  std::vector<std::uint64_t> keys_;
  StateId initial_ = 0;
  std::int64_t terminal_ = -1;
};

/// Appends states in id order. Each state is opened with add_state(), then
/// receives its actions, each followed by that action's transitions.
class MdpBuilder {
 public:
  StateId add_state(std::uint64_t key = 0) {
    close_state();
    open_ = true;
    mdp_.keys_.push_back(key);
    mdp_.honest_.push_back(-1);
    return static_cast<StateId>(mdp_.keys_.size() - 1);
  }

  void add_action(ActionLabel label, bool honest = false) {
    if (!open_) throw MdpError("add_action before add_state");
    close_action();
    const auto local = mdp_.labels_.size() - mdp_.action_begin_.back();
    if (honest) mdp_.honest_.back() = static_cast<int>(local);
    mdp_.labels_.push_back(label);
    action_open_ = true;
  }

  void add_transition(StateId next, double prob, double reward, double difficulty) {
    if (!action_open_) throw MdpError("add_transition before add_action");
    mdp_.transitions_.push_back({next, prob, reward, difficulty});
  }

  void reserve(std::size_t states, std::size_t actions, std::size_t transitions) {
    mdp_.keys_.reserve(states);
    mdp_.honest_.reserve(states);
    mdp_.action_begin_.reserve(states + 1);
    mdp_.labels_.reserve(actions);
    mdp_.transition_begin_.reserve(actions + 1);
    mdp_.transitions_.reserve(transitions);
  }

  void set_initial(StateId s) { mdp_.initial_ = s; }
  void set_terminal(StateId s) { mdp_.terminal_ = s; }

  /// Finishes construction. Validation is separate (see validate()).
  Mdp build() && {
    close_state();
    return std::move(mdp_);
  }

 private:
  void close_action() {
    if (action_open_) {
      mdp_.transition_begin_.push_back(mdp_.transitions_.size());
      action_open_ = false;
    }
  }
  void close_state() {
    close_action();
    if (open_) {
      mdp_.action_begin_.push_back(mdp_.labels_.size());
      open_ = false;
    }
  }

  Mdp mdp_;
  bool open_ = false;
  bool action_open_ = false;
};

inline constexpr double kProbabilitySumTolerance = 1e-12;

/// Checks the structural invariants: probabilities in [0,1] summing to one per
/// action, nonnegative reward and difficulty, resolvable successors, and at
/// least one action in every state except the terminal one.
inline void validate(const Mdp& mdp) {
  const auto n = mdp.num_states();
  if (n == 0) throw MdpError("MDP has no states");
  if (mdp.initial() >= n) throw MdpError("initial state out of range");
  for (StateId s = 0; s < n; ++s) {
    const bool is_terminal = mdp.has_terminal() && s == mdp.terminal();
    if (is_terminal) {
      if (mdp.num_actions(s) != 0) throw MdpError("terminal state has actions");
      continue;
    }
    if (mdp.num_actions(s) == 0) {
      throw MdpError("state " + std::to_string(s) + " has no legal action");
    }
    for (std::size_t a = 0; a < mdp.num_actions(s); ++a) {
      double total = 0.0;
      for (const auto& t : mdp.transitions(s, a)) {
        if (t.next >= n) throw MdpError("transition to unknown state from " + std::to_string(s));
        if (!(t.prob >= 0.0 && t.prob <= 1.0)) throw MdpError("probability outside [0,1]");
        if (!(t.reward >= 0.0)) throw MdpError("negative reward");
        if (!(t.difficulty >= 0.0)) throw MdpError("negative difficulty");
        total += t.prob;
      }
      if (std::abs(total - 1.0) > kProbabilitySumTolerance) {
        throw MdpError("probabilities of state " + std::to_string(s) + " action " +
                       to_string(mdp.label(s, a)) + " sum to " + std::to_string(total));
      }
    }
  }
}

/// Returns the states from which some policy can avoid accruing difficulty
/// forever: the largest set Z in which every state has an action whose
/// transitions all carry zero difficulty and stay inside Z. A nonempty result
/// means the probabilistic-termination transform would not terminate under
/// some policy.
inline std::vector<StateId> zero_difficulty_trap(const Mdp& mdp) {
  const auto n = mdp.num_states();
  // Zero-difficulty actions are candidates; count, per action, successors that
  // have left Z. Reverse edges let removals propagate in linear time.
  std::vector<std::uint32_t> live_actions(n, 0);
  std::vector<std::uint32_t> blocked(mdp.num_actions(), 0);
  std::vector<std::uint64_t> rev_begin(n + 1, 0);
  std::vector<char> candidate(mdp.num_actions(), 0);
  for (StateId s = 0; s < n; ++s) {
    for (std::size_t la = 0; la < mdp.num_actions(s); ++la) {
      const ActionId a = mdp.first_action(s) + la;
      bool zero = true;
      for (const auto& t : mdp.transitions(a)) {
        if (t.prob > 0.0 && t.difficulty > 0.0) { zero = false; break; }
      }
      if (!zero) continue;
      candidate[a] = 1;
      ++live_actions[s];
      for (const auto& t : mdp.transitions(a)) {
        if (t.prob > 0.0) ++rev_begin[t.next + 1];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) rev_begin[i + 1] += rev_begin[i];
  std::vector<ActionId> rev(rev_begin[n]);
  {
    auto fill = rev_begin;
    for (StateId s = 0; s < n; ++s) {
      for (std::size_t la = 0; la < mdp.num_actions(s); ++la) {
        const ActionId a = mdp.first_action(s) + la;
        if (!candidate[a]) continue;
        for (const auto& t : mdp.transitions(a)) {
          if (t.prob > 0.0) rev[fill[t.next]++] = a;
        }
      }
    }
  }
  // Map action -> owning state.
  std::vector<StateId> owner(mdp.num_actions());
  for (StateId s = 0; s < n; ++s) {
    for (std::size_t la = 0; la < mdp.num_actions(s); ++la) owner[mdp.first_action(s) + la] = s;
  }
  std::vector<char> in_z(n, 1);
  std::vector<StateId> work;
  for (StateId s = 0; s < n; ++s) {
    if (live_actions[s] == 0) { in_z[s] = 0; work.push_back(s); }
  }
  while (!work.empty()) {
    const StateId gone = work.back();
    work.pop_back();
    for (auto i = rev_begin[gone]; i < rev_begin[gone + 1]; ++i) {
      const ActionId a = rev[i];
      if (blocked[a]++ == 0) {
        const StateId s = owner[a];
        if (in_z[s] && --live_actions[s] == 0) {
          in_z[s] = 0;
          work.push_back(s);
        }
      }
    }
  }
  std::vector<StateId> trap;
  for (StateId s = 0; s < n; ++s) {
    if (in_z[s]) trap.push_back(s);
  }
  return trap;
}

/// Full invariant check, including termination safety for the
/// probabilistic-termination transform.
inline void validate_for_pto(const Mdp& mdp) {
  validate(mdp);
  const auto trap = zero_difficulty_trap(mdp);
  if (!trap.empty()) {
    throw MdpError("a policy can avoid difficulty forever from state " + std::to_string(trap.front()) +
                   " (" + std::to_string(trap.size()) + " such states)");
  }
}

/// Deterministic stationary policy: one local action index per state.
using Policy = std::vector<std::uint32_t>;

/// Honest-mimicking actions where marked, otherwise the first legal action.
inline Policy default_policy(const Mdp& mdp) {
  Policy p(mdp.num_states(), 0);
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    if (mdp.honest_action(s) >= 0) p[s] = static_cast<std::uint32_t>(mdp.honest_action(s));
  }
  return p;
}

}  // namespace dagsm
