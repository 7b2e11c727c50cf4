#pragma once

// Selfish mining in a longest-chain protocol with whale transactions.
// State (a, h, fork, pool): the secret chain and the public chain since the
// last fork, each as whale flags.

#include <optional>
#include <vector>

#include "dagsm/chain_bits.hpp"
#include "dagsm/explore.hpp"
#include "dagsm/params.hpp"

namespace dagsm {

struct NcState {
  Chain a;
  Chain h;
  Fork fork = Fork::kIrrelevant;
  std::uint8_t pool = 0;

  friend bool operator==(const NcState&, const NcState&) = default;
};

/// Maps a state to its representative, or nullopt when it is infeasible.
/// The fork flag only matters when a tie can be published, i.e. |a| >= |h|,
/// and the relevant/irrelevant split only matters under first_heard.
inline std::optional<NcState> canonicalize_state(NcState s, const ModelParams& p) {
  if (s.a.length > p.max_fork || s.h.length > p.max_fork || s.pool > p.max_pool) return std::nullopt;
  if (s.h.tx() > s.pool) return std::nullopt;
  if (s.a.length < s.h.length) s.fork = Fork::kIrrelevant;
  if (p.tie_break != TieBreak::kFirstHeard && s.fork == Fork::kRelevant) s.fork = Fork::kIrrelevant;
  return s;
}

class NcModel {
 public:
  explicit NcModel(ModelParams p) : p_(p), len_bits_(bits_for(p.max_fork)), pool_bits_(bits_for(p.max_pool)) {
    p_.check();
  }

  std::uint64_t key(const NcState& s) const {
    KeyPacker k;
    k.put(s.a.length, len_bits_);
    k.put(s.a.whales, p_.max_fork);
    k.put(s.h.length, len_bits_);
    k.put(s.h.whales, p_.max_fork);
    k.put(static_cast<unsigned>(s.fork), 2);
    k.put(s.pool, pool_bits_);
    return k.key();
  }

  void actions(const NcState& s, std::vector<ActionSpec<NcState>>& out) const {
    const int a = s.a.length, h = s.h.length;
    const bool honest_reveal = a > h;
    const bool honest_adopt = !honest_reveal && h > 0;

    for (int l = 1; l <= h; ++l) {
      NcState n{{}, s.h.shifted(l), h > l ? Fork::kRelevant : Fork::kIrrelevant,
                static_cast<std::uint8_t>(s.pool - s.h.tx(l))};
      out.push_back({{ActionKind::kAdopt, static_cast<std::uint8_t>(l)}, honest_adopt && l == h,
                     {{canon(n), 1.0, 0.0, double(l), false}}});
    }
    if (h >= 1 && a >= h && tie_allowed(s.fork)) {
      NcState n = s;
      n.fork = Fork::kActive;
      out.push_back({{ActionKind::kReveal, static_cast<std::uint8_t>(h)}, false, {{canon(n), 1.0, 0.0, 0.0, false}}});
    }
    for (int l = h + 1; l <= a; ++l) {
      const int whales = s.a.tx(l);
      NcState n{s.a.shifted(l), {}, Fork::kIrrelevant, static_cast<std::uint8_t>(s.pool - whales)};
      out.push_back({{ActionKind::kReveal, static_cast<std::uint8_t>(l)}, honest_reveal && l == a,
                     {{canon(n), 1.0, l * (1.0 + p_.guaranteed_fee) + p_.whale_fee * whales, double(l), false}}});
    }
    if (a < p_.max_fork && h < p_.max_fork) {
      ActionSpec<NcState> wait{{ActionKind::kWait, 0}, !honest_reveal && !honest_adopt, {}};
      const double al = p_.alpha;
      wait.outcomes.push_back({canon({s.a.appended(s.pool), s.h, Fork::kIrrelevant, s.pool}), al, 0, 0, true});
      if (s.fork != Fork::kActive) {
        wait.outcomes.push_back({canon({s.a, s.h.appended(s.pool), Fork::kRelevant, s.pool}), 1 - al, 0, 0, true});
      } else {
        const double g = p_.tie_gamma();
        wait.outcomes.push_back(
            {canon({s.a, s.h.appended(s.pool), Fork::kRelevant, s.pool}), (1 - g) * (1 - al), 0, 0, true});
        const int whales = s.a.tx(h);
        const auto pool = static_cast<std::uint8_t>(s.pool - whales);
        wait.outcomes.push_back({canon({s.a.shifted(h), Chain{}.appended(pool), Fork::kRelevant, pool}),
                                 g * (1 - al), h * (1.0 + p_.guaranteed_fee) + p_.whale_fee * whales, double(h),
                                 true});
      }
      whale_arrival_expansion(wait.outcomes, s, p_.delta, p_.max_pool, [](NcState& x) -> std::uint8_t& {
        return x.pool;
      });
      out.push_back(std::move(wait));
    }
  }

  NcState initial() const { return {}; }
  const ModelParams& params() const { return p_; }

 private:
  bool tie_allowed(Fork f) const {
    return p_.tie_break == TieBreak::kFirstHeard ? f == Fork::kRelevant : f != Fork::kActive;
  }

  NcState canon(const NcState& s) const {
    auto c = canonicalize_state(s, p_);
    if (!c) throw MdpError("model generated an infeasible state");
    return *c;
  }

  ModelParams p_;
  int len_bits_;
  int pool_bits_;
};

inline Mdp build_nc_model(const ModelParams& p) {
  const NcModel model(p);
  return explore(model, model.initial());
}

}  // namespace dagsm
