#pragma once

// Upper-bound DAG model. The selfish secret chain is tracked by length only
// (its blocks are assumed to carry every whale they could), blocks between
// the last divergence and the current fork are summarised by the pre-fork
// counts a_d and h_d, and p records whether honest blocks outside the
// canonical chain can still become acceptable.

#include <optional>
#include <stdexcept>
#include <vector>

#include "dagsm/chain_bits.hpp"
#include "dagsm/explore.hpp"
#include "dagsm/params.hpp"

namespace dagsm {

struct UbState {
  std::uint8_t ad = 0;  // selfish pre-fork blocks
  std::uint8_t ac = 0;  // secret chain length
  std::uint8_t hd = 0;  // honest pre-fork blocks
  Chain hc;             // public chain since the fork
  Fork fork = Fork::kIrrelevant;
  std::uint8_t c = 0;  // secret blocks already canonical (MAD only)
  std::uint8_t pool = 0;
  bool p = true;

  friend bool operator==(const UbState&, const UbState&) = default;
};

inline std::optional<UbState> canonicalize_state(UbState s, const ModelParams& p) {
  if (s.ac > p.max_fork || s.hc.length > p.max_fork || s.pool > p.max_pool) return std::nullopt;
  if (s.ad + s.hd > p.fork_sensitivity || s.ad < s.hd || s.c > s.ac || s.c > s.hc.length) return std::nullopt;
  if (s.hc.tx() > s.pool) return std::nullopt;
  if (s.ac < s.hc.length) s.fork = Fork::kIrrelevant;
  if (p.tie_break != TieBreak::kFirstHeard && s.fork == Fork::kRelevant) s.fork = Fork::kIrrelevant;
  return s;
}

class UbModel {
 public:
  explicit UbModel(ModelParams p)
      : p_(p),
        len_bits_(bits_for(p.max_fork)),
        pre_bits_(bits_for(p.fork_sensitivity)),
        pool_bits_(bits_for(p.max_pool)) {
    p_.check();
  }

  std::uint64_t key(const UbState& s) const {
    KeyPacker k;
    k.put(s.ad, pre_bits_);
    k.put(s.ac, len_bits_);
    k.put(s.hd, pre_bits_);
    k.put(s.hc.length, len_bits_);
    k.put(s.hc.whales, p_.max_fork);
    k.put(static_cast<unsigned>(s.fork), 2);
    k.put(s.c, len_bits_);
    k.put(s.pool, pool_bits_);
    k.put(s.p, 1);
    return k.key();
  }

  void actions(const UbState& s, std::vector<ActionSpec<UbState>>& out) const {
    const int ac = s.ac, h = s.hc.length;
    const bool mad = p_.ledger == Ledger::kMad;
    const bool honest_reveal = ac > h;
    const bool honest_adopt = !honest_reveal && h > 0;

    for (int l = std::max(ac, 1); l <= h; ++l) {
      const bool settled = mad && s.c > 0 && s.ad + 2 * s.c + s.hd > p_.fork_sensitivity;
      const double reward = settled ? s.ad + s.c : s.ad - s.hd;
      const double difficulty =
          p_.difficulty_source == DifficultySource::kUncontested ? reward + l - ac : double(s.ad + l);
      UbState n;
      n.hc = s.hc.shifted(l);
      n.pool = static_cast<std::uint8_t>(s.pool - s.hc.tx(l));
      out.push_back({{ActionKind::kAdopt, static_cast<std::uint8_t>(l)}, honest_adopt && l == h,
                     {{canon(n), 1.0, reward, difficulty, false}}});
    }

    if (h >= 1 && ac >= h) {
      if (auto tie = reveal_tie(s)) {
        out.push_back({{ActionKind::kReveal, static_cast<std::uint8_t>(h)}, false, {*tie}});
      }
    }
    for (int l = h + 1; l <= ac; ++l) {
      auto o = reveal_longer(s, l);
      o.next.c = 0;
      o.next.fork = Fork::kIrrelevant;
      o.next = canon(o.next);
      out.push_back({{ActionKind::kReveal, static_cast<std::uint8_t>(l)}, honest_reveal && l == ac, {o}});
    }

    if (ac < p_.max_fork && h < p_.max_fork) {
      ActionSpec<UbState> mine{{ActionKind::kMine, 0}, !honest_reveal && !honest_adopt, {}};
      const double al = p_.alpha;
      UbState selfish = s;
      ++selfish.ac;
      selfish.fork = Fork::kIrrelevant;
      mine.outcomes.push_back({canon(selfish), al, 0, 0, true});
      UbState honest = s;
      honest.hc = s.hc.appended(s.pool);
      honest.fork = Fork::kRelevant;
      if (s.fork != Fork::kActive) {
        mine.outcomes.push_back({canon(honest), 1 - al, 0, 0, true});
      } else {
        const double g = p_.tie_gamma();
        mine.outcomes.push_back({canon(honest), (1 - g) * (1 - al), 0, 0, true});
        Outcome<UbState> won;
        if (!mad) {
          won = reveal_longer(s, h);
          won.next.c = 0;
          won.next.hc = Chain{}.appended(won.next.pool);
        } else {
          won = claim_tie(s);
          won.next.hc = won.next.hc.appended(won.next.pool);
        }
        won.next.fork = Fork::kRelevant;
        won.next = canon(won.next);
        won.prob = g * (1 - al);
        won.adds_block = true;
        mine.outcomes.push_back(won);
      }
      whale_arrival_expansion(mine.outcomes, s, p_.delta, p_.max_pool, [](UbState& x) -> std::uint8_t& {
        return x.pool;
      });
      out.push_back(std::move(mine));
    }
  }

  UbState initial() const { return {}; }

 private:
  bool tie_allowed(Fork f) const {
    return p_.tie_break == TieBreak::kFirstHeard ? f == Fork::kRelevant : f != Fork::kActive;
  }

  /// Fee claim for k newly published selfish blocks: the guaranteed fee and
  /// as many pooled whales as fit.
  double claim(int k, std::uint8_t& pool) const {
    const int whales = std::min<int>(k, pool);
    pool = static_cast<std::uint8_t>(pool - whales);
    return k * p_.guaranteed_fee + whales * p_.whale_fee;
  }

  /// Publishing l > |h_c| secret blocks (also used for a tie won by the
  /// selfish chain under the canonical ledger). Moves both sides of the
  /// fork to pre-fork and settles them once honest blocks can no longer be
  /// acceptable. The caller sets c and fork.
  Outcome<UbState> reveal_longer(const UbState& s, int l) const {
    UbState n = s;
    Outcome<UbState> o;
    o.reward = claim(l - s.c, n.pool);
    n.ad = static_cast<std::uint8_t>(s.ad + l);
    n.ac = static_cast<std::uint8_t>(s.ac - l);
    n.hd = static_cast<std::uint8_t>(s.hd + s.hc.length);
    n.hc = {};
    if (!s.p || n.ad + n.hd > p_.fork_sensitivity) {
      o.reward += n.ad;
      o.difficulty = n.ad;
      n.p = false;
      n.ad = n.hd = 0;
    }
    if (n.ad < n.hd) throw std::logic_error("pre-fork selfish blocks fell below honest ones");
    o.next = n;
    return o;
  }

  /// MAD tie won by the selfish chain: its first |h_c| blocks become
  /// canonical. Both sides of the tie are destructed, so no fees are paid
  /// and the public chain's whales return to the pool.
  Outcome<UbState> claim_tie(const UbState& s) const {
    UbState n = s;
    Outcome<UbState> o;
    n.c = static_cast<std::uint8_t>(s.hc.length);
    n.hc.whales = 0;
    o.next = n;
    return o;
  }

  std::optional<Outcome<UbState>> reveal_tie(const UbState& s) const {
    const int h = s.hc.length;
    const bool worst = p_.tie_break == TieBreak::kWorstCase;
    Outcome<UbState> o;
    if (p_.ledger == Ledger::kCanonical) {
      if (worst) {
        o = reveal_longer(s, h);
        o.next.c = 0;
        o.next.fork = Fork::kIrrelevant;
      } else {
        if (!tie_allowed(s.fork)) return std::nullopt;
        o.next = s;
        o.next.fork = Fork::kActive;
      }
    } else if (worst) {
      o = claim_tie(s);
    } else if (s.hc.tx() > 0) {
      o.next = s;
      o.next.hc.whales = 0;
    } else {
      if (!tie_allowed(s.fork)) return std::nullopt;
      o.next = s;
      o.next.fork = Fork::kActive;
    }
    o.next = canon(o.next);
    if (o.next == s && o.reward == 0.0 && o.difficulty == 0.0) return std::nullopt;  // no-op
    return o;
  }

  UbState canon(const UbState& s) const {
    auto c = canonicalize_state(s, p_);
    if (!c) throw MdpError("model generated an infeasible state");
    return *c;
  }

  ModelParams p_;
  int len_bits_;
  int pre_bits_;
  int pool_bits_;
};

inline Mdp build_ub_model(const ModelParams& p) {
  const UbModel model(p);
  return explore(model, model.initial());
}

}  // namespace dagsm
