#pragma once

// Full DAG model. Every block since the last divergence is kept: selfish
// blocks with an optional reference into the public chain, honest blocks
// with an optional reference to a published selfish block. Merge settles
// the DAG through the block rules (canonical chain, acceptability,
// uncontested and destructed blocks).

#include <array>
#include <algorithm>
#include <optional>
#include <vector>

#include "dagsm/chain_bits.hpp"
#include "dagsm/dag_rules.hpp"
#include "dagsm/explore.hpp"
#include "dagsm/params.hpp"

namespace dagsm {

inline constexpr int kMaxFullFork = 5;

struct FullBlock {
  bool whale = false;
  std::uint8_t ref = 0;  // 1-based index into the other chain, 0 = none

  friend bool operator==(const FullBlock&, const FullBlock&) = default;
};

struct FullState {
  std::array<FullBlock, kMaxFullFork> a{};
  std::array<FullBlock, kMaxFullFork> h{};
  std::uint8_t alen = 0;
  std::uint8_t hlen = 0;
  Fork fork = Fork::kIrrelevant;
  std::uint8_t r = 0;  // published selfish blocks
  std::uint8_t c = 0;  // last selfish block preferred by an honest tie choice
  std::uint8_t pool = 0;

  friend bool operator==(const FullState&, const FullState&) = default;
};

inline std::optional<FullState> canonicalize_state(FullState s, const ModelParams& p) {
  if (s.alen > p.max_fork || s.hlen > p.max_fork || s.pool > p.max_pool) return std::nullopt;
  if (s.r > s.alen || s.c > s.r) return std::nullopt;
  for (int i = s.alen; i < kMaxFullFork; ++i) s.a[i] = {};
  for (int j = s.hlen; j < kMaxFullFork; ++j) s.h[j] = {};
  if (p.tie_break != TieBreak::kFirstHeard && s.fork == Fork::kRelevant) s.fork = Fork::kIrrelevant;
  return s;
}

namespace detail {

/// Reference structure of a full-model state. Node 0 is the last
/// divergence, nodes 1..|a| the selfish blocks, then the honest blocks.
class FullView {
 public:
  explicit FullView(const FullState& s) : s_(s), n_(1 + s.alen + s.hlen) {
    // References cross between the chains, so node order is not topological.
    std::array<bool, 1 + 2 * kMaxFullFork> done{};
    done[0] = true;
    auto visit = [&](auto&& self, int v) -> void {
      if (done[v]) return;
      for (auto p : raw_parents(v)) {
        self(self, p);
        anc_[v] |= anc_[p] | (1u << p);
        heights_[v] = std::max(heights_[v], heights_[p] + 1);
      }
      done[v] = true;
    };
    for (int v = 1; v < n_; ++v) visit(visit, v);
  }

  int selfish(int i) const { return i; }                  // 1-based
  int honest(int j) const { return j == 0 ? 0 : s_.alen + j; }  // 1-based, 0 = root
  int selfish_tip() const { return s_.alen; }
  int honest_tip() const { return honest(s_.hlen); }
  bool is_selfish(int v) const { return v >= 1 && v <= s_.alen; }
  int index_in_chain(int v) const { return is_selfish(v) ? v : v - s_.alen; }
  bool whale(int v) const {
    if (v == 0) return false;
    return is_selfish(v) ? s_.a[v - 1].whale : s_.h[v - s_.alen - 1].whale;
  }
  bool is_ancestor(int x, int y) const { return (anc_[y] >> x) & 1u; }
  int height(int v) const { return heights_[v]; }
  std::uint32_t ancestors(int v) const { return anc_[v]; }

  /// Parents in preference order with references to ancestors of another
  /// parent dropped.
  std::vector<int> parents(int v) const {
    auto ps = raw_parents(v);
    return prune(ps);
  }

  std::vector<int> prune(const std::vector<int>& ps) const {
    std::vector<int> out;
    for (auto p : ps) {
      bool redundant = false;
      for (auto q : ps) redundant |= q != p && is_ancestor(p, q);
      if (!redundant) out.push_back(p);
    }
    return out;
  }

 private:
  std::vector<int> raw_parents(int v) const {
    if (v == 0) return {};
    if (is_selfish(v)) {
      std::vector<int> ps{v - 1};
      if (s_.a[v - 1].ref > 0) ps.push_back(honest(s_.a[v - 1].ref));
      return ps;
    }
    const int j = v - s_.alen;
    std::vector<int> ps{honest(j - 1)};
    if (s_.h[j - 1].ref > 0) ps.push_back(selfish(s_.h[j - 1].ref));
    return ps;
  }

  const FullState& s_;
  int n_;
  std::array<std::uint32_t, 1 + 2 * kMaxFullFork> anc_{};
  std::array<int, 1 + 2 * kMaxFullFork> heights_{};
};

/// Among equal-height parents of `from`, the one its chain continues
/// through: a selfish block keeps its own chain, an honest block takes a
/// selfish parent only if a tie choice made it canonical (index <= c).
template <class Node>
int preferred_parent(const FullView& v, int from, const std::vector<Node>& cands, int c, auto&& node_of) {
  if (v.is_selfish(from)) return 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const int n = node_of(cands[i]);
    if (v.is_selfish(n) && n <= c) return static_cast<int>(i);
  }
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (!v.is_selfish(node_of(cands[i]))) return static_cast<int>(i);
  }
  return 0;
}

/// Whales already in the ledger as seen from block x: those on the chain x
/// extends, without destructed blocks under the MAD ledger. Transactions of
/// destructed or non-canonical blocks may be included again.
inline int ledger_whales_seen(const FullView& v, int x, int c, bool mad) {
  std::vector<int> chain;
  for (int cur = x; cur != 0;) {
    const auto ps = v.parents(cur);
    int best = -1;
    for (auto p : ps) best = std::max(best, v.height(p));
    std::vector<int> cands;
    for (auto p : ps) {
      if (v.height(p) == best) cands.push_back(p);
    }
    cur = cands[preferred_parent(v, cur, cands, c, [](int n) { return n; })];
    if (cur != 0) chain.push_back(cur);
  }
  // Longest distance down to x, to find the blocks on maximum-length chains.
  const std::uint32_t past = v.ancestors(x);
  std::array<int, 1 + 2 * kMaxFullFork> down;
  down.fill(-1);
  down[x] = 0;
  for (int h = v.height(x); h > 0; --h) {
    for (int u = 0; u < 1 + 2 * kMaxFullFork; ++u) {
      if (down[u] < 0 || v.height(u) != h || (u != x && !((past >> u) & 1u))) continue;
      for (auto p : v.parents(u)) down[p] = std::max(down[p], down[u] + 1);
    }
  }
  int whales = 0;
  for (auto b : chain) {
    if (!v.whale(b)) continue;
    bool destructed = false;
    if (mad) {
      for (int u = 1; u < 1 + 2 * kMaxFullFork && !destructed; ++u) {
        destructed = u != b && down[u] >= 0 && v.height(u) == v.height(b) && v.height(u) + down[u] == v.height(x);
      }
    }
    whales += destructed ? 0 : 1;
  }
  return whales;
}

}  // namespace detail

/// Result of settling the DAG of a state: what the selfish miner earns, the
/// difficulty contribution and the whales leaving the pool.
struct MergeSettlement {
  double reward = 0.0;
  double difficulty = 0.0;
  int ledger_whales = 0;
};

/// Settles the published part of a full-model state through the block rules.
inline MergeSettlement merge_settlement(const FullState& s, const ModelParams& p) {
  const detail::FullView view(s);
  // Published nodes in an order where parents come first.
  std::vector<int> nodes{0};
  std::vector<char> placed(1 + s.alen + s.hlen, 0);
  placed[0] = 1;
  auto published = [&](int v) { return !view.is_selfish(v) || v <= s.r; };
  for (bool progress = true; progress;) {
    progress = false;
    for (int v = 1; v < static_cast<int>(placed.size()); ++v) {
      if (placed[v] || !published(v)) continue;
      bool ready = true;
      for (auto q : view.parents(v)) ready &= placed[q] != 0;
      if (!ready) continue;
      placed[v] = 1;
      nodes.push_back(v);
      progress = true;
    }
  }
  std::vector<BlockId> id_of(placed.size(), kNoBlock);
  BlockDag dag;
  for (auto v : nodes) {
    Block b;
    b.name = std::to_string(v);
    b.creator = view.is_selfish(v) ? Creator::kSelfish : Creator::kHonest;
    b.whale = view.whale(v);
    for (auto q : view.parents(v)) b.parents.push_back(id_of[q]);
    id_of[v] = dag.add(std::move(b));
  }
  auto node_of = [&](BlockId id) { return nodes[id]; };
  const bool worst = p.tie_break == TieBreak::kWorstCase;
  const Preference prefer = [&](BlockId from, const std::vector<BlockId>& cands) {
    if (from != kNoBlock) return cands[detail::preferred_parent(view, node_of(from), cands, s.c, node_of)];
    for (auto c : cands) {
      if (view.is_selfish(node_of(c)) == worst) return c;
    }
    return cands.front();
  };
  const auto chain = canonical_chain(dag, prefer);
  const auto acceptable = acceptable_blocks(dag, chain, p.fork_sensitivity);
  const auto uncontested = uncontested_blocks(dag, chain, acceptable);
  BlockSet destructed;
  if (p.ledger == Ledger::kMad) destructed = destructed_blocks(dag, chain);

  MergeSettlement out;
  for (std::size_t i = 1; i < chain.blocks.size(); ++i) {
    const auto b = chain.blocks[i];
    const bool unc = std::binary_search(uncontested.begin(), uncontested.end(), b);
    const bool in_ledger = !std::binary_search(destructed.begin(), destructed.end(), b);
    const bool selfish = dag.block(b).creator == Creator::kSelfish;
    const bool whale = dag.block(b).whale;
    if (p.difficulty_source == DifficultySource::kCanonical || unc) out.difficulty += 1.0;
    // A later tie choice can route the chain past a block that skipped a
    // whale, so cap the count at the pool.
    const bool paid_whale = in_ledger && whale && out.ledger_whales < s.pool;
    if (paid_whale) ++out.ledger_whales;
    if (!selfish) continue;
    if (unc) out.reward += 1.0;
    if (in_ledger) out.reward += p.guaranteed_fee + (paid_whale ? p.whale_fee : 0.0);
  }
  return out;
}

class FullModel {
 public:
  explicit FullModel(ModelParams p)
      : p_(p), len_bits_(bits_for(p.max_fork)), pool_bits_(bits_for(p.max_pool)) {
    p_.check();
  }

  std::uint64_t key(const FullState& s) const {
    KeyPacker k;
    k.put(s.alen, len_bits_);
    for (int i = 0; i < p_.max_fork; ++i) {
      k.put(s.a[i].whale, 1);
      k.put(s.a[i].ref, len_bits_);
    }
    k.put(s.hlen, len_bits_);
    for (int j = 0; j < p_.max_fork; ++j) {
      k.put(s.h[j].whale, 1);
      k.put(s.h[j].ref, len_bits_);
    }
    k.put(static_cast<unsigned>(s.fork), 2);
    k.put(s.r, len_bits_);
    k.put(s.c, len_bits_);
    k.put(s.pool, pool_bits_);
    return k.key();
  }

  void actions(const FullState& s, std::vector<ActionSpec<FullState>>& out) const {
    const detail::FullView view(s);
    const bool honest_reveal = s.r < s.alen;
    const bool published = s.r > 0 || s.hlen > 0;
    const bool honest_merge = !honest_reveal && published;

    for (int l = s.r + 1; l <= s.alen; ++l) {
      FullState n = s;
      n.r = static_cast<std::uint8_t>(l);
      out.push_back({{ActionKind::kReveal, static_cast<std::uint8_t>(l)}, honest_reveal && l == s.alen,
                     {{canon(n), 1.0, 0.0, 0.0, false}}});
    }

    if (s.alen < p_.max_fork && s.hlen < p_.max_fork) {
      for (int l = 0; l <= s.hlen; ++l) {
        if (l > 0) {
          const int tip = view.selfish_tip(), target = view.honest(l);
          if (s.alen == 0 || view.is_ancestor(target, tip) || view.is_ancestor(tip, target)) continue;
        }
        ActionSpec<FullState> mine{{ActionKind::kMine, static_cast<std::uint8_t>(l)},
                                   !honest_reveal && !honest_merge && l == 0, {}};
        add_selfish_outcome(s, l, mine.outcomes);
        add_honest_outcomes(s, view, mine.outcomes);
        whale_arrival_expansion(mine.outcomes, s, p_.delta, p_.max_pool, [](FullState& x) -> std::uint8_t& {
          return x.pool;
        });
        out.push_back(std::move(mine));
      }
    }

    if (published) {
      const auto settled = merge_settlement(s, p_);
      FullState n;
      n.pool = static_cast<std::uint8_t>(s.pool - settled.ledger_whales);
      out.push_back({{ActionKind::kMerge, 0}, honest_merge, {{canon(n), 1.0, settled.reward, settled.difficulty, false}}});
    }
  }

  FullState initial() const { return {}; }

 private:
  void add_selfish_outcome(const FullState& s, int l, std::vector<Outcome<FullState>>& out) const {
    FullState n = s;
    n.a[s.alen] = {false, static_cast<std::uint8_t>(l)};
    ++n.alen;
    n.fork = Fork::kIrrelevant;
    set_whale(n, n.a[s.alen], n.alen);
    out.push_back({canon(n), p_.alpha, 0.0, 0.0, true});
  }

  /// Honest miners extend the public tip and reference the last published
  /// selfish block unless it is already behind that tip. When both parents
  /// sit at the same height the tie rule picks which one they prefer.
  void add_honest_outcomes(const FullState& s, const detail::FullView& view,
                           std::vector<Outcome<FullState>>& out) const {
    const int tip = view.honest_tip();
    int ref = 0;
    if (s.r > 0 && !view.is_ancestor(view.selfish(s.r), tip)) ref = s.r;
    FullState n = s;
    n.h[s.hlen] = {false, static_cast<std::uint8_t>(ref)};
    ++n.hlen;
    n.fork = Fork::kRelevant;
    const double honest = 1.0 - p_.alpha;

    const bool tie = ref > 0 && !view.is_ancestor(tip, view.selfish(ref)) &&
                     view.height(tip) == view.height(view.selfish(ref));
    double g = 0.0;
    if (tie) {
      g = p_.tie_break == TieBreak::kFirstHeard ? (s.fork == Fork::kRelevant ? p_.gamma : 0.0) : p_.tie_gamma();
    }
    if (g < 1.0) {
      FullState keep = n;
      set_whale(keep, keep.h[s.hlen], keep.alen + keep.hlen);
      out.push_back({canon(keep), (1.0 - g) * honest, 0.0, 0.0, true});
    }
    if (g > 0.0) {
      n.c = static_cast<std::uint8_t>(ref);
      set_whale(n, n.h[s.hlen], n.alen + n.hlen);
      out.push_back({canon(n), g * honest, 0.0, 0.0, true});
    }
  }

  /// A new block carries a whale iff the pool holds one that is not yet in
  /// the ledger as the block sees it.
  void set_whale(const FullState& n, FullBlock& block, int node) const {
    const detail::FullView view(n);
    block.whale = detail::ledger_whales_seen(view, node, n.c, p_.ledger == Ledger::kMad) < n.pool;
  }

  FullState canon(const FullState& s) const {
    auto c = canonicalize_state(s, p_);
    if (!c) throw MdpError("model generated an infeasible state");
    return *c;
  }

  ModelParams p_;
  int len_bits_;
  int pool_bits_;
};

inline Mdp build_full_model(const ModelParams& p) {
  const FullModel model(p);
  return explore(model, model.initial());
}

}  // namespace dagsm
