#include <gtest/gtest.h>

#include <map>

#include "dagsm/analysis.hpp"
#include "dagsm/models.hpp"
#include "dagsm/ratio_oracle.hpp"

namespace dagsm {
namespace {

template <class State>
const ActionSpec<State>* find_action(const std::vector<ActionSpec<State>>& acts, ActionKind kind, int arg) {
  for (const auto& a : acts) {
    if (a.label.kind == kind && a.label.arg == arg) return &a;
  }
  return nullptr;
}

Chain chain(std::initializer_list<int> whales) {
  Chain c;
  for (int w : whales) {
    if (w) c.whales |= 1u << c.length;
    ++c.length;
  }
  return c;
}

ModelParams nc_params() {
  ModelParams p;
  p.model = ModelKind::kNc;
  p.alpha = 0.3;
  p.max_fork = 4;
  return p;
}

TEST(NcModel, InitialWaitSplitsBetweenMiners) {
  const NcModel m(nc_params());
  std::vector<ActionSpec<NcState>> acts;
  m.actions(m.initial(), acts);
  ASSERT_EQ(acts.size(), 1u);
  const auto* wait = find_action(acts, ActionKind::kWait, 0);
  ASSERT_NE(wait, nullptr);
  EXPECT_TRUE(wait->honest);
  ASSERT_EQ(wait->outcomes.size(), 2u);
  EXPECT_DOUBLE_EQ(wait->outcomes[0].prob, 0.3);
  EXPECT_EQ(wait->outcomes[0].next, (NcState{chain({0}), {}, Fork::kIrrelevant, 0}));
  EXPECT_DOUBLE_EQ(wait->outcomes[1].prob, 0.7);
  // fork=relevant with |a| < |h| has the irrelevant state as representative
  EXPECT_EQ(wait->outcomes[1].next, (NcState{{}, chain({0}), Fork::kIrrelevant, 0}));
}

TEST(NcModel, AdoptOneResets) {
  const NcModel m(nc_params());
  std::vector<ActionSpec<NcState>> acts;
  m.actions({{}, chain({0}), Fork::kRelevant, 0}, acts);
  const auto* adopt = find_action(acts, ActionKind::kAdopt, 1);
  ASSERT_NE(adopt, nullptr);
  ASSERT_EQ(adopt->outcomes.size(), 1u);
  EXPECT_EQ(adopt->outcomes[0].reward, 0.0);
  EXPECT_EQ(adopt->outcomes[0].difficulty, 1.0);
  EXPECT_EQ(adopt->outcomes[0].next, m.initial());
}

TEST(NcModel, RevealLongerPaysSubsidyAndFees) {
  auto p = nc_params();
  p.delta = 0.01;
  p.whale_fee = 3.0;
  p.guaranteed_fee = 0.25;
  const NcModel m(p);
  std::vector<ActionSpec<NcState>> acts;
  m.actions({chain({1, 0}), chain({0}), Fork::kIrrelevant, 1}, acts);
  const auto* reveal = find_action(acts, ActionKind::kReveal, 2);
  ASSERT_NE(reveal, nullptr);
  EXPECT_TRUE(reveal->honest);
  const auto& o = reveal->outcomes.at(0);
  EXPECT_DOUBLE_EQ(o.reward, 2.0 + 3.0 + 2 * 0.25);
  EXPECT_EQ(o.difficulty, 2.0);
  EXPECT_EQ(o.next.pool, 0);
  EXPECT_TRUE(o.next.a.empty());
  EXPECT_TRUE(o.next.h.empty());
}

TEST(NcModel, TieNeedsRelevantForkUnderFirstHeard) {
  auto p = nc_params();
  p.gamma = 0.5;
  const NcModel m(p);
  std::vector<ActionSpec<NcState>> acts;
  m.actions({chain({0}), chain({0}), Fork::kRelevant, 0}, acts);
  const auto* tie = find_action(acts, ActionKind::kReveal, 1);
  ASSERT_NE(tie, nullptr);
  EXPECT_EQ(tie->outcomes.at(0).next.fork, Fork::kActive);
  acts.clear();
  m.actions({chain({0}), chain({0}), Fork::kIrrelevant, 0}, acts);
  EXPECT_EQ(find_action(acts, ActionKind::kReveal, 1), nullptr);
}

TEST(NcModel, ActiveForkWaitHasThreeBranches) {
  auto p = nc_params();
  p.gamma = 0.4;
  const NcModel m(p);
  std::vector<ActionSpec<NcState>> acts;
  m.actions({chain({0, 0}), chain({0}), Fork::kActive, 0}, acts);
  const auto* wait = find_action(acts, ActionKind::kWait, 0);
  ASSERT_NE(wait, nullptr);
  ASSERT_EQ(wait->outcomes.size(), 3u);
  EXPECT_DOUBLE_EQ(wait->outcomes[0].prob, 0.3);
  EXPECT_DOUBLE_EQ(wait->outcomes[1].prob, 0.6 * 0.7);
  EXPECT_DOUBLE_EQ(wait->outcomes[2].prob, 0.4 * 0.7);
  EXPECT_DOUBLE_EQ(wait->outcomes[2].reward, 1.0);
  EXPECT_EQ(wait->outcomes[2].next, (NcState{chain({0}), chain({0}), Fork::kRelevant, 0}));
}

TEST(NcModel, NoWaitAtCap) {
  auto p = nc_params();
  p.max_fork = 2;
  const NcModel m(p);
  std::vector<ActionSpec<NcState>> acts;
  m.actions({chain({0, 0}), {}, Fork::kIrrelevant, 0}, acts);
  EXPECT_EQ(find_action(acts, ActionKind::kWait, 0), nullptr);
}

struct PoolOnly {
  std::uint8_t pool = 0;
  int tag = 0;
};

TEST(WhaleArrival, NoArrivalsLeavesOutcomes) {
  std::vector<Outcome<PoolOnly>> out{{{0, 1}, 1.0, 0, 0, true}};
  whale_arrival_expansion(out, PoolOnly{}, 0.0, 2, [](PoolOnly& s) -> std::uint8_t& { return s.pool; });
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].prob, 1.0);
}

TEST(WhaleArrival, TwinCarriesNormalizedArrivalMass) {
  std::vector<Outcome<PoolOnly>> out{{{0, 1}, 1.0, 2.0, 1.0, true}};
  whale_arrival_expansion(out, PoolOnly{0, 7}, 0.01, 2, [](PoolOnly& s) -> std::uint8_t& { return s.pool; });
  ASSERT_EQ(out.size(), 2u);
  EXPECT_DOUBLE_EQ(out[0].prob, 1.0 / 1.01);
  EXPECT_DOUBLE_EQ(out[1].prob, 0.01 / 1.01);
  EXPECT_EQ(out[1].next.pool, 1);
  EXPECT_EQ(out[1].next.tag, 7);  // the interrupt returns to the source state
  EXPECT_EQ(out[1].reward, 0.0);
  EXPECT_EQ(out[1].difficulty, 0.0);
}

TEST(WhaleArrival, FullPoolDiscardsArrival) {
  std::vector<Outcome<PoolOnly>> out{{{2, 1}, 1.0, 0, 0, true}};
  whale_arrival_expansion(out, PoolOnly{2, 0}, 0.01, 2, [](PoolOnly& s) -> std::uint8_t& { return s.pool; });
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].prob, 1.0);
}

TEST(WhaleArrival, OnlyBlockAddingOutcomesSpawnArrivals) {
  std::vector<Outcome<PoolOnly>> out{{{0, 1}, 0.5, 0, 0, true}, {{0, 2}, 0.5, 0, 0, false}};
  whale_arrival_expansion(out, PoolOnly{}, 0.2, 3, [](PoolOnly& s) -> std::uint8_t& { return s.pool; });
  ASSERT_EQ(out.size(), 3u);
  EXPECT_DOUBLE_EQ(out[0].prob, 0.5 / 1.1);
  EXPECT_DOUBLE_EQ(out[1].prob, 0.5 / 1.1);
  EXPECT_DOUBLE_EQ(out[2].prob, 0.1 / 1.1);
  EXPECT_NEAR(out[0].prob + out[1].prob + out[2].prob, 1.0, 1e-15);
}

TEST(Canonicalize, PublicWhalesBeyondPoolAreInfeasible) {
  EXPECT_FALSE(canonicalize_state(NcState{{}, chain({1, 1}), Fork::kRelevant, 1}, nc_params()).has_value());
}

TEST(Canonicalize, ForkIgnoredWhenSecretChainIsShorter) {
  const auto p = nc_params();
  const auto rel = canonicalize_state(NcState{chain({0}), chain({0, 0}), Fork::kRelevant, 0}, p);
  const auto irr = canonicalize_state(NcState{chain({0}), chain({0, 0}), Fork::kIrrelevant, 0}, p);
  ASSERT_TRUE(rel && irr);
  EXPECT_EQ(*rel, *irr);
}

TEST(Canonicalize, InitialStateIsItsOwnRepresentative) {
  EXPECT_EQ(canonicalize_state(NcState{}, nc_params()), NcState{});
  ModelParams p = nc_params();
  p.model = ModelKind::kUpperBound;
  EXPECT_EQ(canonicalize_state(UbState{}, p), UbState{});
  p.model = ModelKind::kFull;
  EXPECT_EQ(canonicalize_state(FullState{}, p), FullState{});
}

ModelParams ub_params() {
  ModelParams p;
  p.model = ModelKind::kUpperBound;
  p.alpha = 0.3;
  p.max_fork = 3;
  p.fork_sensitivity = 5;
  return p;
}

TEST(UbModel, AdoptFromEmptyPrefixYieldsOnlyDifficulty) {
  auto p = ub_params();
  p.ledger = Ledger::kMad;
  p.difficulty_source = DifficultySource::kCanonical;
  const UbModel m(p);
  UbState s;
  s.hc = chain({0, 0});
  std::vector<ActionSpec<UbState>> acts;
  m.actions(s, acts);
  for (int l : {1, 2}) {
    const auto* adopt = find_action(acts, ActionKind::kAdopt, l);
    ASSERT_NE(adopt, nullptr);
    EXPECT_EQ(adopt->outcomes.at(0).reward, 0.0);
    EXPECT_EQ(adopt->outcomes.at(0).difficulty, double(l));
  }
}

TEST(UbModel, RevealLongerSettlesPrefixWithoutPotential) {
  auto p = ub_params();
  p.delta = 0.01;
  p.whale_fee = 2.0;
  p.guaranteed_fee = 0.5;
  const UbModel m(p);
  UbState s;
  s.ad = 1;
  s.hd = 1;
  s.ac = 2;
  s.hc = chain({0});
  s.pool = 1;
  s.p = false;
  std::vector<ActionSpec<UbState>> acts;
  m.actions(s, acts);
  const auto* reveal = find_action(acts, ActionKind::kReveal, 2);
  ASSERT_NE(reveal, nullptr);
  const auto& o = reveal->outcomes.at(0);
  // Fee claim 2f + F, then the shifted prefix a_d = 3 settles.
  EXPECT_DOUBLE_EQ(o.reward, 2 * 0.5 + 2.0 + 3.0);
  EXPECT_DOUBLE_EQ(o.difficulty, 3.0);
  EXPECT_EQ(o.next.ad, 0);
  EXPECT_EQ(o.next.hd, 0);
  EXPECT_EQ(o.next.pool, 0);
}

TEST(UbModel, ActiveForkMineSplitsThreeWays) {
  auto p = ub_params();
  p.gamma = 0.25;
  const UbModel m(p);
  UbState s;
  s.ac = 1;
  s.hc = chain({0});
  s.fork = Fork::kActive;
  std::vector<ActionSpec<UbState>> acts;
  m.actions(s, acts);
  const auto* mine = find_action(acts, ActionKind::kMine, 0);
  ASSERT_NE(mine, nullptr);
  ASSERT_EQ(mine->outcomes.size(), 3u);
  EXPECT_DOUBLE_EQ(mine->outcomes[0].prob, 0.3);
  EXPECT_DOUBLE_EQ(mine->outcomes[1].prob, 0.75 * 0.7);
  EXPECT_DOUBLE_EQ(mine->outcomes[2].prob, 0.25 * 0.7);
}

TEST(UbModel, MadTieWonBySelfishChainPaysNoFees) {
  auto p = ub_params();
  p.ledger = Ledger::kMad;
  p.tie_break = TieBreak::kRandom;
  p.delta = 0.01;
  p.whale_fee = 8.0;
  p.guaranteed_fee = 0.5;
  const UbModel m(p);
  UbState s;
  s.ac = 1;
  s.hc = chain({0});
  s.fork = Fork::kActive;
  s.pool = 1;
  std::vector<ActionSpec<UbState>> acts;
  m.actions(s, acts);
  const auto* mine = find_action(acts, ActionKind::kMine, 0);
  ASSERT_NE(mine, nullptr);
  const auto won = std::find_if(mine->outcomes.begin(), mine->outcomes.end(), [](const auto& o) { return o.next.c == 1; });
  ASSERT_NE(won, mine->outcomes.end());
  EXPECT_EQ(won->reward, 0.0);
  EXPECT_EQ(won->next.pool, 1);  // the destructed content stays claimable

  // worst case: revealing the tie makes the selfish block canonical, still unpaid
  p.tie_break = TieBreak::kWorstCase;
  const UbModel worst(p);
  s.fork = Fork::kIrrelevant;
  s.hc = chain({1});
  acts.clear();
  worst.actions(s, acts);
  const auto* reveal = find_action(acts, ActionKind::kReveal, 1);
  ASSERT_NE(reveal, nullptr);
  EXPECT_EQ(reveal->outcomes.at(0).reward, 0.0);
  EXPECT_EQ(reveal->outcomes.at(0).next.c, 1);
  EXPECT_EQ(reveal->outcomes.at(0).next.hc.tx(), 0);
}

ModelParams full_params() {
  ModelParams p;
  p.model = ModelKind::kFull;
  p.alpha = 0.3;
  p.max_fork = 3;
  p.fork_sensitivity = 15;
  return p;
}

FullState full_state(int selfish, int honest) {
  FullState s;
  s.alen = static_cast<std::uint8_t>(selfish);
  s.hlen = static_cast<std::uint8_t>(honest);
  return s;
}

TEST(FullModel, MergeCountsOnlyUncontestedDifficulty) {
  auto p = full_params();
  auto s = full_state(1, 2);
  s.r = 1;
  const auto unc = merge_settlement(s, p);
  EXPECT_EQ(unc.reward, 0.0);
  EXPECT_EQ(unc.difficulty, 1.0);
  p.difficulty_source = DifficultySource::kCanonical;
  const auto canon = merge_settlement(s, p);
  EXPECT_EQ(canon.reward, 0.0);
  EXPECT_EQ(canon.difficulty, 2.0);
}

TEST(FullModel, UnrevealedBlocksDoNotContest) {
  const auto s = full_state(1, 2);
  const auto out = merge_settlement(s, full_params());
  EXPECT_EQ(out.difficulty, 2.0);
}

// Two selfish blocks (one whale) tie two honest blocks; a third honest block
// references both tips and the tie went to the selfish side.
FullState two_vs_two() {
  auto s = full_state(2, 3);
  s.a[0].whale = true;
  s.h[2].ref = 2;
  s.r = 2;
  s.c = 2;
  s.pool = 1;
  return s;
}

TEST(FullModel, TieWonBySelfishChainPaysFeesUnderCanonicalLedger) {
  auto p = full_params();
  p.delta = 0.01;
  p.whale_fee = 2.0;
  p.guaranteed_fee = 0.5;
  const auto out = merge_settlement(two_vs_two(), p);
  EXPECT_DOUBLE_EQ(out.reward, 2 * 0.5 + 2.0);  // contested, so no subsidy
  EXPECT_EQ(out.ledger_whales, 1);
  EXPECT_EQ(out.difficulty, 1.0);
}

TEST(FullModel, TieWonBySelfishChainIsDestructedUnderMad) {
  auto p = full_params();
  p.delta = 0.01;
  p.whale_fee = 2.0;
  p.guaranteed_fee = 0.5;
  p.ledger = Ledger::kMad;
  const auto out = merge_settlement(two_vs_two(), p);
  EXPECT_EQ(out.reward, 0.0);
  EXPECT_EQ(out.ledger_whales, 0);
}

TEST(FullModel, SmallForkSensitivityMakesLosingBranchUnacceptable) {
  auto p = full_params();
  p.fork_sensitivity = 1;
  auto s = full_state(1, 2);
  s.r = 1;
  EXPECT_EQ(merge_settlement(s, p).difficulty, 2.0);
}

TEST(FullModel, HonestBlockReferencesRevealedSelfishBlock) {
  auto p = full_params();
  p.tie_break = TieBreak::kRandom;
  const FullModel m(p);
  auto s = full_state(1, 1);
  s.r = 1;
  std::vector<ActionSpec<FullState>> acts;
  m.actions(s, acts);
  const auto* mine = find_action(acts, ActionKind::kMine, 0);
  ASSERT_NE(mine, nullptr);
  // Selfish block, then the two honest tie choices.
  ASSERT_EQ(mine->outcomes.size(), 3u);
  EXPECT_DOUBLE_EQ(mine->outcomes[1].prob, 0.35);
  EXPECT_DOUBLE_EQ(mine->outcomes[2].prob, 0.35);
  EXPECT_EQ(mine->outcomes[1].next.h[1].ref, 1);
  EXPECT_EQ(mine->outcomes[1].next.c, 0);
  EXPECT_EQ(mine->outcomes[2].next.c, 1);
}

TEST(FullModel, MineReferenceMustNotBeRelatedToTip) {
  const FullModel m(full_params());
  auto s = full_state(1, 2);
  s.a[0].ref = 1;  // selfish tip already references h1
  std::vector<ActionSpec<FullState>> acts;
  m.actions(s, acts);
  EXPECT_EQ(find_action(acts, ActionKind::kMine, 1), nullptr);
  EXPECT_NE(find_action(acts, ActionKind::kMine, 2), nullptr);
}

TEST(FullModel, DestructedWhaleCanBeIncludedAgain) {
  auto p = full_params();
  p.delta = 0.01;
  p.whale_fee = 1.0;
  p.tie_break = TieBreak::kRandom;
  p.ledger = Ledger::kMad;
  const FullModel m(p);
  auto s = full_state(1, 1);
  s.a[0].whale = true;
  s.h[0].whale = true;
  s.r = 1;
  s.pool = 1;
  std::vector<ActionSpec<FullState>> acts;
  m.actions(s, acts);
  const auto* mine = find_action(acts, ActionKind::kMine, 0);
  ASSERT_NE(mine, nullptr);
  EXPECT_TRUE(mine->outcomes[1].next.h[1].whale);
  p.ledger = Ledger::kCanonical;
  const FullModel canon(p);
  acts.clear();
  canon.actions(s, acts);
  const auto* canon_mine = find_action(acts, ActionKind::kMine, 0);
  ASSERT_NE(canon_mine, nullptr);
  EXPECT_FALSE(canon_mine->outcomes[1].next.h[1].whale);
}

// Every parameter mode combination on small instances.
std::vector<ModelParams> mode_grid(ModelKind model, int max_fork, double delta) {
  std::vector<ModelParams> out;
  for (auto tie : {TieBreak::kFirstHeard, TieBreak::kRandom, TieBreak::kWorstCase}) {
    for (auto diff : {DifficultySource::kUncontested, DifficultySource::kCanonical}) {
      for (auto ledger : {Ledger::kCanonical, Ledger::kMad}) {
        if (model == ModelKind::kNc && (diff != DifficultySource::kUncontested || ledger != Ledger::kCanonical)) continue;
        ModelParams p;
        p.model = model;
        p.alpha = 0.3;
        p.gamma = 0.5;
        p.delta = delta;
        p.whale_fee = 2.0;
        p.guaranteed_fee = 0.5;
        p.max_fork = max_fork;
        p.fork_sensitivity = 5;
        p.tie_break = tie;
        p.difficulty_source = diff;
        p.ledger = ledger;
        out.push_back(p);
      }
    }
  }
  return out;
}

std::vector<ModelParams> all_small_instances() {
  std::vector<ModelParams> out;
  for (double delta : {0.0, 0.01}) {
    for (auto [model, l] : {std::pair{ModelKind::kNc, 4}, {ModelKind::kFull, 2}, {ModelKind::kUpperBound, 3}}) {
      auto g = mode_grid(model, l, delta);
      out.insert(out.end(), g.begin(), g.end());
    }
  }
  return out;
}

TEST(ChainModels, EveryModelPassesStructuralChecks) {
  for (const auto& p : all_small_instances()) {
    SCOPED_TRACE(p.describe());
    const Mdp mdp = build_model(p);
    EXPECT_NO_THROW(validate(mdp));
    EXPECT_NO_THROW(validate_for_pto(mdp));
    for (StateId s = 0; s < mdp.num_states(); ++s) EXPECT_GE(mdp.honest_action(s), 0);
  }
}

TEST(ChainModels, HonestPolicyEarnsClosedFormUtility) {
  for (const auto& p : all_small_instances()) {
    SCOPED_TRACE(p.describe());
    const Mdp mdp = build_model(p);
    EXPECT_NEAR(ratio_value_oracle(mdp, default_policy(mdp)), honest_utility(p), 1e-6);
  }
}

template <class Model, class State>
struct Recorder {
  const Model& model;
  std::map<std::uint64_t, State>& seen;
  std::uint64_t key(const State& s) const {
    const auto k = model.key(s);
    auto [it, fresh] = seen.emplace(k, s);
    EXPECT_TRUE(fresh || it->second == s) << "two states share a key";
    return k;
  }
  void actions(const State& s, std::vector<ActionSpec<State>>& out) const { model.actions(s, out); }
};

template <class Model, class State>
void expect_closed_under_canonicalization(const ModelParams& p) {
  const Model model(p);
  std::map<std::uint64_t, State> seen;
  const Recorder<Model, State> rec{model, seen};
  const Mdp mdp = explore(rec, model.initial());
  EXPECT_EQ(seen.size(), mdp.num_states());
  for (const auto& [k, s] : seen) {
    const auto c = canonicalize_state(s, p);
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(*c, s);
  }
}

TEST(ChainModels, ReachableStatesAreCanonical) {
  for (double delta : {0.0, 0.01}) {
    for (const auto& p : mode_grid(ModelKind::kNc, 4, delta)) expect_closed_under_canonicalization<NcModel, NcState>(p);
    for (const auto& p : mode_grid(ModelKind::kUpperBound, 3, delta)) {
      expect_closed_under_canonicalization<UbModel, UbState>(p);
    }
    for (const auto& p : mode_grid(ModelKind::kFull, 2, delta)) {
      expect_closed_under_canonicalization<FullModel, FullState>(p);
    }
  }
}

TEST(ChainModels, StateOrderFollowsKeys) {
  const Mdp mdp = build_model(mode_grid(ModelKind::kUpperBound, 3, 0.01).front());
  for (StateId s = 1; s < mdp.num_states(); ++s) EXPECT_LT(mdp.state_key(s - 1), mdp.state_key(s));
}

TEST(ChainModels, BuildsAreDeterministic) {
  for (const auto& p : mode_grid(ModelKind::kFull, 2, 0.01)) {
    const Mdp a = build_model(p), b = build_model(p);
    ASSERT_EQ(a.num_states(), b.num_states());
    ASSERT_EQ(a.num_transitions(), b.num_transitions());
    for (std::size_t i = 0; i < a.num_transitions(); ++i) {
      const auto &x = a.all_transitions()[i], &y = b.all_transitions()[i];
      EXPECT_EQ(x.next, y.next);
      EXPECT_EQ(x.prob, y.prob);
      EXPECT_EQ(x.reward, y.reward);
      EXPECT_EQ(x.difficulty, y.difficulty);
    }
  }
}

TEST(ChainModels, UpperBoundDominatesFullModel) {
  for (double delta : {0.0, 0.01}) {
    for (auto p : mode_grid(ModelKind::kFull, 2, delta)) {
      for (double alpha : {0.2, 0.35, 0.45}) {
        p.alpha = alpha;
        p.model = ModelKind::kFull;
        const double full = optimal_revenue(p).policy_ratio;
        p.model = ModelKind::kUpperBound;
        const double ub = optimal_revenue(p).policy_ratio;
        EXPECT_GE(ub, full - 1e-4) << p.describe();
      }
    }
  }
}

TEST(ChainModels, SolvedRatioIsMonotoneInAlphaAndWhaleFee) {
  for (auto model : {ModelKind::kNc, ModelKind::kUpperBound}) {
    auto p = mode_grid(model, 4, 0.01).front();
    double prev = 0.0;
    for (double alpha = 0.05; alpha < 0.5; alpha += 0.05) {
      p.alpha = alpha;
      const double rho = optimal_revenue(p).policy_ratio;
      EXPECT_GE(rho, prev - 1e-7) << p.describe();
      prev = rho;
    }
    p.alpha = 0.3;
    prev = 0.0;
    for (double fee : {0.0, 1.0, 2.0, 4.0, 8.0}) {
      p.whale_fee = fee;
      const double rho = optimal_revenue(p).policy_ratio;
      EXPECT_GE(rho, prev - 1e-7) << p.describe();
      prev = rho;
    }
  }
}

TEST(ChainModels, NakamotoSmallMinerIsHonest) {
  ModelParams p;
  p.model = ModelKind::kNc;
  p.alpha = 0.1;
  p.max_fork = 10;
  EXPECT_NEAR(optimal_revenue(p).policy_ratio, 0.1, 1e-3);
}

TEST(ChainModels, NakamotoWorstCaseLargeMinerProfits) {
  ModelParams p;
  p.model = ModelKind::kNc;
  p.alpha = 0.45;
  p.tie_break = TieBreak::kWorstCase;
  p.max_fork = 10;
  EXPECT_GT(optimal_revenue(p).policy_ratio, 0.45);
}

TEST(ChainModels, ModelTooLargeIsReported) {
  ::setenv("DAGSM_MEMORY_BUDGET_MB", "1", 1);
  ModelParams p;
  p.model = ModelKind::kUpperBound;
  p.max_fork = 10;
  p.delta = 0.01;
  EXPECT_THROW(build_model(p), ModelTooLarge);
  ::unsetenv("DAGSM_MEMORY_BUDGET_MB");
}

}  // namespace
}  // namespace dagsm
