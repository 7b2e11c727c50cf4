#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dagsm {

enum class ModelKind { kNc, kFull, kUpperBound };
enum class TieBreak { kFirstHeard, kRandom, kWorstCase };
enum class DifficultySource { kUncontested, kCanonical };
enum class Ledger { kCanonical, kMad };

class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// CSV / CLI vocabulary. Index order matches the enum order.
inline constexpr std::array<std::string_view, 3> kModelNames{"bitcoin_fee", "chain_colordag", "simplified_colordag"};
inline constexpr std::array<std::string_view, 3> kTieBreakNames{"first_heard", "random", "attacker"};
inline constexpr std::array<std::string_view, 2> kDifficultyNames{"uncontested", "main"};
inline constexpr std::array<std::string_view, 2> kLedgerNames{"longest", "mad"};

template <class E, std::size_t N>
E parse_enum(std::string_view text, const std::array<std::string_view, N>& names, std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<E>(i);
  }
  std::string allowed;
  for (auto n : names) allowed += (allowed.empty() ? "" : ", ") + std::string(n);
  throw ParamError("invalid " + std::string(what) + " '" + std::string(text) + "' (expected one of: " + allowed + ")");
}

inline ModelKind parse_model(std::string_view s) { return parse_enum<ModelKind>(s, kModelNames, "model"); }
inline TieBreak parse_tie_break(std::string_view s) { return parse_enum<TieBreak>(s, kTieBreakNames, "tie_break_mode"); }
inline DifficultySource parse_difficulty(std::string_view s) {
  return parse_enum<DifficultySource>(s, kDifficultyNames, "difficulty_source");
}
inline Ledger parse_ledger(std::string_view s) { return parse_enum<Ledger>(s, kLedgerNames, "ledger_function"); }

inline std::string_view name(ModelKind m) { return kModelNames[static_cast<int>(m)]; }
inline std::string_view name(TieBreak t) { return kTieBreakNames[static_cast<int>(t)]; }
inline std::string_view name(DifficultySource d) { return kDifficultyNames[static_cast<int>(d)]; }
inline std::string_view name(Ledger l) { return kLedgerNames[static_cast<int>(l)]; }

/// Every protocol, adversary and model-size parameter of one instance.
struct ModelParams {
  ModelKind model = ModelKind::kNc;
  double alpha = 0.25;
  double gamma = 0.0;           // rushing factor, used with first_heard only
  double delta = 0.0;           // whale arrivals per block
  double whale_fee = 0.0;       // F
  double guaranteed_fee = 0.0;  // f
  int fork_sensitivity = 15;    // N_l
  int max_fork = 10;            // L
  int max_pool = 2;
  TieBreak tie_break = TieBreak::kFirstHeard;
  DifficultySource difficulty_source = DifficultySource::kUncontested;
  Ledger ledger = Ledger::kCanonical;

  void check() const {
    auto fail = [](const std::string& m) { throw ParamError(m); };
    if (!(alpha > 0.0 && alpha <= 0.5)) fail("alpha must lie in (0, 0.5]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma must lie in [0, 1]");
    if (!(delta >= 0.0 && delta < 1.0)) fail("delta must lie in [0, 1)");
    if (!(whale_fee >= 0.0) || !std::isfinite(whale_fee)) fail("whale fee must be nonnegative");
    if (!(guaranteed_fee >= 0.0) || !std::isfinite(guaranteed_fee)) fail("guaranteed fee must be nonnegative");
    if (fork_sensitivity < 1 || fork_sensitivity > 31) fail("fork sensitivity must lie in [1, 31]");
    if (max_fork < 1 || max_fork > (model == ModelKind::kFull ? 5 : 20)) {
      fail(model == ModelKind::kFull ? "max fork must lie in [1, 5] for the full model" : "max fork must lie in [1, 20]");
    }
    if (max_pool < 1 || max_pool > 15) fail("max pool must lie in [1, 15]");
  }

  /// Probability that an honest miner extends the selfish side of a tie
  /// that is currently being raced.
  double tie_gamma() const {
    switch (tie_break) {
      case TieBreak::kFirstHeard: return gamma;
      case TieBreak::kRandom: return 0.5;
      case TieBreak::kWorstCase: return 1.0;
    }
    return gamma;
  }

  /// Copy with the fields the selected model ignores set to fixed values,
  /// so equal instances compare and hash equal.
  ModelParams normalized() const {
    ModelParams p = *this;
    if (p.tie_break != TieBreak::kFirstHeard) p.gamma = 0.0;
    if (p.delta == 0.0) p.whale_fee = 0.0;
    if (p.model == ModelKind::kNc) {
      p.fork_sensitivity = 0;
      p.difficulty_source = DifficultySource::kCanonical;
      p.ledger = Ledger::kCanonical;
    }
    return p;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "model=" << name(model) << " tie_break=" << name(tie_break) << " difficulty=" << name(difficulty_source)
       << " ledger=" << name(ledger) << " alpha=" << alpha << " gamma=" << gamma << " delta=" << delta
       << " F=" << whale_fee << " f=" << guaranteed_fee << " N=" << fork_sensitivity << " L=" << max_fork
       << " max_pool=" << max_pool;
    return os.str();
  }
};

}  // namespace dagsm
