// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Criterion names may be passed as arguments to
// run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dagsm/dag_rules.hpp"
#include "dagsm/models.hpp"
#include "dagsm/ratio_oracle.hpp"
#include "dagsm/sim.hpp"
#include "dagsm/sweep.hpp"

using namespace dagsm;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// In-process revenue memo so threshold searches that share probes solve once.
class Memo {
 public:
  double revenue(const ModelParams& p) {
    const auto key = cache_material("revenue", p, cfg_);
    if (auto it = seen_.find(key); it != seen_.end()) return it->second;
    const double r = optimal_revenue(p, cfg_).policy_ratio;
    seen_[key] = r;
    return r;
  }
  double threshold(const ModelParams& p) {
    return security_threshold(p, 1e-3, [this](const ModelParams& q) { return revenue(q); }, cfg_).threshold;
  }

 private:
  SolverConfig cfg_;
  std::map<std::string, double> seen_;
};

Memo& memo() {
  static Memo m;
  return m;
}

ModelParams nc(TieBreak t, double gamma = 0.0) {
  ModelParams p;
  p.model = ModelKind::kNc;
  p.tie_break = t;
  p.gamma = gamma;
  p.max_fork = 10;
  return p;
}

ModelParams dag(DifficultySource d, Ledger l, int n, TieBreak t, double gamma = 0.5) {
  ModelParams p;
  p.model = ModelKind::kUpperBound;
  p.difficulty_source = d;
  p.ledger = l;
  p.fork_sensitivity = n;
  p.max_fork = 10;
  p.tie_break = t;
  p.gamma = gamma;
  return p;
}

// --- criteria ---------------------------------------------------------------

Verdict dag_fixtures() {
  auto load = [](const std::string& name) {
    std::ifstream in(std::string(DAGSM_FIXTURE_DIR) + "/" + name);
    if (!in) throw std::runtime_error("missing fixture " + name);
    return parse_dag(in);
  };
  auto names = [](const BlockDag& d, const BlockSet& s) {
    std::vector<std::string> out;
    for (auto b : s) out.push_back(d.block(b).name);
    std::sort(out.begin(), out.end());
    return out;
  };
  auto off_canonical = [](const BlockDag& d, const BlockSet& keep) {
    BlockSet out;
    for (BlockId b = 0; b < d.size(); ++b) {
      if (!std::binary_search(keep.begin(), keep.end(), b)) out.push_back(b);
    }
    return out;
  };
  using V = std::vector<std::string>;
  std::vector<std::string> bad;

  const auto a = load("fig1a.dag");
  if (names(a, destructed_blocks(a, canonical_chain(a))) != V{"B2", "B3", "B4"}) bad.push_back("destructed tie");
  const auto b = load("fig1b.dag");
  if (!destructed_blocks(b, canonical_chain(b)).empty()) bad.push_back("destructed shorter branch");
  const auto c = load("fig1c.dag");
  for (int n : {5, 10, 15}) {
    const auto ch = canonical_chain(c);
    const auto contested = off_canonical(c, uncontested_blocks(c, ch, acceptable_blocks(c, ch, n)));
    if (names(c, contested) != V{"B2", "B2'", "B3", "B3'"}) bad.push_back(fmt("contested N=%d", n));
  }
  const auto d = load("fig1d.dag");
  for (int n : {1, 4}) {
    const auto ch = canonical_chain(d);
    if (names(d, off_canonical(d, acceptable_blocks(d, ch, n))) != V{"B2'", "B3'"}) {
      bad.push_back(fmt("unacceptable N=%d", n));
    }
  }
  if (!bad.empty()) {
    std::string s;
    for (auto& x : bad) s += x + "; ";
    return {false, s};
  }
  return {true, "destructed, contested and unacceptable sets exact"};
}

Verdict nc_worst_case_threshold() {
  const double t = memo().threshold(nc(TieBreak::kWorstCase));
  return {t <= 0.01, fmt("threshold %.4f (<= 0.01)", t)};
}

Verdict nc_rushing_threshold() {
  const double t = memo().threshold(nc(TieBreak::kFirstHeard, 0.5));
  return {std::abs(t - 0.25) <= 0.02, fmt("threshold %.4f (0.25 +- 0.02)", t)};
}

Verdict honest_baseline() {
  ModelParams p;
  p.alpha = 0.25;
  p.delta = 0.01;
  p.max_pool = 2;
  p.whale_fee = 2.0;
  const auto r = simulate_honest(p, 1'000'000, 20240601);
  const double q = whale_inclusion_rate(p.delta, p.max_pool);
  const double u = honest_utility(p);
  const double zq = std::abs(r.q - q) / r.q_se;
  const double zu = std::abs(r.revenue - u) / r.revenue_se;
  return {zq <= 3.0 && zu <= 3.0, fmt("q %.8f sim %.8f (%.2f SE); utility %.6f sim %.6f (%.2f SE)", q, r.q, zq, u,
                                       r.revenue, zu)};
}

Verdict oracle_agreement() {
  std::vector<ModelParams> grid;
  for (auto t : {TieBreak::kFirstHeard, TieBreak::kRandom, TieBreak::kWorstCase}) {
    for (int l : {2, 5, 10}) {
      for (double delta : {0.0, 0.01}) {
        auto p = nc(t, 0.5);
        p.max_fork = l;
        p.delta = delta;
        p.whale_fee = 4.0;
        grid.push_back(p);
      }
    }
    for (auto m : {ModelKind::kUpperBound, ModelKind::kFull}) {
      for (int l : {1, 2, 3}) {
        for (auto d : {DifficultySource::kUncontested, DifficultySource::kCanonical}) {
          for (auto led : {Ledger::kCanonical, Ledger::kMad}) {
            for (double delta : {0.0, 0.01}) {
              auto p = dag(d, led, 5, t);
              p.model = m;
              p.max_fork = l;
              p.delta = delta;
              p.whale_fee = 4.0;
              grid.push_back(p);
            }
          }
        }
      }
    }
  }
  int checked = 0;
  double worst = 0.0;
  std::string where;
  for (auto p : grid) {
    for (double a : {0.1, 0.3, 0.45}) {
      p.alpha = a;
      const Mdp mdp = build_model(p);
      if (mdp.num_states() > 10'000) continue;
      const auto r = optimal_revenue(p);
      const double gap = std::abs(r.policy_ratio - ratio_value_oracle(mdp, r.solve.policy));
      ++checked;
      if (gap > worst) {
        worst = gap;
        where = p.describe();
      }
    }
  }
  return {checked > 0 && worst <= 1e-3, fmt("%d instances, max gap %.2e", checked, worst) + (worst > 1e-3 ? " at " + where : "")};
}

Verdict upper_bound_dominance() {
  int points = 0, thresholds = 0;
  std::vector<std::string> bad;
  for (double fee : {2.0, 8.0}) {
    for (int l : {1, 2, 3}) {
      for (auto t : {TieBreak::kFirstHeard, TieBreak::kRandom, TieBreak::kWorstCase}) {
        for (auto d : {DifficultySource::kUncontested, DifficultySource::kCanonical}) {
          for (auto led : {Ledger::kCanonical, Ledger::kMad}) {
            for (double delta : {0.0, 0.01}) {
              auto p = dag(d, led, 5, t);
              p.max_fork = l;
              p.delta = delta;
              p.whale_fee = fee;
              auto full = p;
              full.model = ModelKind::kFull;
              for (double a : {0.1, 0.25, 0.35, 0.45}) {
                p.alpha = full.alpha = a;
                const double ub = memo().revenue(p), fu = memo().revenue(full);
                ++points;
                if (ub < fu - 1e-4) bad.push_back(fmt("revenue %.6f < %.6f: ", ub, fu) + p.describe());
              }
              const double tu = memo().threshold(p), tf = memo().threshold(full);
              ++thresholds;
              if (tu > tf + 1e-3) bad.push_back(fmt("threshold %.4f > %.4f: ", tu, tf) + p.describe());
            }
          }
        }
      }
    }
  }
  std::string detail = fmt("%d revenue points, %d thresholds, %zu violations", points, thresholds, bad.size());
  if (!bad.empty()) detail += "; first: " + bad.front();
  return {bad.empty(), detail};
}

Verdict protocol_ordering() {
  using DS = DifficultySource;
  const auto fh = TieBreak::kFirstHeard;
  const double t_nc = memo().threshold(nc(fh, 0.5));
  const double t_colordag = memo().threshold(dag(DS::kUncontested, Ledger::kCanonical, 15, fh));
  const double t_canonical = memo().threshold(dag(DS::kCanonical, Ledger::kCanonical, 15, fh));
  const double t_colordag_wide = memo().threshold(dag(DS::kUncontested, Ledger::kCanonical, 30, fh));

  auto whales = [](ModelParams p) {
    p.delta = 0.01;
    p.whale_fee = 2.0;
    return p;
  };
  const double t_canonical_w = memo().threshold(whales(dag(DS::kCanonical, Ledger::kCanonical, 15, TieBreak::kRandom)));
  const double t_mad_w = memo().threshold(whales(dag(DS::kCanonical, Ledger::kMad, 15, TieBreak::kRandom)));

  const bool ok = t_canonical >= t_colordag && t_colordag_wide >= t_nc && t_mad_w >= t_canonical_w + 0.05;
  return {ok, fmt("canonical-dag %.4f >= colordag %.4f; colordag(N=30) %.4f >= nc %.4f; "
                  "with whales mad-dag %.4f >= canonical-dag %.4f + 0.05",
                  t_canonical, t_colordag, t_colordag_wide, t_nc, t_mad_w, t_canonical_w)};
}

Verdict fair_share() {
  using DS = DifficultySource;
  std::vector<std::pair<std::string, ModelParams>> protocols;
  for (auto [t, g] : {std::pair{TieBreak::kFirstHeard, 0.5}, std::pair{TieBreak::kRandom, 0.0}}) {
    const std::string tag = t == TieBreak::kFirstHeard ? "/first_heard" : "/random";
    protocols.push_back({"nc" + tag, nc(t, g)});
    protocols.push_back({"colordag" + tag, dag(DS::kUncontested, Ledger::kCanonical, 15, t, g)});
    protocols.push_back({"canonical-dag" + tag, dag(DS::kCanonical, Ledger::kCanonical, 15, t, g)});
    protocols.push_back({"mad-dag" + tag, dag(DS::kCanonical, Ledger::kMad, 15, t, g)});
  }
  int checked = 0;
  double worst = 0.0;
  std::string where;
  for (auto& [label, p] : protocols) {
    const double t = memo().threshold(p);
    for (double a : {0.05, 0.15}) {
      if (a >= t) continue;
      p.alpha = a;
      const double gap = std::abs(memo().revenue(p) - honest_utility(p));
      ++checked;
      if (gap > worst) {
        worst = gap;
        where = label + fmt(" alpha=%.2f", a);
      }
    }
  }
  return {checked > 0 && worst <= 1e-3, fmt("%d points below threshold, max |rho - honest| %.2e", checked, worst) +
                                            (where.empty() ? "" : " (" + where + ")")};
}

Verdict determinism() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "dagsm_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::istringstream text(
      "model=[bitcoin_fee,simplified_colordag,chain_colordag]\n"
      "tie_break=[first_heard,random]\n"
      "ledger=[longest,mad]\n"
      "fork_sensitivity=5\nmax_fork=2\ndelta=0.01\nwhale_fee=4\n"
      "alpha=[0.2,0.4]\noutput=both\n");
  auto cfg = parse_config(text);
  std::ostringstream log;
  auto run = [&](const std::string& name, int jobs) {
    cfg.out = (dir / name).string();
    cfg.jobs = jobs;
    run_sweep(cfg, log);
    std::ifstream in(cfg.out, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const auto first = run("a.csv", 1);
  const bool sweep_same = first == run("b.csv", 1) && first == run("c.csv", 4);
  fs::remove_all(dir);

  ModelParams p;
  p.delta = 0.01;
  p.whale_fee = 2.0;
  p.alpha = 0.3;
  const auto s1 = simulate_honest(p, 200'000, 7), s2 = simulate_honest(p, 200'000, 7);
  p.tie_break = TieBreak::kWorstCase;
  p.max_fork = 4;
  const Mdp mdp = build_model(p);
  const auto pol = optimal_revenue(p).solve.policy;
  const auto r1 = simulate_policy(mdp, pol, 200'000, 9), r2 = simulate_policy(mdp, pol, 200'000, 9);
  auto bits = [](double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, sizeof u);
    return u;
  };
  const bool sim_same = bits(s1.revenue) == bits(s2.revenue) && bits(s1.q) == bits(s2.q) &&
                        bits(s1.revenue_se) == bits(s2.revenue_se) && bits(r1.revenue) == bits(r2.revenue) &&
                        bits(r1.revenue_se) == bits(r2.revenue_se);
  return {sweep_same && sim_same, fmt("sweep csv %s across reruns and worker counts; seeded simulations %s",
                                      sweep_same ? "byte-identical" : "DIFFERS", sim_same ? "bit-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"dag_fixtures", dag_fixtures},
      {"nc_worst_case_threshold", nc_worst_case_threshold},
      {"nc_rushing_threshold", nc_rushing_threshold},
      {"honest_baseline", honest_baseline},
      {"oracle_agreement", oracle_agreement},
      {"upper_bound_dominance", upper_bound_dominance},
      {"protocol_ordering", protocol_ordering},
      {"fair_share", fair_share},
      {"determinism", determinism},
  };
  std::vector<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %-26s %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  return failed ? 1 : 0;
}
