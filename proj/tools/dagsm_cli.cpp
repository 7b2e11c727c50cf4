// dagsm: solve, threshold search, sweeps, simulation and CSV verification.
//
// Exit status: 0 success, 1 failed points or verification mismatch,
// 2 usage, configuration or schema error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "dagsm/models.hpp"
#include "dagsm/sim.hpp"
#include "dagsm/sweep.hpp"

namespace {

using namespace dagsm;

// Parameter flags shared by solve, threshold, simulate and sweep. Values are
// kept as text and fed through the config parser, so the CLI and config
// files accept the same spellings, lists included.
struct ParamFlags {
  std::map<std::string, std::string> values;

  void attach(CLI::App* app, bool sweep_only_keys) {
    auto add = [&](const std::string& flag, const std::string& key, const std::string& help) {
      app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
    };
    add("--model", "model", "bitcoin_fee | chain_colordag | simplified_colordag");
    add("--tie-break", "tie_break", "first_heard | random | attacker");
    add("--difficulty-source", "difficulty_source", "uncontested | main");
    add("--ledger", "ledger", "longest | mad");
    add("--alpha", "alpha", "attacker mining share");
    add("--gamma", "gamma", "share of honest power on the attacker side of a first-heard race");
    add("--delta", "delta", "whale arrivals per block");
    add("--whale-fee", "whale_fee", "whale fee F");
    add("--guaranteed-fee", "guaranteed_fee", "per-block fee f");
    add("--fork-sensitivity", "fork_sensitivity", "acceptable path parameter");
    add("--max-fork", "max_fork", "longest tracked fork");
    add("--max-pool", "max_pool", "whale pool capacity");
    add("--horizon", "horizon", "expected difficulty before termination (default 100000)");
    add("--precision", "precision", "value iteration stopping threshold (default 0.00001)");
    add("--tolerance", "tolerance", "threshold bracket width (default 0.001)");
    add("--seed", "seed", "simulation seed");
    add("--cache-dir", "cache_dir", "result cache directory");
    if (sweep_only_keys) add("--jobs", "jobs", "worker threads");
  }

  void apply(RunConfig& cfg) const {
    for (const auto& [k, v] : values) {
      try {
        apply_setting(cfg, k, v);
      } catch (const ConfigError& e) {
        throw ConfigError("--" + k + ": " + e.what());
      }
    }
    check(cfg);
  }
};

int run_points(const RunConfig& cfg) {
  const auto sum = cfg.out.empty() ? run_sweep(cfg, std::cout, std::cerr) : run_sweep(cfg, std::cerr);
  return sum.failures ? 1 : 0;
}

int run_simulate(const RunConfig& cfg, const std::string& policy, std::uint64_t blocks) {
  const auto points = sweep_points(cfg);
  std::cout << "policy,alpha,steps,revenue,revenue_se,honest,q,q_se\n";
  for (const auto& p : points) {
    p.check();
    SimReport r;
    if (policy == "honest") {
      r = simulate_honest(p, blocks, cfg.seed);
    } else {
      const auto solved = optimal_revenue(p, cfg.solver);
      r = simulate_policy(build_model(p), solved.solve.policy, blocks, cfg.seed);
    }
    std::cout << policy << ',' << format_number(p.alpha) << ',' << r.steps << ',' << format_number(r.revenue) << ','
              << format_number(r.revenue_se) << ',' << format_number(honest_utility(p)) << ','
              << (policy == "honest" ? format_number(r.q) : "") << ','
              << (policy == "honest" ? format_number(r.q_se) : "") << '\n';
  }
  return 0;
}

int run_verify(const std::string& actual, const std::string& golden, const std::vector<std::string>& tols) {
  auto tol = default_tolerances();
  for (const auto& t : tols) {
    const auto eq = t.rfind('=');
    if (eq == std::string::npos) throw SchemaError("--tol expects Column=value, got '" + t + "'");
    tol[t.substr(0, eq)] = parse_double(t.substr(eq + 1), "--tol");
  }
  const auto rep = verify_csv_files(actual, golden, tol);
  for (const auto& m : rep.mismatches) {
    std::cout << "row " << m.row << " " << m.column << ": " << m.actual << " vs " << m.expected << '\n';
  }
  if (!rep.note.empty()) std::cout << rep.note << '\n';
  std::cout << (rep.passed() ? "PASS" : "FAIL") << ": " << rep.rows << " rows, " << rep.mismatches.size()
            << " mismatches\n";
  return rep.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selfish mining analysis for chain and DAG protocols"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string out;

  ParamFlags solve_flags, threshold_flags, sweep_flags, sim_flags;
  auto* solve = app.add_subcommand("solve", "optimal attacker revenue for each parameter point");
  solve_flags.attach(solve, true);
  solve->add_option("--out", out, "CSV output (stdout when omitted)");

  auto* threshold = app.add_subcommand("threshold", "smallest profitable attacker share");
  threshold_flags.attach(threshold, true);
  threshold->add_option("--out", out, "CSV output (stdout when omitted)");

  std::string config_path;
  auto* sweep = app.add_subcommand("sweep", "run a configured parameter sweep");
  sweep->add_option("--config", config_path, "key=value sweep configuration")->required()->check(CLI::ExistingFile);
  sweep_flags.attach(sweep, true);
  sweep->add_option("--out", out, "CSV output (overrides the config)");

  std::string policy = "honest";
  std::uint64_t blocks = 1'000'000;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo revenue estimate");
  sim_flags.attach(simulate, false);
  simulate->add_option("--policy", policy, "honest | optimal")->check(CLI::IsMember({"honest", "optimal"}));
  simulate->add_option("--blocks", blocks, "blocks (honest) or transitions (optimal)");

  std::string actual, golden;
  std::vector<std::string> tols;
  auto* verify = app.add_subcommand("verify", "compare a sweep CSV with a golden file");
  verify->add_option("csv", actual, "CSV to check")->required();
  verify->add_option("golden", golden, "reference CSV")->required();
  verify->add_option("--tol", tols, "per-column absolute tolerance, Column=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*solve) {
      solve_flags.apply(cfg);
      cfg.output = SweepOutput::kRevenue;
      cfg.out = out;
      return run_points(cfg);
    }
    if (*threshold) {
      threshold_flags.apply(cfg);
      cfg.output = SweepOutput::kThreshold;
      cfg.out = out;
      return run_points(cfg);
    }
    if (*sweep) {
      std::ifstream in(config_path);
      cfg = parse_config(in);
      sweep_flags.apply(cfg);
      if (!out.empty()) cfg.out = out;
      return run_points(cfg);
    }
    if (*simulate) {
      sim_flags.apply(cfg);
      return run_simulate(cfg, policy, blocks);
    }
    if (*verify) return run_verify(actual, golden, tols);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return 2;
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
