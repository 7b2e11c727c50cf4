#pragma once

// Sweep driver: solves every point of a configuration, writes CSV rows in
// sweep order as they finish and records per-point status in a JSON
// manifest next to the CSV. Solved points are memoized in the result cache,
// so an interrupted sweep resumes by rerunning it.

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dagsm/result_cache.hpp"
#include "dagsm/run_config.hpp"
#include "dagsm/sweep_csv.hpp"

namespace dagsm {

struct PointOutcome {
  SweepRecord record;
  nlohmann::json manifest;
};

struct SweepSummary {
  std::size_t points = 0;
  std::size_t failures = 0;
  std::size_t cache_hits = 0;
};

inline nlohmann::json params_json(const ModelParams& p, bool with_alpha) {
  nlohmann::json j{{"model", name(p.model)},
                   {"tie_break_mode", name(p.tie_break)},
                   {"difficulty_source", name(p.difficulty_source)},
                   {"ledger_function", name(p.ledger)},
                   {"acceptable_path_param", p.fork_sensitivity},
                   {"max_fork", p.max_fork},
                   {"max_pool", p.max_pool},
                   {"fee", p.whale_fee},
                   {"guaranteed_fee", p.guaranteed_fee},
                   {"gamma", p.gamma},
                   {"delta", p.delta}};
  if (with_alpha) j["alpha"] = p.alpha;
  return j;
}

inline PointOutcome solve_point(const RunConfig& cfg, const ResultCache& cache, const ModelParams& p, std::size_t index) {
  PointOutcome out;
  auto& rec = out.record;
  rec.params = p;
  rec.with_alpha = cfg.output != SweepOutput::kThreshold;
  rec.wants_revenue = cfg.output != SweepOutput::kThreshold;
  rec.wants_threshold = cfg.output != SweepOutput::kRevenue;
  auto& m = out.manifest;
  m = {{"index", index}, {"params", params_json(p, rec.with_alpha)}};
  bool cached = true;
  try {
    p.check();
    if (rec.wants_revenue) {
      const auto r = cached_revenue(cache, p, cfg.solver);
      rec.revenue = r.revenue;
      rec.honest = r.honest;
      cached = cached && r.from_cache;
      m["revenue_key"] = r.key;
      m["states"] = r.states;
      m["transitions"] = r.transitions;
      m["rounds"] = r.rounds;
    }
    if (rec.wants_threshold) {
      const auto t = cached_threshold(cache, p, cfg.solver, cfg.tolerance);
      rec.threshold = t.result.threshold;
      cached = cached && t.from_cache;
      m["threshold_key"] = t.key;
      m["threshold_bracket"] = {t.result.lower, t.result.upper};
      m["none_below_half"] = t.result.none_below_half;
      m["threshold_probes"] = t.result.probes.size();
    }
    m["status"] = "ok";
    m["from_cache"] = cached;
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.honest.reset();
    rec.revenue.reset();
    rec.threshold.reset();
    m["status"] = "error";
    m["error"] = e.what();
  }
  return out;
}

inline nlohmann::json config_json(const RunConfig& cfg) {
  const char* kOutput[] = {"revenue", "threshold", "both"};
  return {{"output", kOutput[static_cast<int>(cfg.output)]},
          {"horizon", cfg.solver.horizon},
          {"precision", cfg.solver.precision},
          {"linear_tolerance", cfg.solver.linear_tolerance},
          {"tolerance", cfg.tolerance},
          {"seed", cfg.seed},
          {"cache_dir", cfg.cache_dir},
          {"jobs", cfg.jobs}};
}

namespace detail {

/// Solves all points and streams rows to `csv` in sweep order.
inline SweepSummary execute_sweep(const RunConfig& cfg, std::ostream& csv, std::ostream& log, nlohmann::json& entries) {
  check(cfg);
  const auto points = sweep_points(cfg);
  const ResultCache cache(cfg.cache_dir);
  log << "sweep: " << points.size() << " points\n";
  write_csv_header(csv);
  csv.flush();

  std::vector<std::optional<PointOutcome>> done(points.size());
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < points.size();) {
      auto o = solve_point(cfg, cache, points[i], i);
      std::lock_guard lk(mu);
      done[i] = std::move(o);
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  const auto jobs = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), std::max<std::size_t>(points.size(), 1));
  for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);

  SweepSummary sum;
  sum.points = points.size();
  entries = nlohmann::json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    PointOutcome o;
    {
      std::unique_lock lk(mu);
      cv.wait(lk, [&] { return done[i].has_value(); });
      o = std::move(*done[i]);
      done[i].reset();
    }
    write_csv_row(csv, o.record);
    csv.flush();
    if (o.record.failed) {
      ++sum.failures;
      log << "point " << i << " failed: " << o.manifest["error"].get<std::string>() << '\n';
    }
    if (o.manifest.value("from_cache", false)) ++sum.cache_hits;
    entries.push_back(std::move(o.manifest));
  }
  for (auto& t : pool) t.join();
  log << "sweep: " << sum.failures << " failed, " << sum.cache_hits << " from cache\n";
  return sum;
}

}  // namespace detail

/// Sweep to a stream, without a manifest.
inline SweepSummary run_sweep(const RunConfig& cfg, std::ostream& csv, std::ostream& log) {
  nlohmann::json entries;
  return detail::execute_sweep(cfg, csv, log, entries);
}

/// Runs the sweep, writing `cfg.out` and `cfg.out + ".manifest.json"`.
/// Progress goes to `log`.
inline SweepSummary run_sweep(const RunConfig& cfg, std::ostream& log = std::cerr) {
  if (cfg.out.empty()) throw ConfigError("no output file given");
  std::ofstream csv(cfg.out, std::ios::binary | std::ios::trunc);
  if (!csv) throw ConfigError("cannot write " + cfg.out);
  nlohmann::json entries;
  const auto sum = detail::execute_sweep(cfg, csv, log, entries);
  nlohmann::json manifest{{"code_version", kCodeVersion},
                          {"csv", cfg.out},
                          {"columns", kCsvColumns},
                          {"config", config_json(cfg)},
                          {"points", sum.points},
                          {"failures", sum.failures},
                          {"entries", std::move(entries)}};
  const std::string path = cfg.out + ".manifest.json";
  std::ofstream mf(path, std::ios::trunc);
  mf << manifest.dump(1) << '\n';
  if (!mf) throw ConfigError("cannot write " + path);
  return sum;
}

}  // namespace dagsm
