#pragma once

// On-disk memo of solved points. Each entry is a JSON file named by the
// SHA-256 of the normalized parameter vector, the solver settings and the
// code version, so a change to any of them misses the cache.

#include <openssl/evp.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "dagsm/analysis.hpp"
#include "dagsm/sweep_csv.hpp"

namespace dagsm {

/// Bumped whenever a change can alter solved numbers.
inline constexpr std::string_view kCodeVersion = "dagsm-1.0.0";

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

/// Canonical text of everything a solve depends on.
inline std::string cache_material(std::string_view kind, const ModelParams& params, const SolverConfig& cfg,
                                  double tolerance = 0.0) {
  const auto p = params.normalized();
  std::ostringstream os;
  os << kCodeVersion << '|' << kind << "|model=" << name(p.model) << "|tie=" << name(p.tie_break)
     << "|difficulty=" << name(p.difficulty_source) << "|ledger=" << name(p.ledger)
     << "|alpha=" << format_number(kind == "threshold" ? 0.0 : p.alpha) << "|gamma=" << format_number(p.gamma)
     << "|delta=" << format_number(p.delta) << "|F=" << format_number(p.whale_fee)
     << "|f=" << format_number(p.guaranteed_fee) << "|N=" << p.fork_sensitivity << "|L=" << p.max_fork
     << "|pool=" << p.max_pool << "|H=" << format_number(cfg.horizon) << "|eps=" << format_number(cfg.precision)
     << "|lin=" << format_number(cfg.linear_tolerance);
  if (kind == "threshold") os << "|tol=" << format_number(tolerance);
  return os.str();
}

class ResultCache {
 public:
  ResultCache() = default;  // disabled
  explicit ResultCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }

  bool enabled() const { return !dir_.empty(); }

  std::optional<nlohmann::json> get(const std::string& key) const {
    if (!enabled()) return std::nullopt;
    std::ifstream in(dir_ / (key + ".json"));
    if (!in) return std::nullopt;
    try {
      auto j = nlohmann::json::parse(in);
      if (j.value("code_version", "") != kCodeVersion) return std::nullopt;
      return j;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;  // torn or foreign file: recompute
    }
  }

  void put(const std::string& key, nlohmann::json value) const {
    if (!enabled()) return;
    value["code_version"] = kCodeVersion;
    const auto tmp = dir_ / (key + ".json.tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
    {
      std::ofstream out(tmp);
      out << value.dump(1) << '\n';
      if (!out) throw std::runtime_error("cannot write cache entry " + tmp.string());
    }
    std::filesystem::rename(tmp, dir_ / (key + ".json"));
  }

 private:
  std::filesystem::path dir_;
};

struct RevenuePoint {
  double revenue = 0.0;
  double honest = 0.0;
  std::size_t states = 0;
  std::size_t transitions = 0;
  std::size_t rounds = 0;
  bool from_cache = false;
  std::string key;
};

/// optimal_revenue through the cache.
inline RevenuePoint cached_revenue(const ResultCache& cache, const ModelParams& p, const SolverConfig& cfg) {
  RevenuePoint out;
  out.key = sha256_hex(cache_material("revenue", p, cfg));
  if (auto j = cache.get(out.key)) {
    out.revenue = j->at("revenue").get<double>();
    out.honest = j->at("honest").get<double>();
    out.states = j->at("states").get<std::size_t>();
    out.transitions = j->at("transitions").get<std::size_t>();
    out.rounds = j->at("rounds").get<std::size_t>();
    out.from_cache = true;
    return out;
  }
  const auto r = optimal_revenue(p, cfg);
  out.revenue = r.policy_ratio;
  out.honest = r.honest;
  out.states = r.states;
  out.transitions = r.transitions;
  out.rounds = r.solve.rounds;
  cache.put(out.key, {{"params", p.describe()},
                      {"revenue", out.revenue},
                      {"honest", out.honest},
                      {"states", out.states},
                      {"transitions", out.transitions},
                      {"rounds", out.rounds}});
  return out;
}

struct ThresholdPoint {
  ThresholdResult result;
  bool from_cache = false;
  std::string key;
};

/// security_threshold through the cache; probes are cached individually.
inline ThresholdPoint cached_threshold(const ResultCache& cache, const ModelParams& p, const SolverConfig& cfg,
                                       double tolerance) {
  ThresholdPoint out;
  out.key = sha256_hex(cache_material("threshold", p, cfg, tolerance));
  if (auto j = cache.get(out.key)) {
    auto& r = out.result;
    r.threshold = j->at("threshold").get<double>();
    r.lower = j->at("lower").get<double>();
    r.upper = j->at("upper").get<double>();
    r.none_below_half = j->at("none_below_half").get<bool>();
    for (const auto& pr : j->at("probes")) r.probes.push_back({pr[0].get<double>(), pr[1].get<double>(), pr[2].get<double>()});
    out.from_cache = true;
    return out;
  }
  out.result = security_threshold(
      p, tolerance, [&](const ModelParams& q) { return cached_revenue(cache, q, cfg).revenue; }, cfg);
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& pr : out.result.probes) probes.push_back({pr.alpha, pr.revenue, pr.honest});
  cache.put(out.key, {{"params", p.describe()},
                      {"threshold", out.result.threshold},
                      {"lower", out.result.lower},
                      {"upper", out.result.upper},
                      {"none_below_half", out.result.none_below_half},
                      {"probes", probes}});
  return out;
}

}  // namespace dagsm
