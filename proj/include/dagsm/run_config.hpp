#pragma once

// Sweep configuration: flat `key=value` lines, lists as `key=[v1,v2]`,
// '#' starts a comment. Every parameter key takes a list; the cross product
// of all lists is the sweep.
//
//   model=[bitcoin_fee,simplified_colordag]
//   tie_break=[first_heard,random,attacker]
//   alpha=[0.05,0.1,0.15]
//   output=revenue            # revenue | threshold | both
//   out=results.csv

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dagsm/params.hpp"
#include "dagsm/pto.hpp"

namespace dagsm {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SweepOutput { kRevenue, kThreshold, kBoth };

struct SweepAxes {
  std::vector<ModelKind> model{ModelKind::kNc};
  std::vector<TieBreak> tie_break{TieBreak::kFirstHeard};
  std::vector<DifficultySource> difficulty_source{DifficultySource::kUncontested};
  std::vector<Ledger> ledger{Ledger::kCanonical};
  std::vector<int> fork_sensitivity{15};
  std::vector<int> max_fork{10};
  std::vector<int> max_pool{2};
  std::vector<double> whale_fee{0.0};
  std::vector<double> guaranteed_fee{0.0};
  std::vector<double> gamma{0.5};
  std::vector<double> delta{0.0};
  std::vector<double> alpha{0.25};
};

struct RunConfig {
  SweepAxes axes;
  SweepOutput output = SweepOutput::kRevenue;
  SolverConfig solver;
  double tolerance = 1e-3;  // threshold bracket
  std::uint64_t seed = 1;
  std::string out;
  std::string cache_dir;
  int jobs = 1;
};

// Enum spellings accepted on input. Output always uses the CSV vocabulary.
inline ModelKind parse_model_alias(std::string_view s) {
  if (s == "nc") return ModelKind::kNc;
  if (s == "full") return ModelKind::kFull;
  if (s == "upper_bound") return ModelKind::kUpperBound;
  return parse_model(s);
}
inline TieBreak parse_tie_break_alias(std::string_view s) {
  return s == "worst_case" ? TieBreak::kWorstCase : parse_tie_break(s);
}
inline DifficultySource parse_difficulty_alias(std::string_view s) {
  return s == "canonical" ? DifficultySource::kCanonical : parse_difficulty(s);
}
inline Ledger parse_ledger_alias(std::string_view s) { return s == "canonical" ? Ledger::kCanonical : parse_ledger(s); }

inline double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ConfigError("invalid number for " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

inline long long parse_integer(std::string_view s, std::string_view what) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ConfigError("invalid integer for " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& value) {
  if (value.empty() || value.front() != '[') return {value};
  if (value.back() != ']') throw ConfigError("unterminated list: " + value);
  std::vector<std::string> out;
  std::stringstream ss(value.substr(1, value.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty list item in " + value);
    out.push_back(item);
  }
  return out;
}

template <class T, class F>
std::vector<T> parse_axis(const std::string& key, const std::vector<std::string>& items, F&& parse) {
  if (items.empty()) throw ConfigError("axis '" + key + "' is empty");
  std::vector<T> out;
  for (const auto& s : items) {
    try {
      out.push_back(parse(s));
    } catch (const ParamError& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }
  return out;
}

inline std::string scalar(const std::string& key, const std::vector<std::string>& items) {
  if (items.size() != 1) throw ConfigError("'" + key + "' takes a single value");
  return items.front();
}

}  // namespace detail

/// Applies one `key=value` setting (value may be a list).
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_axis;
  const auto items = detail::split_list(value);
  auto num = [&](const std::string& s) { return parse_double(s, key); };
  auto integer = [&](const std::string& s) { return static_cast<int>(parse_integer(s, key)); };
  auto& ax = cfg.axes;
  if (key == "model") {
    ax.model = parse_axis<ModelKind>(key, items, parse_model_alias);
  } else if (key == "tie_break" || key == "tie_break_mode") {
    ax.tie_break = parse_axis<TieBreak>(key, items, parse_tie_break_alias);
  } else if (key == "difficulty_source") {
    ax.difficulty_source = parse_axis<DifficultySource>(key, items, parse_difficulty_alias);
  } else if (key == "ledger" || key == "ledger_function") {
    ax.ledger = parse_axis<Ledger>(key, items, parse_ledger_alias);
  } else if (key == "fork_sensitivity" || key == "acceptable_path_param") {
    ax.fork_sensitivity = parse_axis<int>(key, items, integer);
  } else if (key == "max_fork") {
    ax.max_fork = parse_axis<int>(key, items, integer);
  } else if (key == "max_pool") {
    ax.max_pool = parse_axis<int>(key, items, integer);
  } else if (key == "whale_fee" || key == "fee") {
    ax.whale_fee = parse_axis<double>(key, items, num);
  } else if (key == "guaranteed_fee") {
    ax.guaranteed_fee = parse_axis<double>(key, items, num);
  } else if (key == "gamma") {
    ax.gamma = parse_axis<double>(key, items, num);
  } else if (key == "delta") {
    ax.delta = parse_axis<double>(key, items, num);
  } else if (key == "alpha") {
    ax.alpha = parse_axis<double>(key, items, num);
  } else if (key == "output") {
    const auto v = detail::scalar(key, items);
    if (v == "revenue") {
      cfg.output = SweepOutput::kRevenue;
    } else if (v == "threshold") {
      cfg.output = SweepOutput::kThreshold;
    } else if (v == "both") {
      cfg.output = SweepOutput::kBoth;
    } else {
      throw ConfigError("output must be revenue, threshold or both");
    }
  } else if (key == "horizon") {
    cfg.solver.horizon = num(detail::scalar(key, items));
  } else if (key == "precision") {
    cfg.solver.precision = num(detail::scalar(key, items));
  } else if (key == "tolerance") {
    cfg.tolerance = num(detail::scalar(key, items));
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_integer(detail::scalar(key, items), key));
  } else if (key == "out") {
    cfg.out = detail::scalar(key, items);
  } else if (key == "cache_dir") {
    cfg.cache_dir = detail::scalar(key, items);
  } else if (key == "jobs") {
    cfg.jobs = integer(detail::scalar(key, items));
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

inline void check(const RunConfig& cfg) {
  if (!(cfg.solver.horizon > 1.0)) throw ConfigError("horizon must exceed 1");
  if (!(cfg.solver.precision > 0.0)) throw ConfigError("precision must be positive");
  if (!(cfg.tolerance > 0.0 && cfg.tolerance < 0.5)) throw ConfigError("tolerance must lie in (0, 0.5)");
  if (cfg.jobs < 1) throw ConfigError("jobs must be at least 1");
}

inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    try {
      apply_setting(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  check(cfg);
  return cfg;
}

/// Sweep points in a fixed nested order with alpha innermost. In threshold
/// mode alpha is searched, so the alpha axis is dropped.
inline std::vector<ModelParams> sweep_points(const RunConfig& cfg) {
  const auto& ax = cfg.axes;
  std::vector<double> alphas = ax.alpha;
  if (cfg.output == SweepOutput::kThreshold) alphas = {0.25};
  std::vector<ModelParams> out;
  for (auto m : ax.model)
    for (auto t : ax.tie_break)
      for (auto d : ax.difficulty_source)
        for (auto l : ax.ledger)
          for (auto n : ax.fork_sensitivity)
            for (auto lf : ax.max_fork)
              for (auto mp : ax.max_pool)
                for (auto wf : ax.whale_fee)
                  for (auto gf : ax.guaranteed_fee)
                    for (auto g : ax.gamma)
                      for (auto de : ax.delta)
                        for (auto a : alphas) {
                          ModelParams p;
                          p.model = m;
                          p.tie_break = t;
                          p.difficulty_source = d;
                          p.ledger = l;
                          p.fork_sensitivity = n;
                          p.max_fork = lf;
                          p.max_pool = mp;
                          p.whale_fee = wf;
                          p.guaranteed_fee = gf;
                          p.gamma = g;
                          p.delta = de;
                          p.alpha = a;
                          out.push_back(p);
                        }
  return out;
}

}  // namespace dagsm
