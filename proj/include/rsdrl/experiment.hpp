#pragma once

// Regret experiments: config parsing, per-(algo, tau, seed) runs against
// the exact DP oracle, and CSV output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rsdrl/augmented_dp.hpp"
#include "rsdrl/error.hpp"
#include "rsdrl/linear_cvar.hpp"
#include "rsdrl/linear_mdp.hpp"
#include "rsdrl/lsvi_ucb.hpp"
#include "rsdrl/mdp_io.hpp"
#include "rsdrl/rng.hpp"
#include "rsdrl/sqrt_fit.hpp"
#include "rsdrl/tabular_optimistic.hpp"

namespace rsdrl {

enum class Algo { LinearCvar, LsviUcb, TabularOpt };

inline std::string to_string(Algo a) {
  switch (a) {
  case Algo::LinearCvar: return "linear_cvar";
  case Algo::LsviUcb: return "lsvi_ucb";
  case Algo::TabularOpt: return "tabular_opt";
  }
  return "?";
}

inline Algo parse_algo(const std::string& s) {
  if (s == "linear_cvar") return Algo::LinearCvar;
  if (s == "lsvi_ucb") return Algo::LsviUcb;
  if (s == "tabular_opt") return Algo::TabularOpt;
  throw ConfigError("algos", "unknown algorithm '" + s + "'");
}

struct ExperimentConfig {
  std::size_t n_states = 3;
  std::size_t n_actions = 2;
  std::size_t dim = 2;
  std::size_t horizon = 6;
  std::size_t n_rewards = 3;
  std::uint64_t mdp_seed = 7;
  double min_spread = 0.05; // instances with smaller CVaR spread at spread_tau are skipped
  double spread_tau = 0.2;
  std::size_t max_mdp_retries = 1000;

  std::vector<Algo> algos{Algo::LinearCvar, Algo::LsviUcb, Algo::TabularOpt};
  std::vector<double> taus{0.2, 0.3, 0.5, 0.7};
  std::size_t episodes = 2000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  double lambda_ridge = 1.0;
  double c_beta = 0.1;
  double delta = 0.01;
  double c_conf = 1.0;
  double c_lsvi = 0.1;

  std::string out_dir = "results";
  std::size_t threads = 1;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || !std::isfinite(x)) throw ConfigError(key, "not a number: '" + v + "'");
  return x;
}

inline std::uint64_t parse_count(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || v.front() == '-') throw ConfigError(key, "not a nonnegative integer: '" + v + "'");
  return x;
}

} // namespace detail

inline void check_config(const ExperimentConfig& c) {
  if (c.episodes < 1) throw ConfigError("episodes", "must be >= 1");
  if (c.seeds.empty()) throw ConfigError("seeds", "must not be empty");
  if (c.algos.empty()) throw ConfigError("algos", "must not be empty");
  if (c.taus.empty()) throw ConfigError("taus", "must not be empty");
  for (double t : c.taus)
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("taus", "every tau must lie in (0,1]");
  if (c.n_states < 1) throw ConfigError("S", "must be >= 1");
  if (c.n_actions < 1) throw ConfigError("A", "must be >= 1");
  if (c.horizon < 1) throw ConfigError("H", "must be >= 1");
  if (c.dim < 1 || c.dim > c.n_states * c.n_actions) throw ConfigError("d", "must lie in [1, S*A]");
  if (c.n_rewards < 3 || c.n_rewards % 2 == 0) throw ConfigError("M", "must be odd and >= 3");
  if (!(c.lambda_ridge > 0.0)) throw ConfigError("lambda_ridge", "must be positive");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta", "must lie in (0,1)");
  if (c.c_beta < 0.0) throw ConfigError("c_beta", "must be nonnegative");
  if (c.c_conf < 0.0) throw ConfigError("c_conf", "must be nonnegative");
  if (c.c_lsvi < 0.0) throw ConfigError("c_lsvi", "must be nonnegative");
  if (!(c.spread_tau > 0.0 && c.spread_tau <= 1.0)) throw ConfigError("spread_tau", "must lie in (0,1]");
  if (c.threads < 1) throw ConfigError("threads", "must be >= 1");
}

/// Parses `key = value` lines ('#' starts a comment; lists are comma
/// separated). Unset keys keep their defaults.
inline ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(key, "set more than once");
    using detail::parse_count;
    using detail::parse_real;
    if (key == "S") c.n_states = parse_count(key, value);
    else if (key == "A") c.n_actions = parse_count(key, value);
    else if (key == "d") c.dim = parse_count(key, value);
    else if (key == "H") c.horizon = parse_count(key, value);
    else if (key == "M") c.n_rewards = parse_count(key, value);
    else if (key == "mdp_seed") c.mdp_seed = parse_count(key, value);
    else if (key == "min_spread") c.min_spread = parse_real(key, value);
    else if (key == "spread_tau") c.spread_tau = parse_real(key, value);
    else if (key == "max_mdp_retries") c.max_mdp_retries = parse_count(key, value);
    else if (key == "episodes" || key == "K") c.episodes = parse_count(key, value);
    else if (key == "lambda_ridge") c.lambda_ridge = parse_real(key, value);
    else if (key == "c_beta") c.c_beta = parse_real(key, value);
    else if (key == "delta") c.delta = parse_real(key, value);
    else if (key == "c_conf") c.c_conf = parse_real(key, value);
    else if (key == "c_lsvi") c.c_lsvi = parse_real(key, value);
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "threads") c.threads = parse_count(key, value);
    else if (key == "algos") {
      c.algos.clear();
      for (const auto& a : detail::split_list(value)) c.algos.push_back(parse_algo(a));
    } else if (key == "taus") {
      c.taus.clear();
      for (const auto& t : detail::split_list(value)) c.taus.push_back(parse_real(key, t));
    } else if (key == "seeds") {
      c.seeds.clear();
      for (const auto& s : detail::split_list(value)) c.seeds.push_back(parse_count(key, s));
    } else
      throw ConfigError(key, "unknown key");
  }
  check_config(c);
  return c;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  return parse_config(in);
}

/// optimal CVaR minus the CVaR of the shortfall-maximizing policy: a lower
/// bound on the spread of CVaR values across augmented policies.
inline double cvar_spread(const TabularMDP& mdp, double tau) {
  const AugmentedSpace space = AugmentedSpace::standard(mdp.shape());
  const double best = optimal_cvar(mdp, space, tau).value;
  const ShortfallSolution worst = solve_shortfall(mdp, space, ShortfallObjective::Maximize);
  return best - policy_cvar(mdp, space, worst.policy, tau);
}

struct ExperimentMdp {
  DiscretizedLinearMDP mdp;
  std::uint64_t seed = 0; // generator seed actually used
};

/// Zero-mean instance from mdp_seed, moving to the next seed while the
/// instance is degenerate (CVaR spread below min_spread at spread_tau).
inline ExperimentMdp build_experiment_mdp(const ExperimentConfig& c) {
  for (std::size_t attempt = 0; attempt <= c.max_mdp_retries; ++attempt) {
    const std::uint64_t seed = c.mdp_seed + attempt;
    DiscretizedLinearMDP lin = make_zero_mean_mdp(c.n_states, c.n_actions, c.dim, c.horizon, c.n_rewards, seed);
    if (cvar_spread(lin.tabular, c.spread_tau) >= c.min_spread) return {std::move(lin), seed};
  }
  throw ConfigError("mdp_seed", "no non-degenerate instance within max_mdp_retries seeds");
}

struct RegretTrace {
  Algo algo = Algo::LinearCvar;
  double tau = 0.5;
  std::uint64_t seed = 0;
  std::vector<double> instant;
  std::vector<double> cumulative;
};

inline constexpr double kRegretTolerance = 1e-9;

namespace detail {

inline void record(RegretTrace& trace, double optimum, double achieved) {
  double r = optimum - achieved;
  if (r < -kRegretTolerance)
    throw std::logic_error("negative regret " + std::to_string(r) + ": oracle is not optimal");
  r = std::max(r, 0.0);
  trace.instant.push_back(r);
  trace.cumulative.push_back((trace.cumulative.empty() ? 0.0 : trace.cumulative.back()) + r);
}

} // namespace detail

/// K episodes of one algorithm: plan, score the deployed policy exactly,
/// simulate one trajectory, update.
inline RegretTrace run_single(const DiscretizedLinearMDP& lin, const ExperimentConfig& c, Algo algo, double tau,
                              std::uint64_t seed, double optimum) {
  const TabularMDP& mdp = lin.tabular;
  const AugmentedSpace space = AugmentedSpace::standard(mdp.shape());
  RegretTrace trace{algo, tau, seed, {}, {}};
  trace.instant.reserve(c.episodes);
  trace.cumulative.reserve(c.episodes);
  switch (algo) {
  case Algo::LinearCvar: {
    LinearCvarParams p;
    p.tau = tau;
    p.lambda_ridge = c.lambda_ridge;
    p.c_beta = c.c_beta;
    p.delta = c.delta;
    p.episodes = c.episodes;
    LinearCvarLearner learner(mdp.shape(), lin.phi, p);
    for (std::size_t k = 1; k <= c.episodes; ++k) {
      const EpisodePlan plan = learner.plan_episode(k);
      detail::record(trace, optimum, policy_cvar(mdp, space, plan.policy, tau));
      learner.update(simulate(mdp, space, plan.policy, plan.b, episode_seed(seed, k)));
    }
    break;
  }
  case Algo::LsviUcb: {
    LsviUcbParams p;
    p.lambda_ridge = c.lambda_ridge;
    p.c_lsvi = c.c_lsvi;
    p.delta = c.delta;
    p.episodes = c.episodes;
    LsviUcb learner(mdp.shape(), lin.phi, LsviUcb::mean_rewards_of(mdp), p);
    for (std::size_t k = 1; k <= c.episodes; ++k) {
      const LsviPlan plan = learner.plan_episode(k);
      detail::record(trace, optimum, policy_cvar(mdp, space, plan.policy, tau));
      learner.update(simulate(mdp, space, plan.policy, 0.0, episode_seed(seed, k)));
    }
    break;
  }
  case Algo::TabularOpt: {
    OptimisticTabular learner(mdp, {tau, c.c_conf, c.delta});
    for (std::size_t k = 1; k <= c.episodes; ++k) {
      const TabularPlan plan = learner.plan_episode(k);
      detail::record(trace, optimum, policy_cvar(mdp, space, plan.policy, tau));
      learner.update(simulate(mdp, space, plan.policy, plan.b, episode_seed(seed, k)));
    }
    break;
  }
  }
  return trace;
}

// Decimal string with 12 significant digits.
inline std::string format_value(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline constexpr const char* kTraceHeader = "episode,algo,tau,seed,regret_instant,regret_cum";

inline void write_trace(std::ostream& os, const RegretTrace& t) {
  os << kTraceHeader << '\n';
  for (std::size_t k = 0; k < t.instant.size(); ++k)
    os << (k + 1) << ',' << to_string(t.algo) << ',' << format_value(t.tau) << ',' << t.seed << ','
       << format_value(t.instant[k]) << ',' << format_value(t.cumulative[k]) << '\n';
}

/// Parses a trace CSV (possibly holding several algo/tau/seed groups, in
/// order of first appearance).
inline std::vector<RegretTrace> read_traces(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("trace csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) {
    const auto cols = detail::split_list(line);
    const auto expected = detail::split_list(kTraceHeader);
    for (std::size_t i = 0; i < expected.size(); ++i)
      if (i >= cols.size() || cols[i] != expected[i])
        throw IoError("trace csv: column " + std::to_string(i + 1) + " should be '" + expected[i] + "'");
    throw IoError("trace csv: unexpected extra columns");
  }
  std::vector<RegretTrace> out;
  std::map<std::string, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string item; std::getline(ss, item, ',');) f.push_back(item);
    if (f.size() != 6) throw IoError("trace csv line " + std::to_string(line_no) + ": expected 6 fields");
    const std::string key = f[1] + '|' + f[2] + '|' + f[3];
    auto it = index.find(key);
    if (it == index.end()) {
      RegretTrace t;
      try {
        t.algo = parse_algo(f[1]);
        t.tau = detail::parse_real("tau", f[2]);
        t.seed = detail::parse_count("seed", f[3]);
      } catch (const ConfigError& e) {
        throw IoError("trace csv line " + std::to_string(line_no) + ": " + e.what());
      }
      it = index.emplace(key, out.size()).first;
      out.push_back(std::move(t));
    }
    try {
      out[it->second].instant.push_back(detail::parse_real("regret_instant", f[4]));
      out[it->second].cumulative.push_back(detail::parse_real("regret_cum", f[5]));
    } catch (const ConfigError& e) {
      throw IoError("trace csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (out.empty()) throw IoError("trace csv: no data rows");
  return out;
}

struct AggregateRow {
  double cum_mean = 0.0, cum_std = 0.0, instant_mean = 0.0, instant_std = 0.0;
};

// Per-episode mean and sample standard deviation across seeds.
inline std::vector<AggregateRow> aggregate(const std::vector<const RegretTrace*>& runs) {
  const std::size_t n_ep = runs.front()->instant.size();
  const double n = static_cast<double>(runs.size());
  std::vector<AggregateRow> rows(n_ep);
  for (std::size_t k = 0; k < n_ep; ++k) {
    double sc = 0.0, si = 0.0;
    for (const auto* r : runs) {
      sc += r->cumulative[k];
      si += r->instant[k];
    }
    rows[k].cum_mean = sc / n;
    rows[k].instant_mean = si / n;
    if (runs.size() > 1) {
      double vc = 0.0, vi = 0.0;
      for (const auto* r : runs) {
        vc += (r->cumulative[k] - rows[k].cum_mean) * (r->cumulative[k] - rows[k].cum_mean);
        vi += (r->instant[k] - rows[k].instant_mean) * (r->instant[k] - rows[k].instant_mean);
      }
      rows[k].cum_std = std::sqrt(vc / (n - 1.0));
      rows[k].instant_std = std::sqrt(vi / (n - 1.0));
    }
  }
  return rows;
}

struct ExperimentResult {
  std::uint64_t mdp_seed = 0;
  DiscretizedLinearMDP mdp;
  std::vector<double> taus;
  std::vector<OptimalCvar> oracle; // per tau
  std::vector<RegretTrace> traces; // algo-major, then tau, then seed

  /// Traces for one (algo, tau), in seed order.
  std::vector<const RegretTrace*> select(Algo algo, double tau) const {
    std::vector<const RegretTrace*> out;
    for (const auto& t : traces)
      if (t.algo == algo && t.tau == tau) out.push_back(&t);
    return out;
  }
};

inline std::string trace_file_name(const RegretTrace& t) {
  return to_string(t.algo) + "_tau" + format_value(t.tau) + "_seed" + std::to_string(t.seed) + ".csv";
}

/// Runs every (algo, tau, seed) combination. Combinations are independent
/// and may run on up to `threads` workers; results keep a fixed order.
inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  check_config(c);
  ExperimentMdp built = build_experiment_mdp(c);
  ExperimentResult result;
  result.mdp_seed = built.seed;
  result.taus = c.taus;
  for (double tau : c.taus) result.oracle.push_back(optimal_cvar(built.mdp.tabular, tau));

  struct Job {
    Algo algo;
    std::size_t tau_index;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Algo a : c.algos)
    for (std::size_t t = 0; t < c.taus.size(); ++t)
      for (std::uint64_t s : c.seeds) jobs.push_back({a, t, s});

  result.traces.resize(jobs.size());
  auto work = [&](std::size_t i) {
    const Job& j = jobs[i];
    result.traces[i] = run_single(built.mdp, c, j.algo, c.taus[j.tau_index], j.seed, result.oracle[j.tau_index].value);
  };
  if (c.threads <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) work(i);
  } else {
    std::vector<std::future<void>> pending;
    for (std::size_t w = 0; w < c.threads; ++w)
      pending.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < jobs.size(); i += c.threads) work(i);
      }));
    for (auto& f : pending) f.get();
  }
  result.mdp = std::move(built.mdp);
  return result;
}

/// Writes one CSV per combination, aggregate.csv, oracle.csv and mdp.txt.
inline std::vector<std::filesystem::path> write_results(const ExperimentResult& r, const ExperimentConfig& c,
                                                        const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  auto open = [&](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    written.push_back(p);
    return out;
  };
  for (const auto& t : r.traces) {
    auto out = open(dir / trace_file_name(t));
    write_trace(out, t);
  }
  {
    auto out = open(dir / "aggregate.csv");
    out << "episode,algo,tau,n_seeds,regret_cum_mean,regret_cum_std,regret_instant_mean,regret_instant_std\n";
    for (Algo a : c.algos)
      for (double tau : c.taus) {
        const auto runs = r.select(a, tau);
        const auto rows = aggregate(runs);
        for (std::size_t k = 0; k < rows.size(); ++k)
          out << (k + 1) << ',' << to_string(a) << ',' << format_value(tau) << ',' << runs.size() << ','
              << format_value(rows[k].cum_mean) << ',' << format_value(rows[k].cum_std) << ','
              << format_value(rows[k].instant_mean) << ',' << format_value(rows[k].instant_std) << '\n';
      }
  }
  {
    auto out = open(dir / "oracle.csv");
    out << "tau,optimal_cvar,b_star,mdp_seed\n";
    for (std::size_t i = 0; i < r.taus.size(); ++i)
      out << format_value(r.taus[i]) << ',' << format_value(r.oracle[i].value) << ','
          << format_value(r.oracle[i].b_star) << ',' << r.mdp_seed << '\n';
  }
  {
    auto out = open(dir / "mdp.txt");
    write_mdp(out, r.mdp);
  }
  return written;
}

} // namespace rsdrl
