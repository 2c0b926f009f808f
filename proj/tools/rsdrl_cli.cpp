// rsdrl: run regret experiments, fit sqrt(K) curves, emit generated MDPs.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "rsdrl/rsdrl.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override) {
  rsdrl::ExperimentConfig cfg = rsdrl::parse_config_file(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  const rsdrl::ExperimentResult result = rsdrl::run_experiment(cfg);
  const auto files = rsdrl::write_results(result, cfg, cfg.out_dir);
  std::printf("mdp_seed %llu\n", static_cast<unsigned long long>(result.mdp_seed));
  for (std::size_t i = 0; i < result.taus.size(); ++i)
    std::printf("tau %s optimal_cvar %s\n", rsdrl::format_value(result.taus[i]).c_str(),
                rsdrl::format_value(result.oracle[i].value).c_str());
  for (rsdrl::Algo a : cfg.algos)
    for (double tau : cfg.taus) {
      const auto runs = result.select(a, tau);
      const auto rows = rsdrl::aggregate(runs);
      std::printf("%-12s tau %-4s regret(K) %10.4f +- %.4f\n", rsdrl::to_string(a).c_str(),
                  rsdrl::format_value(tau).c_str(), rows.back().cum_mean, rows.back().cum_std);
    }
  std::printf("wrote %zu files to %s\n", files.size(), cfg.out_dir.c_str());
  return 0;
}

int cmd_fit(const std::string& trace_path) {
  std::ifstream in(trace_path);
  if (!in) throw rsdrl::IoError("cannot open trace '" + trace_path + "'");
  const auto traces = rsdrl::read_traces(in);
  std::printf("algo,tau,seed,episodes,coefficient,r_squared\n");
  for (const auto& t : traces) {
    const rsdrl::SqrtFit fit = rsdrl::sqrt_fit(t.cumulative);
    std::printf("%s,%s,%llu,%zu,%s,%s\n", rsdrl::to_string(t.algo).c_str(), rsdrl::format_value(t.tau).c_str(),
                static_cast<unsigned long long>(t.seed), t.cumulative.size(),
                rsdrl::format_value(fit.coefficient).c_str(), rsdrl::format_value(fit.r_squared).c_str());
  }
  return 0;
}

int cmd_gen(std::uint64_t seed, const std::string& out_path, const std::string& config_path) {
  rsdrl::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = rsdrl::parse_config_file(config_path);
  const auto lin = rsdrl::make_zero_mean_mdp(cfg.n_states, cfg.n_actions, cfg.dim, cfg.horizon, cfg.n_rewards, seed);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw rsdrl::IoError("cannot write '" + out_path + "'");
  rsdrl::write_mdp(out, lin);
  if (!out) throw rsdrl::IoError("write failed for '" + out_path + "'");
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"risk-sensitive distributional RL experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* run = app.add_subcommand("run", "run a regret experiment");
  run->add_option("--config", config_path, "config file (key = value lines)")->required();
  run->add_option("--out", out_dir, "output directory (overrides out_dir)");

  std::string trace_path;
  auto* fit = app.add_subcommand("fit", "fit cumulative regret to c sqrt(k)");
  fit->add_option("--trace", trace_path, "trace csv")->required();

  std::uint64_t seed = 0;
  std::string mdp_out, gen_config;
  auto* gen = app.add_subcommand("gen-mdp", "write a generated zero-mean linear MDP");
  gen->add_option("--seed", seed, "generator seed")->required();
  gen->add_option("--out", mdp_out, "output path")->required();
  gen->add_option("--config", gen_config, "take S, A, d, H, M from a config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir);
    if (*fit) return cmd_fit(trace_path);
    if (*gen) return cmd_gen(seed, mdp_out, gen_config);
  } catch (const rsdrl::ConfigError& e) {
    std::fprintf(stderr, "config error [%s]: %s\n", e.key().c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
