#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "smbne/harness.hpp"

namespace {

using namespace smbne;

AlgorithmConfig* add_config_options(CLI::App* cmd, AlgorithmConfig* cfg,
                                    std::string* strategy) {
  cmd->add_option("--algorithm", cfg->algorithm, "smbne | cgp | rs")
      ->check(CLI::IsMember({"smbne", "cgp", "rs"}));
  cmd->add_option("--budget", cfg->budget, "episode budget");
  cmd->add_option("--mutation-rate", cfg->mutation_rate,
                  "cgp random-mutation probability per gene");
  cmd->add_option("--strategy", *strategy, "dyn | init | lhs | pre");
  cmd->add_option("--num-s", cfg->strategy.num_s,
                  "traces contributing to the input vector");
  cmd->add_option("--sample-count", cfg->strategy.sample_count,
                  "LHS sample count (0: 800 scalars total)");
  cmd->add_option("--pre-path", cfg->strategy.pre_path,
                  "reference trace fixture for the pre strategy");
  cmd->add_option("--surrogate-evals", cfg->surrogate_evals,
                  "surrogate evaluations per iteration");
  return cfg;
}

void finish_strategy(AlgorithmConfig& cfg, const std::string& strategy) {
  if (strategy == "dyn") cfg.strategy.kind = InputStrategy::Kind::Dyn;
  else if (strategy == "init") cfg.strategy.kind = InputStrategy::Kind::Init;
  else if (strategy == "lhs") cfg.strategy.kind = InputStrategy::Kind::Lhs;
  else if (strategy == "pre") cfg.strategy.kind = InputStrategy::Kind::Pre;
  else throw CLI::ValidationError("--strategy", "unknown strategy " + strategy);
}

int cmd_run(const std::string& plan_path) {
  ExperimentPlan plan = parse_plan_file(plan_path);
  ResultTable table = run_plan(plan);
  emit_results(table, plan.output_dir);
  for (std::size_t c = 0; c < plan.configs.size(); ++c)
    std::printf("%-24s mean %10.2f  sd %10.2f\n", plan.configs[c].label.c_str(),
                table.means[c], table.sds[c]);
  if (plan.configs.size() >= 2)
    std::printf("Kruskal-Wallis H = %.4f, p = %.6g\n", table.kw.h, table.kw.p);
  std::printf("results written to %s\n", plan.output_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate model-based neuroevolution benchmark"};
  app.require_subcommand(1);

  std::string plan_path;
  CLI::App* run = app.add_subcommand("run", "execute an experiment plan file");
  run->add_option("plan", plan_path, "plan file")->required();

  AlgorithmConfig solve_cfg;
  std::string solve_env = "cartpole", solve_strategy = "dyn", solve_out;
  std::uint64_t solve_seed = 1;
  CLI::App* solve = app.add_subcommand("solve", "run a single configuration");
  add_config_options(solve, &solve_cfg, &solve_strategy);
  solve->add_option("--env", solve_env, "cartpole | mountaincar");
  solve->add_option("--seed", solve_seed, "run seed");
  solve->add_option("--out", solve_out, "write the run result JSON here");

  std::string stats_path, stats_out;
  CLI::App* stats = app.add_subcommand("stats", "recompute statistics from a results.csv");
  stats->add_option("results", stats_path, "results.csv")->required();
  stats->add_option("--out", stats_out, "write stats JSON here");

  AlgorithmConfig trace_cfg;
  std::string trace_env = "cartpole", trace_strategy = "dyn", trace_out = "trace.csv";
  std::uint64_t trace_seed = 1;
  CLI::App* trace = app.add_subcommand(
      "trace", "run one configuration and export the best network's episode trace");
  add_config_options(trace, &trace_cfg, &trace_strategy);
  trace->add_option("--env", trace_env, "cartpole | mountaincar");
  trace->add_option("--seed", trace_seed, "run seed");
  trace->add_option("--out", trace_out, "trace CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(plan_path);

    if (solve->parsed()) {
      finish_strategy(solve_cfg, solve_strategy);
      const EnvSpec env = EnvSpec::by_name(solve_env);
      RunResult r = run_config(solve_cfg, env, solve_seed);
      std::printf("%s seed %llu: %s after %d episodes, best fitness %.4f\n",
                  r.algorithm.c_str(), static_cast<unsigned long long>(r.seed),
                  r.solved ? "solved" : "not solved", r.episodes_used,
                  r.best_fitness_final);
      if (!solve_out.empty()) {
        std::ofstream out(solve_out);
        out << run_result_to_json(r) << '\n';
      }
      return 0;
    }

    if (stats->parsed()) {
      StoredResults stored = load_results_csv(stats_path);
      KruskalResult kw = kruskal_wallis(stored.episodes);
      auto post = conover_posthoc(stored.episodes);
      std::printf("Kruskal-Wallis H = %.4f, p = %.6g\n", kw.h, kw.p);
      for (std::size_t i = 0; i < stored.labels.size(); ++i)
        for (std::size_t j = i + 1; j < stored.labels.size(); ++j)
          std::printf("%-24s vs %-24s p = %.6g\n", stored.labels[i].c_str(),
                      stored.labels[j].c_str(), post[i][j]);
      if (!stats_out.empty()) {
        std::ofstream out(stats_out);
        out << "{\"H\":" << kw.h << ",\"p\":" << kw.p << "}\n";
      }
      return 0;
    }

    if (trace->parsed()) {
      finish_strategy(trace_cfg, trace_strategy);
      const EnvSpec env = EnvSpec::by_name(trace_env);
      RunResult r = run_config(trace_cfg, env, trace_seed);
      ActiveNetwork net(r.best_genotype);
      Rng rng = Rng::derive(trace_seed, 99);
      EpisodeResult ep = run_episode(env, net, rng);
      std::ofstream out(trace_out);
      if (!out) throw std::runtime_error("cannot write " + trace_out);
      out << trace_to_csv(env, ep);
      std::printf("trace of best network (reward %.1f) written to %s\n",
                  ep.total_reward, trace_out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
