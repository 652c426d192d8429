#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smbne/envs.hpp"
#include "smbne/optimize.hpp"
#include "smbne/phd.hpp"
#include "smbne/stats.hpp"

namespace smbne {

struct AlgorithmConfig {
  std::string label;
  std::string algorithm = "smbne";  // "smbne" | "cgp" | "rs"
  int budget = 3020;
  double mutation_rate = 0.05;  // cgp random mutation
  InputStrategy strategy = InputStrategy::dyn(5);
  int surrogate_evals = 1000;
  int num_m = 100;
  double best_fraction = 0.2;
  int init_size = 20;
  double es_mutation_rate = 0.05;  // smbne surrogate search
};

struct ExperimentPlan {
  EnvSpec env = EnvSpec::cartpole();
  std::vector<AlgorithmConfig> configs;
  int repeats = 30;
  std::uint64_t base_seed = 1;
  std::string output_dir = "out";
  int workers = 0;  // 0: hardware concurrency

  void validate() const;
};

struct ResultTable {
  ExperimentPlan plan;
  std::vector<std::vector<RunResult>> runs;  // [config][repeat]
  std::vector<double> means;
  std::vector<double> sds;
  KruskalResult kw;
  std::vector<std::vector<double>> conover;

  std::vector<double> episodes(std::size_t config) const;
};

// Plan files are declarative key-value documents; see README for the format.
ExperimentPlan parse_plan_file(const std::string& path);
ExperimentPlan parse_plan_text(const std::string& text);

RunResult run_config(const AlgorithmConfig& cfg, const EnvSpec& env,
                     std::uint64_t seed);

// Repeat j of every configuration uses seed base_seed + j. Independent runs
// execute in parallel up to the worker limit; assembly is deterministic by
// (config, repeat) index. Run-level failures are recorded per cell.
ResultTable run_plan(const ExperimentPlan& plan);

// Writes results.csv, stats.json, runs/<label>_seed<seed>.json and
// convergence/<label>.csv under dir.
void emit_results(const ResultTable& table, const std::string& dir);

// Reads back the per-seed columns of a results.csv written by emit_results.
struct StoredResults {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> episodes;
};
StoredResults load_results_csv(const std::string& path);

}  // namespace smbne
