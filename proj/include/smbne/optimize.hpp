#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "smbne/archive.hpp"
#include "smbne/cgp.hpp"
#include "smbne/envs.hpp"
#include "smbne/kriging.hpp"
#include "smbne/phd.hpp"
#include "smbne/rng.hpp"

namespace smbne {

struct SmbneConfig {
  int init_size = 20;
  int budget = 3020;  // true episodes, including the initial design
  InputStrategy strategy = InputStrategy::dyn(5);
  int num_m = 100;
  double best_fraction = 0.2;
  int surrogate_evals_per_iter = 1000;
  double es_mutation_rate = 0.05;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::string algorithm;
  bool solved = false;
  int episodes_used = 0;
  int episodes_to_solve = 0;  // budget when unsolved
  double best_fitness_final = 0.0;
  std::vector<double> best_fitness_per_episode;
  std::vector<double> candidate_reward_per_episode;
  std::vector<double> first_reset;  // first episode's initial observation
  int model_fit_failures = 0;
  Genotype best_genotype;
  std::string error;  // run-level failure note, empty on success
};

RunResult run_smbne(const SmbneConfig& cfg, const EnvSpec& env,
                    const CgpConfig& ccfg, std::uint64_t seed);
RunResult run_cgp_es(const EnvSpec& env, const CgpConfig& ccfg, double rate,
                     int budget, std::uint64_t seed);
RunResult run_random_search(const EnvSpec& env, const CgpConfig& ccfg, int budget,
                            std::uint64_t seed);

// Indices into the archive: ceil(best_fraction * num_m) best-fitness records
// plus a random sample without replacement of the rest, or everything when
// the archive is small enough.
std::vector<std::size_t> select_model_subset(const Archive& archive, int num_m,
                                             double best_fraction, Rng& rng);

// (1+4)-ES on surrogate expected improvement, started from the incumbent.
// Consumes exactly `evals` surrogate evaluations (4 per generation); ties
// between parent and offspring favor the offspring.
Genotype propose_candidate(const KrigingModel& model, const InputVector& v,
                           const Genotype& start, int evals, double rate, Rng& rng);

// Generic minimizing (1+4)-ES step driver shared by the true-fitness loop and
// the surrogate search; exposed so the elitist tie rule is directly testable.
// `score` is called once per offspring; `on_generation` (optional) observes
// the elitist after each generation.
struct EsState {
  Genotype elitist;
  double elitist_score = 0.0;
};
void es_generations(EsState& state, const std::function<double(const Genotype&)>& score,
                    int generations, double mutation_rate, Rng& rng,
                    const std::function<void(const EsState&)>& on_generation = {});

std::string run_result_to_json(const RunResult& r);

}  // namespace smbne
