#include "smbne/optimize.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"

namespace smbne {

namespace {

// Per-run random stream tags. The environment stream is shared by every
// algorithm so configurations run against identical episode sequences.
constexpr std::uint64_t kEnvStream = 1;
constexpr std::uint64_t kSearchStream = 2;
constexpr std::uint64_t kCheckStream = 3;

// Shared true-evaluation bookkeeping: every call runs one episode, archives
// it, and runs the 100-trial solved check whenever the record becomes the
// archive best (ties included, matching elitist recency).
class EpisodeRunner {
 public:
  EpisodeRunner(const EnvSpec& env, int budget, std::uint64_t seed,
                const std::string& algorithm)
      : env_(env),
        budget_(budget),
        env_rng_(Rng::derive(seed, kEnvStream)),
        check_rng_(Rng::derive(seed, kCheckStream)) {
    result_.seed = seed;
    result_.algorithm = algorithm;
    result_.episodes_to_solve = budget;
  }

  bool budget_left() const { return result_.episodes_used < budget_; }
  bool done() const { return result_.solved || !budget_left(); }

  // Returns true while the run should continue.
  bool evaluate(Genotype g) {
    ActiveNetwork net(g);
    EpisodeResult ep = run_episode(env_, net, env_rng_);
    ++result_.episodes_used;
    if (result_.first_reset.empty()) result_.first_reset = ep.trace.front();
    result_.candidate_reward_per_episode.push_back(ep.total_reward);
    archive_.add({std::move(g), ep.fitness, ep.total_reward, std::move(ep.trace),
                  result_.episodes_used});
    result_.best_fitness_per_episode.push_back(archive_.best_fitness());
    if (archive_.best_index() == static_cast<int>(archive_.size()) - 1) {
      if (solved_check(env_, net, check_rng_)) {
        result_.solved = true;
        result_.episodes_to_solve = result_.episodes_used;
      }
    }
    return !done();
  }

  const Archive& archive() const { return archive_; }
  RunResult finish() {
    result_.best_fitness_final = archive_.best_fitness();
    result_.best_genotype = archive_.best().genotype;
    return std::move(result_);
  }
  RunResult& result() { return result_; }

 private:
  const EnvSpec& env_;
  int budget_;
  Rng env_rng_;
  Rng check_rng_;
  Archive archive_;
  RunResult result_;
};

const std::vector<double>& record_phenotype(const ArchiveRecord& rec,
                                            const InputVector& v) {
  if (rec.cached_version != v.version) {
    rec.cached_phenotype = phenotype(ActiveNetwork(rec.genotype), v);
    rec.cached_version = v.version;
  }
  return rec.cached_phenotype;
}

}  // namespace

void es_generations(EsState& state,
                    const std::function<double(const Genotype&)>& score,
                    int generations, double mutation_rate, Rng& rng,
                    const std::function<void(const EsState&)>& on_generation) {
  for (int g = 0; g < generations; ++g) {
    Genotype best_child;
    double best_child_score = 0.0;
    for (int j = 0; j < 4; ++j) {
      Genotype child = mutate_random(state.elitist, mutation_rate, rng);
      double s = score(child);
      if (j == 0 || s <= best_child_score) {  // recency wins ties
        best_child = std::move(child);
        best_child_score = s;
      }
    }
    if (best_child_score <= state.elitist_score) {  // offspring wins ties
      state.elitist = std::move(best_child);
      state.elitist_score = best_child_score;
    }
    if (on_generation) on_generation(state);
  }
}

std::vector<std::size_t> select_model_subset(const Archive& archive, int num_m,
                                             double best_fraction, Rng& rng) {
  if (num_m < 5) throw std::invalid_argument("num_m must be >= 5");
  const std::size_t n = archive.size();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  if (n <= static_cast<std::size_t>(num_m)) return all;

  std::stable_sort(all.begin(), all.end(), [&](std::size_t a, std::size_t b) {
    if (archive[a].fitness != archive[b].fitness)
      return archive[a].fitness < archive[b].fitness;
    return a > b;
  });
  const std::size_t n_best = static_cast<std::size_t>(
      std::ceil(best_fraction * static_cast<double>(num_m)));
  std::vector<std::size_t> chosen(all.begin(), all.begin() + n_best);
  std::vector<std::size_t> pool(all.begin() + n_best, all.end());
  // partial Fisher-Yates draw without replacement
  const std::size_t n_rand = static_cast<std::size_t>(num_m) - n_best;
  for (std::size_t i = 0; i < n_rand; ++i) {
    std::size_t j = i + rng.index(pool.size() - i);
    std::swap(pool[i], pool[j]);
    chosen.push_back(pool[i]);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

Genotype propose_candidate(const KrigingModel& model, const InputVector& v,
                           const Genotype& start, int evals, double rate,
                           Rng& rng) {
  const double y_best = model.best_training_fitness();
  auto neg_ei = [&](const Genotype& g) {
    return -model.expected_improvement(phenotype(ActiveNetwork(g), v), y_best);
  };
  EsState state{start, neg_ei(start)};  // incumbent score is not budgeted
  es_generations(state, neg_ei, evals / 4, rate, rng);
  return state.elitist;
}

RunResult run_smbne(const SmbneConfig& cfg, const EnvSpec& env,
                    const CgpConfig& ccfg, std::uint64_t seed) {
  Rng search_rng = Rng::derive(seed, kSearchStream);
  EpisodeRunner runner(env, cfg.budget, seed, "smbne");

  for (int i = 0; i < cfg.init_size && runner.budget_left(); ++i)
    if (!runner.evaluate(random_genotype(ccfg, search_rng))) break;

  if (!runner.done()) {
    const Archive& archive = runner.archive();
    InputVector v = build_input_vector(cfg.strategy, archive, env, search_rng);
    while (!runner.done()) {
      Genotype candidate;
      try {
        std::vector<std::size_t> subset = select_model_subset(
            archive, cfg.num_m, cfg.best_fraction, search_rng);
        std::vector<std::vector<double>> phenos;
        std::vector<double> fitnesses;
        phenos.reserve(subset.size());
        for (std::size_t idx : subset) {
          phenos.push_back(record_phenotype(archive[idx], v));
          fitnesses.push_back(archive[idx].fitness);
        }
        KrigingModel model = fit_kriging(std::move(phenos), fitnesses);
        candidate = propose_candidate(model, v, archive.best().genotype,
                                      cfg.surrogate_evals_per_iter,
                                      cfg.es_mutation_rate, search_rng);
      } catch (const KrigingFitError&) {
        ++runner.result().model_fit_failures;
        candidate = random_genotype(ccfg, search_rng);
      }
      const double best_before = archive.best_fitness();
      runner.evaluate(std::move(candidate));
      const ArchiveRecord& latest = archive[archive.size() - 1];
      if (cfg.strategy.kind == InputStrategy::Kind::Dyn &&
          latest.fitness < best_before)
        v = update_dynamic(v, latest.trace, latest.fitness);
    }
  }
  return runner.finish();
}

RunResult run_cgp_es(const EnvSpec& env, const CgpConfig& ccfg, double rate,
                     int budget, std::uint64_t seed) {
  Rng search_rng = Rng::derive(seed, kSearchStream);
  EpisodeRunner runner(env, budget, seed, "cgp");
  constexpr int kInitSize = 20;
  for (int i = 0; i < kInitSize && runner.budget_left(); ++i)
    if (!runner.evaluate(random_genotype(ccfg, search_rng))) break;
  // evolution starts from the best of the initial set; the archive's
  // recency-on-ties best is exactly the (1+4)-ES elitist
  while (!runner.done()) {
    const Genotype parent = runner.archive().best().genotype;
    for (int j = 0; j < 4 && !runner.done(); ++j)
      runner.evaluate(mutate_random(parent, rate, search_rng));
  }
  return runner.finish();
}

RunResult run_random_search(const EnvSpec& env, const CgpConfig& ccfg, int budget,
                            std::uint64_t seed) {
  Rng search_rng = Rng::derive(seed, kSearchStream);
  EpisodeRunner runner(env, budget, seed, "rs");
  while (!runner.done()) runner.evaluate(random_genotype(ccfg, search_rng));
  return runner.finish();
}

std::string run_result_to_json(const RunResult& r) {
  nlohmann::json j = {
      {"seed", r.seed},
      {"algorithm", r.algorithm},
      {"solved", r.solved},
      {"episodes_used", r.episodes_used},
      {"episodes_to_solve", r.episodes_to_solve},
      {"best_fitness", r.best_fitness_final},
      {"model_fit_failures", r.model_fit_failures},
      {"best_fitness_per_episode", r.best_fitness_per_episode},
      {"candidate_reward_per_episode", r.candidate_reward_per_episode},
  };
  if (!r.error.empty()) j["error"] = r.error;
  return j.dump();
}

}  // namespace smbne
