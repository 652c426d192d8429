#include "smbne/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace smbne {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string sanitize(const std::string& label) {
  std::string out;
  for (char c : label)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

void apply_config_key(AlgorithmConfig& cfg, const std::string& key,
                      const std::string& value) {
  if (key == "algorithm") cfg.algorithm = value;
  else if (key == "budget") cfg.budget = std::stoi(value);
  else if (key == "mutation_rate") cfg.mutation_rate = std::stod(value);
  else if (key == "strategy") {
    if (value == "dyn") cfg.strategy.kind = InputStrategy::Kind::Dyn;
    else if (value == "init") cfg.strategy.kind = InputStrategy::Kind::Init;
    else if (value == "lhs") cfg.strategy.kind = InputStrategy::Kind::Lhs;
    else if (value == "pre") cfg.strategy.kind = InputStrategy::Kind::Pre;
    else throw std::invalid_argument("unknown strategy: " + value);
  } else if (key == "num_s") cfg.strategy.num_s = std::stoi(value);
  else if (key == "sample_count") cfg.strategy.sample_count = std::stoi(value);
  else if (key == "pre_path") cfg.strategy.pre_path = value;
  else if (key == "surrogate_evals") cfg.surrogate_evals = std::stoi(value);
  else if (key == "num_m") cfg.num_m = std::stoi(value);
  else if (key == "best_fraction") cfg.best_fraction = std::stod(value);
  else if (key == "init_size") cfg.init_size = std::stoi(value);
  else if (key == "es_mutation_rate") cfg.es_mutation_rate = std::stod(value);
  else throw std::invalid_argument("unknown config key: " + key);
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sd_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace

void ExperimentPlan::validate() const {
  if (repeats < 2) throw std::invalid_argument("repeats must be >= 2");
  if (configs.empty()) throw std::invalid_argument("plan has no configurations");
  for (std::size_t i = 0; i < configs.size(); ++i)
    for (std::size_t j = i + 1; j < configs.size(); ++j)
      if (configs[i].label == configs[j].label)
        throw std::invalid_argument("duplicate config label: " + configs[i].label);
}

ExperimentPlan parse_plan_text(const std::string& text) {
  ExperimentPlan plan;
  std::istringstream in(text);
  std::string line;
  AlgorithmConfig* current = nullptr;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("malformed plan line: " + line);
    const std::string key = trim(line.substr(0, colon));
    const std::string value = trim(line.substr(colon + 1));
    if (key == "config") {
      plan.configs.push_back({});
      current = &plan.configs.back();
      current->label = value;
    } else if (current) {
      apply_config_key(*current, key, value);
    } else if (key == "environment") {
      plan.env = EnvSpec::by_name(value);
    } else if (key == "repeats") {
      plan.repeats = std::stoi(value);
    } else if (key == "base_seed") {
      plan.base_seed = std::stoull(value);
    } else if (key == "output") {
      plan.output_dir = value;
    } else if (key == "workers") {
      plan.workers = std::stoi(value);
    } else {
      throw std::invalid_argument("unknown plan key: " + key);
    }
  }
  plan.validate();
  return plan;
}

ExperimentPlan parse_plan_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plan file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan_text(ss.str());
}

RunResult run_config(const AlgorithmConfig& cfg, const EnvSpec& env,
                     std::uint64_t seed) {
  const CgpConfig ccfg = env.default_cgp_config();
  if (cfg.algorithm == "smbne") {
    SmbneConfig sc;
    sc.init_size = cfg.init_size;
    sc.budget = cfg.budget;
    sc.strategy = cfg.strategy;
    sc.num_m = cfg.num_m;
    sc.best_fraction = cfg.best_fraction;
    sc.surrogate_evals_per_iter = cfg.surrogate_evals;
    sc.es_mutation_rate = cfg.es_mutation_rate;
    return run_smbne(sc, env, ccfg, seed);
  }
  if (cfg.algorithm == "cgp")
    return run_cgp_es(env, ccfg, cfg.mutation_rate, cfg.budget, seed);
  if (cfg.algorithm == "rs")
    return run_random_search(env, ccfg, cfg.budget, seed);
  throw std::invalid_argument("unknown algorithm: " + cfg.algorithm);
}

std::vector<double> ResultTable::episodes(std::size_t config) const {
  std::vector<double> out;
  for (const RunResult& r : runs[config])
    out.push_back(static_cast<double>(r.episodes_to_solve));
  return out;
}

ResultTable run_plan(const ExperimentPlan& plan) {
  plan.validate();
  ResultTable table;
  table.plan = plan;
  const std::size_t n_configs = plan.configs.size();
  const std::size_t n_jobs = n_configs * static_cast<std::size_t>(plan.repeats);
  table.runs.assign(n_configs, std::vector<RunResult>(plan.repeats));

  unsigned workers = plan.workers > 0 ? static_cast<unsigned>(plan.workers)
                                      : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, n_jobs));

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    while (true) {
      const std::size_t job = next.fetch_add(1);
      if (job >= n_jobs) return;
      const std::size_t c = job / plan.repeats;
      const int r = static_cast<int>(job % plan.repeats);
      const std::uint64_t seed = plan.base_seed + static_cast<std::uint64_t>(r);
      RunResult& cell = table.runs[c][r];
      try {
        cell = run_config(plan.configs[c], plan.env, seed);
      } catch (const std::exception& e) {
        cell = RunResult{};
        cell.seed = seed;
        cell.algorithm = plan.configs[c].algorithm;
        cell.episodes_to_solve = plan.configs[c].budget;
        cell.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<std::vector<double>> groups;
  for (std::size_t c = 0; c < n_configs; ++c) {
    const std::vector<double> eps = table.episodes(c);
    table.means.push_back(mean_of(eps));
    table.sds.push_back(sd_of(eps));
    groups.push_back(eps);
  }
  if (n_configs >= 2) {
    table.kw = kruskal_wallis(groups);
    table.conover = conover_posthoc(groups);
  } else {
    table.conover.assign(1, std::vector<double>(1, 1.0));
  }
  return table;
}

void emit_results(const ResultTable& table, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::create_directories(dir + "/convergence");
  fs::create_directories(dir + "/runs");

  const int repeats = table.plan.repeats;
  {
    std::ofstream csv(dir + "/results.csv");
    if (!csv) throw std::runtime_error("cannot write " + dir + "/results.csv");
    csv << "label,mean,sd,solved_runs";
    for (int r = 0; r < repeats; ++r) csv << ",ep_" << r;
    for (int r = 0; r < repeats; ++r) csv << ",solved_" << r;
    csv << '\n';
    for (std::size_t c = 0; c < table.plan.configs.size(); ++c) {
      int solved = 0;
      for (const RunResult& r : table.runs[c]) solved += r.solved ? 1 : 0;
      csv << table.plan.configs[c].label << ',' << fmt(table.means[c]) << ','
          << fmt(table.sds[c]) << ',' << solved;
      for (const RunResult& r : table.runs[c]) csv << ',' << r.episodes_to_solve;
      for (const RunResult& r : table.runs[c]) csv << ',' << (r.solved ? 1 : 0);
      csv << '\n';
    }
  }
  {
    nlohmann::json j;
    j["alpha"] = 0.05;
    j["H"] = table.kw.h;
    j["p"] = table.kw.p;
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& cfg : table.plan.configs) labels.push_back(cfg.label);
    j["labels"] = labels;
    j["conover"] = table.conover;
    std::ofstream out(dir + "/stats.json");
    out << j.dump(2) << '\n';
  }
  for (std::size_t c = 0; c < table.plan.configs.size(); ++c) {
    const std::string label = sanitize(table.plan.configs[c].label);
    for (const RunResult& r : table.runs[c]) {
      std::ofstream out(dir + "/runs/" + label + "_seed" +
                        std::to_string(r.seed) + ".json");
      out << run_result_to_json(r) << '\n';
    }
    std::ofstream conv(dir + "/convergence/" + label + ".csv");
    conv << "iteration,mean_reward,sd_reward\n";
    std::size_t max_len = 0;
    for (const RunResult& r : table.runs[c])
      max_len = std::max(max_len, r.candidate_reward_per_episode.size());
    for (std::size_t i = 0; i < max_len; ++i) {
      std::vector<double> vals;
      for (const RunResult& r : table.runs[c])
        if (i < r.candidate_reward_per_episode.size())
          vals.push_back(r.candidate_reward_per_episode[i]);
      conv << i << ',' << fmt(mean_of(vals)) << ',' << fmt(sd_of(vals)) << '\n';
    }
  }
}

StoredResults load_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open results file: " + path);
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("empty results file: " + path);
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
  }
  std::vector<std::size_t> ep_cols;
  for (std::size_t i = 0; i < cols.size(); ++i)
    if (cols[i].rfind("ep_", 0) == 0) ep_cols.push_back(i);
  if (ep_cols.empty())
    throw std::runtime_error("no ep_ columns in " + path);

  StoredResults out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    out.labels.push_back(cells.at(0));
    std::vector<double> eps;
    for (std::size_t i : ep_cols) eps.push_back(std::stod(cells.at(i)));
    out.episodes.push_back(std::move(eps));
  }
  return out;
}

}  // namespace smbne
