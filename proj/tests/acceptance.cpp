// End-to-end acceptance suite. Each criterion prints exactly one PASS/FAIL
// line; the exit code is the number of failed criteria.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "smbne/harness.hpp"

using namespace smbne;

namespace {

int g_failures = 0;

void report(int criterion, const char* title, bool pass, const std::string& detail) {
  std::printf("criterion %d [%s]: %s (%s)\n", criterion, title,
              pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

std::vector<double> random_phenotype(std::size_t len, Rng& rng) {
  std::vector<double> p(len);
  for (double& x : p) x = rng.uniform(-1.0, 1.0);
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Criteria 1, 2, 4: CartPole benchmark set (shared 30-seed experiment).

ResultTable run_cartpole_set() {
  const char* plan_text = R"(environment: cartpole
repeats: 30
base_seed: 1
output: /tmp/acceptance_cartpole
workers: 1

config: smbne-dyn10
algorithm: smbne
budget: 3020
strategy: dyn
num_s: 10

config: smbne-dyn5
algorithm: smbne
budget: 3020
strategy: dyn
num_s: 5

config: cgp-mut5
algorithm: cgp
budget: 3020
mutation_rate: 0.05

config: cgp-mut2
algorithm: cgp
budget: 3020
mutation_rate: 0.02

config: rs
algorithm: rs
budget: 3020
)";
  ExperimentPlan plan = parse_plan_text(plan_text);
  ResultTable table = run_plan(plan);
  emit_results(table, plan.output_dir);
  return table;
}

void criteria_cartpole(const ResultTable& t) {
  // config order as defined above
  const std::size_t dyn10 = 0, dyn5 = 1, cgp5 = 2, rs = 4;

  int solved = 0;
  for (const RunResult& r : t.runs[dyn10]) solved += r.solved ? 1 : 0;
  const double dyn10_mean = mean_of(t.episodes(dyn10));
  {
    char buf[160];
    std::snprintf(buf, sizeof buf, "solved %d/30, mean episodes-to-solve %.2f",
                  solved, dyn10_mean);
    report(1, "cartpole smbne efficiency", solved == 30 && dyn10_mean <= 120.0, buf);
  }
  {
    const double cgp_mean = mean_of(t.episodes(cgp5));
    const double dyn5_mean = mean_of(t.episodes(dyn5));
    const double best_dyn = std::min(dyn10_mean, dyn5_mean);
    char buf[160];
    std::snprintf(buf, sizeof buf, "smbne dyn mean %.2f vs cgp mut5 mean %.2f",
                  best_dyn, cgp_mean);
    report(2, "cartpole baseline gap", best_dyn <= 0.5 * cgp_mean, buf);
  }
  {
    bool pass = t.kw.p < 0.05;
    double worst_p = 0.0;
    for (std::size_t smb : {dyn10, dyn5})
      for (std::size_t other : {cgp5, std::size_t{3}, rs}) {
        worst_p = std::max(worst_p, t.conover[smb][other]);
        if (t.conover[smb][other] >= 0.05) pass = false;
      }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "kruskal-wallis p %.3g, worst smbne-vs-baseline conover p %.3g",
                  t.kw.p, worst_p);
    report(4, "cartpole statistics", pass, buf);
  }
}

// ---------------------------------------------------------------------------
// Criterion 3: MountainCar efficiency and random-search floor.

void criterion_mountaincar() {
  const char* plan_text = R"(environment: mountaincar
repeats: 30
base_seed: 1
output: /tmp/acceptance_mountaincar
workers: 1

config: smbne-dyn5
algorithm: smbne
budget: 5020
strategy: dyn
num_s: 5

config: rs
algorithm: rs
budget: 5020
)";
  ExperimentPlan plan = parse_plan_text(plan_text);
  ResultTable table = run_plan(plan);
  emit_results(table, plan.output_dir);

  const double smb_mean = mean_of(table.episodes(0));
  int smb_solved = 0, rs_solved = 0;
  for (const RunResult& r : table.runs[0]) smb_solved += r.solved ? 1 : 0;
  for (const RunResult& r : table.runs[1]) rs_solved += r.solved ? 1 : 0;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "smbne mean episodes-to-solve %.2f (solved %d/30), rs solved %d/30",
                smb_mean, smb_solved, rs_solved);
  report(3, "mountaincar efficiency", smb_mean <= 450.0 && rs_solved == 0, buf);
}

// ---------------------------------------------------------------------------
// Criterion 5: Kriging property suite.

void criterion_kriging() {
  Rng rng(501);
  bool pass = true;
  std::string why = "interpolation <= 1e-4, var >= 0, ei >= 0, oracle <= 1e-8";

  // interpolation and non-negativity on a 15-point model
  {
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < 15; ++i) {
      xs.push_back(random_phenotype(6, rng));
      ys.push_back(rng.uniform(-2.0, 2.0));
    }
    KrigingModel m = fit_kriging(xs, ys);
    if (m.nugget() != 1e-8) pass = false;
    for (int i = 0; i < 15; ++i) {
      auto [mean, var] = m.predict(xs[i]);
      if (std::fabs(mean - ys[i]) > 1e-4) pass = false;
      if (var < 0.0) pass = false;
    }
    for (int i = 0; i < 500; ++i) {
      auto x = random_phenotype(6, rng);
      auto [mean, var] = m.predict(x);
      if (var < 0.0) pass = false;
      if (m.expected_improvement(x, m.best_training_fitness()) < 0.0) pass = false;
    }
  }

  // dense-solve oracle for n <= 8: explicit full-pivot inverse
  for (int trial = 0; trial < 20 && pass; ++trial) {
    const int n = 3 + static_cast<int>(rng.index(6));
    const int dim = 2 + static_cast<int>(rng.index(4));
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < n; ++i) {
      xs.push_back(random_phenotype(dim, rng));
      ys.push_back(rng.uniform(-2.0, 2.0));
    }
    KrigingModel m = fit_kriging(xs, ys);
    Eigen::MatrixXd r(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        r(i, j) = kernel_phd(xs[i], xs[j], m.theta()) + (i == j ? m.nugget() : 0.0);
    const Eigen::MatrixXd rinv = r.fullPivLu().inverse();
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), n);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const double mu = ones.dot(rinv * y) / ones.dot(rinv * ones);
    const Eigen::VectorXd resid = y - mu * ones;
    const double sigma2 = resid.dot(rinv * resid) / n;
    for (int q = 0; q < 25; ++q) {
      auto x = random_phenotype(dim, rng);
      Eigen::VectorXd k(n);
      for (int i = 0; i < n; ++i) k(i) = kernel_phd(xs[i], x, m.theta());
      const double omean = mu + k.dot(rinv * resid);
      const double ovar = std::max(0.0, sigma2 * (1.0 - k.dot(rinv * k)));
      auto [mean, var] = m.predict(x);
      if (std::fabs(mean - omean) > 1e-8 * (1.0 + std::fabs(omean))) pass = false;
      if (std::fabs(var - ovar) > 1e-8 * (1.0 + std::fabs(ovar))) pass = false;
    }
  }
  report(5, "kriging properties", pass, why);
}

// ---------------------------------------------------------------------------
// Criterion 6: kernel Gram matrices are positive semi-definite.

void criterion_kernel() {
  Rng rng(601);
  double min_eig = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng.index(46);  // <= 50 phenotypes
    const std::size_t dim = 4 + rng.index(60);
    const double theta = std::pow(10.0, rng.uniform(-4.0, 1.0));
    std::vector<std::vector<double>> ps;
    for (std::size_t i = 0; i < n; ++i) ps.push_back(random_phenotype(dim, rng));
    Eigen::MatrixXd gram(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        gram(i, j) = kernel_phd(ps[i], ps[j], theta);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "minimum eigenvalue over 100 gram matrices %.3g",
                min_eig);
  report(6, "kernel validity", min_eig >= -1e-8, buf);
}

// ---------------------------------------------------------------------------
// Criterion 7: active-subgraph decoding vs brute force; passive-node
// evaluation equals active-only evaluation exactly.

std::vector<int> brute_force_active(const Genotype& g) {
  const int ni = g.config.num_inputs;
  std::vector<bool> mark(g.nodes.size(), false);
  std::vector<int> stack;
  for (int slot : g.outputs)
    if (slot >= ni) stack.push_back(slot - ni);
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    if (mark[node]) continue;
    mark[node] = true;
    for (int src : g.nodes[node].connections)
      if (src >= ni) stack.push_back(src - ni);
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < mark.size(); ++i)
    if (mark[i]) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<double> full_forward(const Genotype& g, const std::vector<double>& in) {
  std::vector<double> slots(g.config.num_slots());
  for (int i = 0; i < g.config.num_inputs; ++i) slots[i] = in[i];
  for (std::size_t j = 0; j < g.nodes.size(); ++j) {
    double acc = 0.0;
    for (int a = 0; a < g.config.arity; ++a)
      acc += g.nodes[j].weights[a] * slots[g.nodes[j].connections[a]];
    slots[g.config.num_inputs + j] =
        apply_transfer(g.config.function_set[g.nodes[j].function], acc);
  }
  std::vector<double> out;
  for (int slot : g.outputs) out.push_back(slots[slot]);
  return out;
}

void criterion_decode() {
  Rng rng(701);
  bool pass = true;
  for (int trial = 0; trial < 10000 && pass; ++trial) {
    CgpConfig c;
    c.num_inputs = 2 + static_cast<int>(rng.index(4));
    c.num_outputs = 1 + static_cast<int>(rng.index(3));
    c.num_nodes = 1 + static_cast<int>(rng.index(60));
    c.arity = 1 + static_cast<int>(rng.index(6));
    Genotype g = random_genotype(c, rng);
    ActiveNetwork net(g);
    if (net.active_nodes() != brute_force_active(g)) pass = false;
    std::vector<double> in(c.num_inputs);
    for (double& x : in) x = rng.uniform(-1.0, 1.0);
    if (net.forward(in) != full_forward(g, in)) pass = false;
  }
  report(7, "cgp decode oracle", pass,
         "10^4 random genotypes, reverse-traversal + passive-evaluation oracles");
}

// ---------------------------------------------------------------------------
// Criterion 8: environment golden transitions and physics clamps.

EnvState cartpole_oracle(const EnvState& s, int action) {
  const double force = action == 1 ? 10.0 : -10.0;
  const double ct = std::cos(s.v[2]), st = std::sin(s.v[2]);
  const double temp = (force + 0.05 * s.v[3] * s.v[3] * st) / 1.1;
  const double ta =
      (9.8 * st - ct * temp) / (0.5 * (4.0 / 3.0 - 0.1 * ct * ct / 1.1));
  const double xa = temp - 0.05 * ta * ct / 1.1;
  EnvState n;
  n.v = {s.v[0] + 0.02 * s.v[1], s.v[1] + 0.02 * xa, s.v[2] + 0.02 * s.v[3],
         s.v[3] + 0.02 * ta};
  return n;
}

EnvState mountaincar_oracle(const EnvState& s, int action) {
  double vel = s.v[1] + (action - 1) * 0.001 - std::cos(3.0 * s.v[0]) * 0.0025;
  vel = std::clamp(vel, -0.07, 0.07);
  double pos = std::clamp(s.v[0] + vel, -1.2, 0.6);
  if (pos <= -1.2 && vel < 0.0) vel = 0.0;
  EnvState n;
  n.v = {pos, vel, 0.0, 0.0};
  return n;
}

void criterion_envs() {
  Rng rng(801);
  bool pass = true;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    EnvState s;
    s.v = {rng.uniform(-2.0, 2.0), rng.uniform(-3.0, 3.0), rng.uniform(-0.2, 0.2),
           rng.uniform(-3.0, 3.0)};
    const int a = static_cast<int>(rng.index(2));
    const EnvState got = step(EnvSpec::cartpole(), s, a).state;
    const EnvState expect = cartpole_oracle(s, a);
    for (int d = 0; d < 4; ++d)
      worst = std::max(worst, std::fabs(got.v[d] - expect.v[d]) /
                                  std::max(1.0, std::fabs(expect.v[d])));
  }
  for (int i = 0; i < 100; ++i) {
    EnvState s;
    s.v = {rng.uniform(-1.2, 0.6), rng.uniform(-0.07, 0.07), 0.0, 0.0};
    const int a = static_cast<int>(rng.index(3));
    const EnvState got = step(EnvSpec::mountain_car(), s, a).state;
    const EnvState expect = mountaincar_oracle(s, a);
    for (int d = 0; d < 2; ++d)
      worst = std::max(worst, std::fabs(got.v[d] - expect.v[d]) /
                                  std::max(1.0, std::fabs(expect.v[d])));
  }
  if (worst > 1e-12) pass = false;

  EnvState s = reset(EnvSpec::mountain_car(), rng);
  for (int i = 0; i < 100000; ++i) {
    s = step(EnvSpec::mountain_car(), s, static_cast<int>(rng.index(3))).state;
    if (s.v[0] < -1.2 || s.v[0] > 0.6 || s.v[1] < -0.07 || s.v[1] > 0.07)
      pass = false;
    if (s.v[0] >= 0.5) s = reset(EnvSpec::mountain_car(), rng);
  }
  char buf[120];
  std::snprintf(buf, sizeof buf,
                "worst single-step relative error %.3g, clamps held for 10^5 steps",
                worst);
  report(8, "environment goldens", pass, buf);
}

// ---------------------------------------------------------------------------
// Criterion 9: plan reruns reproduce results.csv byte-identically.

void criterion_determinism() {
  const char* plan_text = R"(environment: cartpole
repeats: 4
base_seed: 11
output: %s
workers: 1

config: smbne-dyn5
algorithm: smbne
budget: 60
strategy: dyn
num_s: 5
surrogate_evals: 200

config: cgp-mut5
algorithm: cgp
budget: 60
mutation_rate: 0.05
)";
  char text_a[2048], text_b[2048];
  std::snprintf(text_a, sizeof text_a, plan_text, "/tmp/acceptance_rerun_a");
  std::snprintf(text_b, sizeof text_b, plan_text, "/tmp/acceptance_rerun_b");
  ExperimentPlan a = parse_plan_text(text_a);
  ExperimentPlan b = parse_plan_text(text_b);
  emit_results(run_plan(a), a.output_dir);
  emit_results(run_plan(b), b.output_dir);
  const std::string csv_a = read_file(a.output_dir + "/results.csv");
  const std::string csv_b = read_file(b.output_dir + "/results.csv");
  const bool pass = !csv_a.empty() && csv_a == csv_b;
  char buf[120];
  std::snprintf(buf, sizeof buf, "results.csv %zu bytes, rerun %s", csv_a.size(),
                pass ? "byte-identical" : "differs");
  report(9, "determinism", pass, buf);
}

}  // namespace

int main(int argc, char** argv) {
  // optional arguments: criterion numbers to run (default: all)
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  auto enabled = [&](int n) {
    return wanted.empty() ||
           std::find(wanted.begin(), wanted.end(), n) != wanted.end();
  };

  std::printf("acceptance suite starting\n");
  std::fflush(stdout);

  if (enabled(5)) criterion_kriging();
  if (enabled(6)) criterion_kernel();
  if (enabled(7)) criterion_decode();
  if (enabled(8)) criterion_envs();
  if (enabled(9)) criterion_determinism();

  if (enabled(1) || enabled(2) || enabled(4)) {
    ResultTable cartpole = run_cartpole_set();
    criteria_cartpole(cartpole);
  }

  if (enabled(3)) criterion_mountaincar();

  std::printf("acceptance suite finished: %d criterion(s) failed\n", g_failures);
  return g_failures;
}
