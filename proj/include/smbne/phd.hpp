#pragma once

#include <span>
#include <string>
#include <vector>

#include "smbne/archive.hpp"
#include "smbne/cgp.hpp"
#include "smbne/envs.hpp"
#include "smbne/rng.hpp"

namespace smbne {

struct StateTrace {
  double fitness = 0.0;
  std::vector<std::vector<double>> states;  // normalized observations
};

// Shared excitation signal for the phenotypic distance: contributing traces
// ordered by fitness (best first), each capped to per_trace_cap states.
// Immutable between optimizer iterations; `version` changes with content.
struct InputVector {
  int obs_dim = 0;
  int num_s = 1;          // capacity in traces
  int per_trace_cap = 0;  // max states kept per trace
  std::vector<StateTrace> traces;
  int version = 0;

  int total_states() const {
    int n = 0;
    for (const StateTrace& t : traces) n += static_cast<int>(t.states.size());
    return n;
  }
};

struct InputStrategy {
  enum class Kind { Pre, Init, Lhs, Dyn };
  Kind kind = Kind::Dyn;
  int num_s = 5;           // Init/Dyn
  int sample_count = 0;    // LHS; 0 picks 800 / obs_dim points
  std::string pre_path;    // Pre reference-trace fixture

  static InputStrategy dyn(int num_s) { return {Kind::Dyn, num_s, 0, {}}; }
  static InputStrategy init(int num_s) { return {Kind::Init, num_s, 0, {}}; }
  static InputStrategy lhs(int sample_count = 0) { return {Kind::Lhs, 1, sample_count, {}}; }
  static InputStrategy pre(std::string path) { return {Kind::Pre, 1, 0, std::move(path)}; }
  const char* name() const;
};

// Keeps total scalars near 800 so all strategies compare networks at the
// same dimensionality.
int default_trace_cap(int num_s, int obs_dim);

// Uniform stride subsampling that always keeps the first and last state.
std::vector<std::vector<double>> subsample_trace(
    const std::vector<std::vector<double>>& states, int cap);

InputVector build_input_vector(const InputStrategy& strategy, const Archive& archive,
                               const EnvSpec& spec, Rng& rng);

// Worst-fitness trace is replaced by the new one (appended while below
// capacity). Caller guards on strict fitness improvement.
InputVector update_dynamic(const InputVector& v,
                           const std::vector<std::vector<double>>& new_trace,
                           double new_fitness);

// Flat vector of network outputs over all states of v, in order.
std::vector<double> phenotype(const ActiveNetwork& net, const InputVector& v);

double manhattan(std::span<const double> a, std::span<const double> b);
double kernel_phd(std::span<const double> a, std::span<const double> b, double theta);

// Reference-trace fixture IO: CSV of normalized states, one fitness header
// line per trace.
std::vector<StateTrace> load_pre_traces(const std::string& path);
void save_pre_traces(const std::string& path, std::span<const StateTrace> traces);

}  // namespace smbne
