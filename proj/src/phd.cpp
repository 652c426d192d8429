#include "smbne/phd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace smbne {

const char* InputStrategy::name() const {
  switch (kind) {
    case Kind::Pre: return "pre";
    case Kind::Init: return "init";
    case Kind::Lhs: return "lhs";
    case Kind::Dyn: return "dyn";
  }
  return "?";
}

int default_trace_cap(int num_s, int obs_dim) {
  return std::max(1, 800 / (num_s * obs_dim));
}

std::vector<std::vector<double>> subsample_trace(
    const std::vector<std::vector<double>>& states, int cap) {
  const int len = static_cast<int>(states.size());
  if (cap < 1) throw std::invalid_argument("cap must be >= 1");
  if (len <= cap) return states;
  const int stride = (len + cap - 1) / cap;
  std::vector<int> keep;
  for (int i = 0; i < len && static_cast<int>(keep.size()) < cap; i += stride)
    keep.push_back(i);
  keep.back() = len - 1;
  std::vector<std::vector<double>> out;
  out.reserve(keep.size());
  for (int i : keep) out.push_back(states[i]);
  return out;
}

namespace {

void sort_by_fitness(std::vector<StateTrace>& traces) {
  std::stable_sort(traces.begin(), traces.end(),
                   [](const StateTrace& a, const StateTrace& b) {
                     return a.fitness < b.fitness;
                   });
}

InputVector from_archive(int num_s, const Archive& archive, const EnvSpec& spec) {
  if (archive.empty())
    throw std::invalid_argument("input vector strategy requires a non-empty archive");
  InputVector v;
  v.obs_dim = spec.obs_dim;
  v.num_s = num_s;
  v.per_trace_cap = default_trace_cap(num_s, spec.obs_dim);
  // best first; among equal fitness prefer the more recent record
  std::vector<std::size_t> order(archive.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (archive[a].fitness != archive[b].fitness)
      return archive[a].fitness < archive[b].fitness;
    return a > b;
  });
  const std::size_t take = std::min<std::size_t>(num_s, order.size());
  for (std::size_t i = 0; i < take; ++i) {
    const ArchiveRecord& r = archive[order[i]];
    v.traces.push_back({r.fitness, subsample_trace(r.trace, v.per_trace_cap)});
  }
  sort_by_fitness(v.traces);
  return v;
}

InputVector from_lhs(int sample_count, const EnvSpec& spec, Rng& rng) {
  const int count = sample_count > 0 ? sample_count : 800 / spec.obs_dim;
  InputVector v;
  v.obs_dim = spec.obs_dim;
  v.num_s = 1;
  v.per_trace_cap = count;
  StateTrace trace;
  trace.fitness = 0.0;
  trace.states.assign(count, std::vector<double>(spec.obs_dim));
  // one stratum per sample per dimension, random permutation pairing
  for (int d = 0; d < spec.obs_dim; ++d) {
    std::vector<int> perm(count);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = count - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.index(i + 1)]);
    for (int i = 0; i < count; ++i)
      trace.states[i][d] = -1.0 + 2.0 * (perm[i] + rng.uniform()) / count;
  }
  v.traces.push_back(std::move(trace));
  return v;
}

}  // namespace

InputVector build_input_vector(const InputStrategy& strategy, const Archive& archive,
                               const EnvSpec& spec, Rng& rng) {
  switch (strategy.kind) {
    case InputStrategy::Kind::Init:
    case InputStrategy::Kind::Dyn:
      return from_archive(strategy.num_s, archive, spec);
    case InputStrategy::Kind::Lhs:
      return from_lhs(strategy.sample_count, spec, rng);
    case InputStrategy::Kind::Pre: {
      std::vector<StateTrace> traces = load_pre_traces(strategy.pre_path);
      InputVector v;
      v.obs_dim = spec.obs_dim;
      v.num_s = static_cast<int>(traces.size());
      v.per_trace_cap = default_trace_cap(v.num_s, spec.obs_dim);
      for (StateTrace& t : traces)
        v.traces.push_back({t.fitness, subsample_trace(t.states, v.per_trace_cap)});
      sort_by_fitness(v.traces);
      return v;
    }
  }
  throw std::invalid_argument("unknown input strategy");
}

InputVector update_dynamic(const InputVector& v,
                           const std::vector<std::vector<double>>& new_trace,
                           double new_fitness) {
  InputVector out = v;
  StateTrace incoming{new_fitness, subsample_trace(new_trace, v.per_trace_cap)};
  if (static_cast<int>(out.traces.size()) < out.num_s) {
    out.traces.push_back(std::move(incoming));
  } else {
    auto worst = std::max_element(out.traces.begin(), out.traces.end(),
                                  [](const StateTrace& a, const StateTrace& b) {
                                    return a.fitness < b.fitness;
                                  });
    *worst = std::move(incoming);
  }
  sort_by_fitness(out.traces);
  ++out.version;
  return out;
}

std::vector<double> phenotype(const ActiveNetwork& net, const InputVector& v) {
  if (net.num_inputs() != v.obs_dim)
    throw std::invalid_argument("network input arity does not match input vector");
  static thread_local std::vector<std::vector<double>> states;
  states.clear();
  for (const StateTrace& t : v.traces)
    states.insert(states.end(), t.states.begin(), t.states.end());
  std::vector<double> out;
  net.forward_batch(states, out);
  return out;
}

double manhattan(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("phenotype length mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::fabs(a[i] - b[i]);
  return d;
}

double kernel_phd(std::span<const double> a, std::span<const double> b, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
  return std::exp(-theta * manhattan(a, b));
}

std::vector<StateTrace> load_pre_traces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reference trace file: " + path);
  std::vector<StateTrace> traces;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# fitness=", 0) == 0) {
      StateTrace t;
      t.fitness = std::stod(line.substr(10));
      traces.push_back(std::move(t));
      continue;
    }
    if (traces.empty())
      throw std::runtime_error("trace data before fitness header in " + path);
    std::vector<double> state;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) state.push_back(std::stod(cell));
    traces.back().states.push_back(std::move(state));
  }
  if (traces.empty()) throw std::runtime_error("no traces in " + path);
  return traces;
}

void save_pre_traces(const std::string& path, std::span<const StateTrace> traces) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write reference trace file: " + path);
  out.precision(17);
  for (const StateTrace& t : traces) {
    out << "# fitness=" << t.fitness << '\n';
    for (const std::vector<double>& s : t.states) {
      for (std::size_t i = 0; i < s.size(); ++i)
        out << (i ? "," : "") << s[i];
      out << '\n';
    }
  }
}

}  // namespace smbne
