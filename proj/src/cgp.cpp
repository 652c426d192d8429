#include "smbne/cgp.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace smbne {

double apply_transfer(Transfer f, double x) {
  switch (f) {
    case Transfer::Tanh:
      return std::tanh(x);
    case Transfer::Softsign:
      return x / (1.0 + std::fabs(x));
    case Transfer::Step:
      return x > 0.0 ? 1.0 : 0.0;
    case Transfer::Sigmoid:
      return 1.0 / (1.0 + std::exp(-x));
    case Transfer::Gauss:
      return std::exp(-x * x);
  }
  throw std::invalid_argument("unknown transfer function");
}

const char* transfer_name(Transfer f) {
  switch (f) {
    case Transfer::Tanh: return "tanh";
    case Transfer::Softsign: return "softsign";
    case Transfer::Step: return "step";
    case Transfer::Sigmoid: return "sigmoid";
    case Transfer::Gauss: return "gauss";
  }
  throw std::invalid_argument("unknown transfer function");
}

Transfer transfer_from_name(const std::string& name) {
  if (name == "tanh") return Transfer::Tanh;
  if (name == "softsign") return Transfer::Softsign;
  if (name == "step") return Transfer::Step;
  if (name == "sigmoid") return Transfer::Sigmoid;
  if (name == "gauss") return Transfer::Gauss;
  throw std::invalid_argument("unknown transfer function: " + name);
}

void CgpConfig::validate() const {
  if (num_inputs < 1) throw std::invalid_argument("num_inputs must be >= 1");
  if (num_outputs < 1) throw std::invalid_argument("num_outputs must be >= 1");
  if (num_nodes < 1) throw std::invalid_argument("num_nodes must be >= 1");
  if (arity < 1) throw std::invalid_argument("arity must be >= 1");
  if (!(weight_min < weight_max))
    throw std::invalid_argument("weight range must be a proper interval");
  if (function_set.empty())
    throw std::invalid_argument("function_set must be non-empty");
}

CgpConfig CgpConfig::cartpole() {
  CgpConfig c;
  c.num_inputs = 4;
  c.num_outputs = 2;
  c.num_nodes = 200;
  c.arity = 20;
  return c;
}

CgpConfig CgpConfig::mountain_car() {
  CgpConfig c;
  c.num_inputs = 2;
  c.num_outputs = 3;
  c.num_nodes = 100;
  c.arity = 10;
  return c;
}

Genotype random_genotype(const CgpConfig& config, Rng& rng) {
  config.validate();
  Genotype g;
  g.config = config;
  g.nodes.resize(config.num_nodes);
  for (int i = 0; i < config.num_nodes; ++i) {
    NodeGene& n = g.nodes[i];
    n.function = static_cast<int>(rng.index(config.function_set.size()));
    n.connections.resize(config.arity);
    n.weights.resize(config.arity);
    for (int a = 0; a < config.arity; ++a) {
      // feed-forward: only inputs and strictly earlier nodes are reachable
      n.connections[a] = static_cast<int>(rng.index(config.num_inputs + i));
      n.weights[a] = rng.uniform(config.weight_min, config.weight_max);
    }
  }
  g.outputs.resize(config.num_outputs);
  for (int o = 0; o < config.num_outputs; ++o)
    g.outputs[o] = static_cast<int>(rng.index(config.num_slots()));
  return g;
}

Genotype mutate_random(const Genotype& g, double rate, Rng& rng) {
  if (!(rate > 0.0 && rate <= 1.0))
    throw std::invalid_argument("mutation rate must be in (0, 1]");
  const CgpConfig& c = g.config;
  Genotype out = g;
  for (int i = 0; i < c.num_nodes; ++i) {
    NodeGene& n = out.nodes[i];
    if (rng.bernoulli(rate))
      n.function = static_cast<int>(rng.index(c.function_set.size()));
    for (int a = 0; a < c.arity; ++a) {
      if (rng.bernoulli(rate))
        n.connections[a] = static_cast<int>(rng.index(c.num_inputs + i));
      if (rng.bernoulli(rate))
        n.weights[a] = rng.uniform(c.weight_min, c.weight_max);
    }
  }
  for (int o = 0; o < c.num_outputs; ++o)
    if (rng.bernoulli(rate))
      out.outputs[o] = static_cast<int>(rng.index(c.num_slots()));
  return out;
}

namespace {

// Backward reachability from the output bindings.
std::vector<char> active_mask(const Genotype& g) {
  const CgpConfig& c = g.config;
  std::vector<char> mask(c.num_nodes, 0);
  std::vector<int> stack;
  auto visit = [&](int slot) {
    if (slot >= c.num_inputs) stack.push_back(slot - c.num_inputs);
  };
  for (int slot : g.outputs) visit(slot);
  while (!stack.empty()) {
    int node = stack.back();
    stack.pop_back();
    if (mask[node]) continue;
    mask[node] = 1;
    for (int slot : g.nodes[node].connections) visit(slot);
  }
  return mask;
}

}  // namespace

Genotype mutate_single_active(const Genotype& g, Rng& rng) {
  const CgpConfig& c = g.config;
  Genotype out = g;
  const long total = c.total_genes();
  const long node_genes = static_cast<long>(c.num_nodes) * c.genes_per_node();
  while (true) {
    long gi = static_cast<long>(rng.index(static_cast<std::size_t>(total)));
    if (gi >= node_genes) {
      int o = static_cast<int>(gi - node_genes);
      int old = out.outputs[o];
      out.outputs[o] = static_cast<int>(rng.index(c.num_slots()));
      if (out.outputs[o] != old) return out;  // output bindings are always active
      continue;
    }
    int node = static_cast<int>(gi / c.genes_per_node());
    int slot = static_cast<int>(gi % c.genes_per_node());
    NodeGene& n = out.nodes[node];
    bool changed = false;
    if (slot == 0) {
      int old = n.function;
      n.function = static_cast<int>(rng.index(c.function_set.size()));
      changed = n.function != old;
    } else if (slot <= c.arity) {
      int a = slot - 1;
      int old = n.connections[a];
      n.connections[a] = static_cast<int>(rng.index(c.num_inputs + node));
      changed = n.connections[a] != old;
    } else {
      int a = slot - 1 - c.arity;
      double old = n.weights[a];
      n.weights[a] = rng.uniform(c.weight_min, c.weight_max);
      changed = n.weights[a] != old;
    }
    if (changed && active_mask(out)[node]) return out;
  }
}

ActiveNetwork::ActiveNetwork(const Genotype& g) {
  const CgpConfig& c = g.config;
  num_inputs_ = c.num_inputs;
  num_slots_ = c.num_slots();
  arity_ = c.arity;
  std::vector<char> mask = active_mask(g);
  for (int i = 0; i < c.num_nodes; ++i) {
    if (!mask[i]) continue;
    active_.push_back(i);
    const NodeGene& n = g.nodes[i];
    fns_.push_back(c.function_set.at(n.function));
    sources_.insert(sources_.end(), n.connections.begin(), n.connections.end());
    weights_.insert(weights_.end(), n.weights.begin(), n.weights.end());
  }
  output_slots_ = g.outputs;
}

std::vector<double> ActiveNetwork::forward(std::span<const double> state) const {
  if (static_cast<int>(state.size()) != num_inputs_)
    throw std::invalid_argument("state length does not match network inputs");
  for (double x : state)
    if (!std::isfinite(x))
      throw std::invalid_argument("non-finite state value");
  std::vector<double> values(num_slots_, 0.0);
  for (int i = 0; i < num_inputs_; ++i) values[i] = state[i];
  for (std::size_t k = 0; k < active_.size(); ++k) {
    double sum = 0.0;
    const int base = static_cast<int>(k) * arity_;
    for (int a = 0; a < arity_; ++a)
      sum += weights_[base + a] * values[sources_[base + a]];
    values[num_inputs_ + active_[k]] = apply_transfer(fns_[k], sum);
  }
  std::vector<double> out(output_slots_.size());
  for (std::size_t o = 0; o < output_slots_.size(); ++o)
    out[o] = values[output_slots_[o]];
  return out;
}

void ActiveNetwork::forward_batch(std::span<const std::vector<double>> states,
                                  std::vector<double>& out) const {
  const std::size_t ns = states.size();
  const std::size_t no = output_slots_.size();
  out.resize(ns * no);
  if (ns == 0) return;
  static thread_local std::vector<double> buf;
  buf.resize(static_cast<std::size_t>(num_slots_) * ns);
  for (std::size_t s = 0; s < ns; ++s) {
    if (static_cast<int>(states[s].size()) != num_inputs_)
      throw std::invalid_argument("state length does not match network inputs");
    for (int i = 0; i < num_inputs_; ++i) {
      double x = states[s][i];
      if (!std::isfinite(x))
        throw std::invalid_argument("non-finite state value");
      buf[static_cast<std::size_t>(i) * ns + s] = x;
    }
  }
  static thread_local std::vector<double> acc;
  acc.resize(ns);
  for (std::size_t k = 0; k < active_.size(); ++k) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const int base = static_cast<int>(k) * arity_;
    for (int a = 0; a < arity_; ++a) {
      const double w = weights_[base + a];
      const double* src = buf.data() + static_cast<std::size_t>(sources_[base + a]) * ns;
      for (std::size_t s = 0; s < ns; ++s) acc[s] += w * src[s];
    }
    double* dst = buf.data() + static_cast<std::size_t>(num_inputs_ + active_[k]) * ns;
    const Transfer fn = fns_[k];
    for (std::size_t s = 0; s < ns; ++s) dst[s] = apply_transfer(fn, acc[s]);
  }
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t o = 0; o < no; ++o)
      out[s * no + o] = buf[static_cast<std::size_t>(output_slots_[o]) * ns + s];
}

int ActiveNetwork::select_action(std::span<const double> state) const {
  std::vector<double> out = forward(state);
  int best = 0;
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] > out[best]) best = static_cast<int>(i);
  return best;
}

namespace {

nlohmann::json config_to_json(const CgpConfig& c) {
  nlohmann::json fns = nlohmann::json::array();
  for (Transfer f : c.function_set) fns.push_back(transfer_name(f));
  return {{"num_inputs", c.num_inputs},   {"num_outputs", c.num_outputs},
          {"num_nodes", c.num_nodes},     {"arity", c.arity},
          {"weight_min", c.weight_min},   {"weight_max", c.weight_max},
          {"function_set", fns}};
}

CgpConfig config_from_json(const nlohmann::json& j) {
  CgpConfig c;
  c.num_inputs = j.at("num_inputs").get<int>();
  c.num_outputs = j.at("num_outputs").get<int>();
  c.num_nodes = j.at("num_nodes").get<int>();
  c.arity = j.at("arity").get<int>();
  c.weight_min = j.at("weight_min").get<double>();
  c.weight_max = j.at("weight_max").get<double>();
  c.function_set.clear();
  for (const auto& name : j.at("function_set"))
    c.function_set.push_back(transfer_from_name(name.get<std::string>()));
  return c;
}

}  // namespace

std::string genotype_to_json(const Genotype& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const NodeGene& n : g.nodes)
    nodes.push_back({{"function", n.function},
                     {"connections", n.connections},
                     {"weights", n.weights}});
  nlohmann::json j = {{"config", config_to_json(g.config)},
                      {"nodes", nodes},
                      {"outputs", g.outputs}};
  return j.dump();
}

Genotype genotype_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Genotype g;
  g.config = config_from_json(j.at("config"));
  for (const auto& jn : j.at("nodes")) {
    NodeGene n;
    n.function = jn.at("function").get<int>();
    n.connections = jn.at("connections").get<std::vector<int>>();
    n.weights = jn.at("weights").get<std::vector<double>>();
    g.nodes.push_back(std::move(n));
  }
  g.outputs = j.at("outputs").get<std::vector<int>>();
  return g;
}

}  // namespace smbne
