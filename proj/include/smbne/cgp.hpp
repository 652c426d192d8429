#pragma once

#include <span>
#include <string>
#include <vector>

#include "smbne/rng.hpp"

namespace smbne {

enum class Transfer { Tanh, Softsign, Step, Sigmoid, Gauss };

double apply_transfer(Transfer f, double x);
const char* transfer_name(Transfer f);
Transfer transfer_from_name(const std::string& name);

// Node/connection indices live in a single "slot" space:
// slots [0, num_inputs) are the raw inputs, slot num_inputs + j is node j.
struct CgpConfig {
  int num_inputs = 0;
  int num_outputs = 0;
  int num_nodes = 0;
  int arity = 0;
  double weight_min = -1.0;
  double weight_max = 1.0;
  std::vector<Transfer> function_set{Transfer::Tanh, Transfer::Softsign,
                                     Transfer::Step, Transfer::Sigmoid,
                                     Transfer::Gauss};

  int genes_per_node() const { return 1 + 2 * arity; }
  long total_genes() const {
    return static_cast<long>(num_nodes) * genes_per_node() + num_outputs;
  }
  int num_slots() const { return num_inputs + num_nodes; }

  void validate() const;  // throws std::invalid_argument

  static CgpConfig cartpole();      // 200 nodes, arity 20
  static CgpConfig mountain_car();  // 100 nodes, arity 10

  bool operator==(const CgpConfig&) const = default;
};

struct NodeGene {
  int function = 0;
  std::vector<int> connections;  // slot indices, each < num_inputs + own index
  std::vector<double> weights;

  bool operator==(const NodeGene&) const = default;
};

struct Genotype {
  CgpConfig config;
  std::vector<NodeGene> nodes;
  std::vector<int> outputs;  // slot indices

  bool operator==(const Genotype&) const = default;
};

Genotype random_genotype(const CgpConfig& config, Rng& rng);

// Every gene is independently re-sampled from its valid domain with the given
// probability. Re-draws that hit the old value are allowed.
Genotype mutate_random(const Genotype& g, double rate, Rng& rng);

// Mutates uniformly chosen genes until at least one gene of an active node or
// an output binding has changed value. Passive genes hit along the way keep
// their new values.
Genotype mutate_single_active(const Genotype& g, Rng& rng);

std::string genotype_to_json(const Genotype& g);
Genotype genotype_from_json(const std::string& text);

// The subgraph backward-reachable from the output bindings, compiled into a
// flat evaluation program. Immutable after construction and safe to use from
// multiple threads.
class ActiveNetwork {
 public:
  explicit ActiveNetwork(const Genotype& g);

  int num_inputs() const { return num_inputs_; }
  int num_outputs() const { return static_cast<int>(output_slots_.size()); }
  const std::vector<int>& active_nodes() const { return active_; }

  // Throws std::invalid_argument on size mismatch or non-finite input.
  std::vector<double> forward(std::span<const double> state) const;

  // Evaluates many states at once; out[k * num_outputs + o] is output o for
  // state k. Identical results to calling forward() per state.
  void forward_batch(std::span<const std::vector<double>> states,
                     std::vector<double>& out) const;

  // argmax over outputs, ties broken by lowest index.
  int select_action(std::span<const double> state) const;

 private:
  int num_inputs_ = 0;
  int num_slots_ = 0;
  int arity_ = 0;
  std::vector<int> active_;        // genotype node indices, ascending
  std::vector<Transfer> fns_;      // parallel to active_
  std::vector<int> sources_;       // arity_ entries per active node
  std::vector<double> weights_;    // arity_ entries per active node
  std::vector<int> output_slots_;
};

inline ActiveNetwork decode_active(const Genotype& g) { return ActiveNetwork(g); }

}  // namespace smbne
