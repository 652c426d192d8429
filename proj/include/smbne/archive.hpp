#pragma once

#include <stdexcept>
#include <vector>

#include "smbne/cgp.hpp"

namespace smbne {

struct ArchiveRecord {
  Genotype genotype;
  double fitness = 0.0;
  double total_reward = 0.0;
  std::vector<std::vector<double>> trace;  // normalized states seen
  int iteration = 0;

  // phenotype cache, keyed by InputVector::version
  mutable std::vector<double> cached_phenotype;
  mutable int cached_version = -1;
};

// All truly evaluated (genotype, fitness, trace) records of a run. Among
// equal fitnesses the most recently added record is the best.
class Archive {
 public:
  void add(ArchiveRecord r) {
    records_.push_back(std::move(r));
    if (best_ < 0 || records_.back().fitness <= records_[best_].fitness)
      best_ = static_cast<int>(records_.size()) - 1;
  }

  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }
  const ArchiveRecord& operator[](std::size_t i) const { return records_[i]; }

  int best_index() const { return best_; }
  const ArchiveRecord& best() const {
    if (best_ < 0) throw std::logic_error("empty archive");
    return records_[best_];
  }
  double best_fitness() const { return best().fitness; }

 private:
  std::vector<ArchiveRecord> records_;
  int best_ = -1;
};

}  // namespace smbne
