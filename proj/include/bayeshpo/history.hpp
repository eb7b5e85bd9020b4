#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bayeshpo/search_space.hpp"

namespace bayeshpo {

/// One objective evaluation. `objective` is the minimized fitness.
struct Trial {
  std::size_t index = 0;
  Configuration cfg;
  EncodedPoint encoded;
  double objective = 0.0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> flags;
};

/// Append-only trial record. The incumbent is the minimum objective, earliest on ties.
class OptimizationHistory {
 public:
  /// `trial.index` must equal the current size; objective must be finite.
  void append(Trial trial);

  const std::vector<Trial>& trials() const { return trials_; }
  std::size_t size() const { return trials_.size(); }
  bool empty() const { return trials_.empty(); }
  const Trial& operator[](std::size_t i) const { return trials_.at(i); }

  std::size_t incumbent_index() const;
  const Trial& incumbent() const { return trials_.at(incumbent_index()); }
  double best_objective() const { return incumbent().objective; }
  double worst_objective() const;

 private:
  std::vector<Trial> trials_;
  std::size_t incumbent_ = 0;
};

/// Prefix minimum of the objective: (trial index, best so far).
std::vector<std::pair<std::size_t, double>> incumbent_curve(const OptimizationHistory& h);

}  // namespace bayeshpo
