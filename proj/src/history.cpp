#include "bayeshpo/history.hpp"

#include <algorithm>
#include <cmath>

#include "bayeshpo/errors.hpp"

namespace bayeshpo {

void OptimizationHistory::append(Trial trial) {
  if (trial.index != trials_.size())
    throw ValidationError("trial index " + std::to_string(trial.index) + " appended at position " +
                          std::to_string(trials_.size()));
  if (!std::isfinite(trial.objective)) throw ValidationError("trial objective must be finite");
  if (trials_.empty() || trial.objective < trials_[incumbent_].objective)
    incumbent_ = trials_.size();
  trials_.push_back(std::move(trial));
}

std::size_t OptimizationHistory::incumbent_index() const {
  if (trials_.empty()) throw ValidationError("empty history has no incumbent");
  return incumbent_;
}

double OptimizationHistory::worst_objective() const {
  if (trials_.empty()) throw ValidationError("empty history");
  return std::max_element(trials_.begin(), trials_.end(),
                          [](const Trial& a, const Trial& b) { return a.objective < b.objective; })
      ->objective;
}

std::vector<std::pair<std::size_t, double>> incumbent_curve(const OptimizationHistory& h) {
  if (h.empty()) throw ValidationError("incumbent_curve: empty history");
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(h.size());
  double best = h[0].objective;
  for (const auto& t : h.trials()) {
    best = std::min(best, t.objective);
    out.emplace_back(t.index, best);
  }
  return out;
}

}  // namespace bayeshpo
