#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bayeshpo/acquisition.hpp"
#include "bayeshpo/gp.hpp"
#include "bayeshpo/history.hpp"
#include "bayeshpo/search_space.hpp"

namespace bayeshpo {

/// Objective to minimize. Receives the configuration and a trial-specific seed.
/// May throw NumericalError or return a non-finite value; both become a penalized trial.
using Objective = std::function<double(const Configuration&, std::uint64_t trial_seed)>;

inline constexpr const char* kFlagNonFinite = "non_finite_objective";
inline constexpr const char* kFlagNumericalFailure = "numerical_failure";
inline constexpr const char* kFlagAcquisitionFallback = "acquisition_fallback";
inline constexpr const char* kFlagInitialDesign = "initial_design";

struct BoOptions {
  std::size_t budget = 40;
  std::size_t n_init = 8;
  KernelFamily kernel = KernelFamily::kMatern52;
  int gp_restarts = 5;
  AcquisitionOptions acquisition;
  std::uint64_t seed = 0;
};

/// Seed handed to the objective for trial `index` of a study seeded with `base_seed`.
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t index);

/// Latin hypercube over the parameters (one stratum per point in every parameter).
std::vector<Configuration> latin_hypercube(const SearchSpace& space, std::size_t n,
                                           std::uint64_t seed);

/// GP-EI Bayesian optimization: Latin-hypercube initial design, then refit/propose/evaluate
/// until `budget` trials exist.
OptimizationHistory bo_minimize(const SearchSpace& space, const Objective& objective,
                                const BoOptions& options);

OptimizationHistory random_search_minimize(const SearchSpace& space, const Objective& objective,
                                           std::size_t budget, std::uint64_t seed);

/// Evaluates `objective` and appends the resulting trial, applying the non-finite penalty
/// (worst-so-far + 1) when needed.
const Trial& evaluate_and_append(OptimizationHistory& history, const SearchSpace& space,
                                 const Objective& objective, Configuration cfg,
                                 std::uint64_t seed, std::vector<std::string> flags = {});

}  // namespace bayeshpo
