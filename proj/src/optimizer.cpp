#include "bayeshpo/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "bayeshpo/errors.hpp"
#include "bayeshpo/rng.hpp"

namespace bayeshpo {

namespace {

enum SeedStream : std::uint64_t {
  kStreamTrial = 1,
  kStreamDesign = 2,
  kStreamAcquisition = 3,
  kStreamGpFit = 4,
  kStreamRandomSearch = 5,
};

}  // namespace

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t index) {
  return derive_seed(base_seed, kStreamTrial, index);
}

std::vector<Configuration> latin_hypercube(const SearchSpace& space, std::size_t n,
                                           std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Configuration> out(n);
  for (auto& c : out) c.values.reserve(space.size());
  std::vector<std::size_t> perm(n);
  for (std::size_t p = 0; p < space.size(); ++p) {
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(i));
      std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(perm[i]) + unit_uniform(rng)) / static_cast<double>(n);
      out[i].values.push_back(space.value_from_unit(p, u));
    }
  }
  return out;
}

const Trial& evaluate_and_append(OptimizationHistory& history, const SearchSpace& space,
                                 const Objective& objective, Configuration cfg,
                                 std::uint64_t seed, std::vector<std::string> flags) {
  Trial t;
  t.index = history.size();
  t.encoded = space.encode(cfg);
  t.seed = seed;
  t.flags = std::move(flags);

  const auto start = std::chrono::steady_clock::now();
  double value;
  try {
    value = objective(cfg, seed);
  } catch (const NumericalError& e) {
    spdlog::warn("trial {}: numerical failure: {}", t.index, e.what());
    value = std::numeric_limits<double>::quiet_NaN();
    t.flags.emplace_back(kFlagNumericalFailure);
  }
  t.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!std::isfinite(value)) {
    const double penalty = history.empty() ? 1.0 : history.worst_objective() + 1.0;
    spdlog::warn("trial {}: non-finite objective replaced by penalty {}", t.index, penalty);
    value = penalty;
    t.flags.emplace_back(kFlagNonFinite);
  }
  t.objective = value;
  t.cfg = std::move(cfg);
  history.append(std::move(t));
  return history.trials().back();
}

OptimizationHistory bo_minimize(const SearchSpace& space, const Objective& objective,
                                const BoOptions& options) {
  if (options.n_init < 1 || options.budget < options.n_init)
    throw ValidationError("bo_minimize requires budget >= n_init >= 1");

  OptimizationHistory history;
  const auto design =
      latin_hypercube(space, options.n_init, derive_seed(options.seed, kStreamDesign));
  for (const auto& cfg : design)
    evaluate_and_append(history, space, objective, cfg, trial_seed(options.seed, history.size()),
                        {kFlagInitialDesign});

  while (history.size() < options.budget) {
    const auto n = static_cast<Eigen::Index>(history.size());
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(space.encoded_dim()));
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& t = history[static_cast<std::size_t>(i)];
      X.row(i) = t.encoded.transpose();
      y[i] = t.objective;
    }
    GpFitOptions fit_opts;
    fit_opts.family = options.kernel;
    fit_opts.random_restarts = options.gp_restarts;
    fit_opts.seed = derive_seed(options.seed, kStreamGpFit, history.size());
    const auto gp = fit_gp(X, y, fit_opts);

    const auto proposal = propose_next(
        gp, history, derive_seed(options.seed, kStreamAcquisition, history.size()),
        options.acquisition);
    std::vector<std::string> flags;
    if (proposal.fallback) flags.emplace_back(kFlagAcquisitionFallback);
    const auto& t = evaluate_and_append(history, space, objective, space.decode(proposal.point),
                                        trial_seed(options.seed, history.size()), std::move(flags));
    spdlog::info("bo trial {}: objective {:.6g} (ei {:.3g}), best {:.6g}", t.index, t.objective,
                 proposal.ei_value, history.best_objective());
  }
  return history;
}

OptimizationHistory random_search_minimize(const SearchSpace& space, const Objective& objective,
                                           std::size_t budget, std::uint64_t seed) {
  if (budget < 1) throw ValidationError("random_search_minimize requires budget >= 1");
  OptimizationHistory history;
  for (std::size_t i = 0; i < budget; ++i) {
    auto cfg = space.sample_uniform(derive_seed(seed, kStreamRandomSearch, i));
    const auto& t = evaluate_and_append(history, space, objective, std::move(cfg),
                                        trial_seed(seed, i));
    spdlog::info("random trial {}: objective {:.6g}, best {:.6g}", t.index, t.objective,
                 history.best_objective());
  }
  return history;
}

}  // namespace bayeshpo
