#pragma once

#include <cstdint>
#include <vector>

#include "bayeshpo/gp.hpp"
#include "bayeshpo/history.hpp"

namespace bayeshpo {

struct AcquisitionResult {
  EncodedPoint point;
  double ei_value = 0.0;
  // True when EI vanished everywhere and a uniform random point was returned.
  bool fallback = false;
};

double normal_pdf(double z);
double normal_cdf(double z);

/// Closed-form EI for minimization: E[max(0, f_best - f)] with f ~ N(mean, variance).
double expected_improvement(double mean, double variance, double f_best);
double expected_improvement(const FittedGP& gp, const EncodedPoint& x, double f_best);

struct AcquisitionOptions {
  int n_candidates = 1024;
  int n_refine = 8;
  double step_start = 0.1;
  double step_min = 1e-3;
};

/// The uniform random candidate set propose_next scores for a given seed.
std::vector<EncodedPoint> acquisition_candidates(std::size_t dim, std::uint64_t seed,
                                                 int n_candidates);

/// Maximizes EI over [0,1]^d: random candidates plus the observed points, then
/// coordinate-wise pattern search from the best few. f_best is the raw incumbent.
AcquisitionResult propose_next(const FittedGP& gp, const OptimizationHistory& history,
                               std::uint64_t seed, const AcquisitionOptions& options = {});

}  // namespace bayeshpo
