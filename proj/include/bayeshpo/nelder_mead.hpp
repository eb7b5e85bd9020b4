#pragma once

#include <functional>

#include <Eigen/Core>

namespace bayeshpo::detail {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

// Derivative-free minimizer with standard coefficients (reflect 1, expand 2,
// contract 0.5, shrink 0.5). Stops when the simplex value spread drops below
// `ftol` or after `max_evals` evaluations.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, double initial_step, int max_evals,
                             double ftol = 1e-8);

}  // namespace bayeshpo::detail
