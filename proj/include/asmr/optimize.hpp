#ifndef ASMR_OPTIMIZE_HPP_
#define ASMR_OPTIMIZE_HPP_

#include <functional>
#include <span>
#include <vector>

namespace asmr {

using Objective = std::function<double(std::span<const double>)>;

struct MinimizeOptions {
  int max_iterations = 500;
  double grad_tol = 1e-6;   // stop when the gradient 2-norm drops below this
  double fd_step = 1e-6;    // central-difference step, scaled by max(1, |x|)
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  long function_evals = 0;
  bool converged = false;
};

// Unconstrained quasi-Newton (BFGS) minimization with finite-difference
// gradients and Armijo backtracking. Non-finite objective values are treated
// as rejected steps; a non-finite start value is returned unconverged with
// value +inf.
MinimizeResult minimize_bfgs(const Objective& f, std::vector<double> x0,
                             const MinimizeOptions& options = {});

// Central-difference gradient with per-coordinate step h * max(1, |x_i|).
// Exposed so tests can compare stencils.
std::vector<double> fd_gradient(const Objective& f, std::span<const double> x,
                                double step, long* eval_count = nullptr);

}  // namespace asmr

#endif  // ASMR_OPTIMIZE_HPP_
