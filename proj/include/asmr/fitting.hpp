#ifndef ASMR_FITTING_HPP_
#define ASMR_FITTING_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "asmr/data.hpp"
#include "asmr/msl/eval.hpp"
#include "asmr/optimize.hpp"

namespace asmr {

struct NllResult {
  std::vector<double> per_trial;
  double total = 0.0;
};

// per_trial[t] = -ln P(observed choice at t); probs_b must already be
// clipped, so every term is finite and positive.
NllResult nll(std::span<const double> probs_b, std::span<const Choice> choices);

// Akaike information criterion with natural-log likelihoods.
inline double aic(int num_parameters, double total_nll) {
  return 2.0 * num_parameters + 2.0 * total_nll;
}

struct OptimizerMeta {
  int restarts_used = 0;
  bool converged = false;
  long function_evals = 0;
};

struct FitResult {
  std::string subject_id;
  std::vector<double> params_hat;
  std::vector<double> per_trial_nll;
  double total_nll = 0.0;
  double aic = 0.0;
  OptimizerMeta optimizer_meta;
};

struct FitOptions {
  int restarts = 10;  // multi-start count; start points are i.i.d. N(0, 1)
  MinimizeOptions minimize;
};

// Per-subject maximum likelihood estimation over multi-start BFGS.
// Deterministic given (prog, subject, seed). A zero-parameter model skips
// optimization and is scored as-is. Throws OptimizerFailure when every
// restart yields a non-finite objective.
FitResult fit(const msl::TypedProgram& prog, const SubjectData& subject,
              std::uint64_t seed, const FitOptions& options = {});

// Fits every subject, deriving one sub-seed per subject from `seed`.
std::vector<FitResult> fit_all(const msl::TypedProgram& prog,
                               const std::vector<SubjectData>& subjects,
                               std::uint64_t seed,
                               const FitOptions& options = {});

msl::FeatureMatrix matrix_a(const SubjectData& subject);
msl::FeatureMatrix matrix_b(const SubjectData& subject);

}  // namespace asmr

#endif  // ASMR_FITTING_HPP_
