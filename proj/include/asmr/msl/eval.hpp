#ifndef ASMR_MSL_EVAL_HPP_
#define ASMR_MSL_EVAL_HPP_

#include <span>
#include <vector>

#include "asmr/msl/typecheck.hpp"

namespace asmr::msl {

// Row-major num_trials x num_features matrix of option features.
struct FeatureMatrix {
  int num_trials = 0;
  int num_features = 0;
  std::vector<double> values;

  double at(int trial, int feature) const {
    return values[static_cast<std::size_t>(trial) * num_features + feature];
  }
};

inline constexpr double kProbEpsilon = 1e-5;

// Per-trial probability of choosing option B, clipped into
// [kProbEpsilon, 1 - kProbEpsilon].
struct EvalOutput {
  std::vector<double> probs_b;
};

// Pure evaluation of a typechecked model. Infinite intermediate values are
// tolerated; a NaN in the pre-clip output raises EvalError.
EvalOutput evaluate(const TypedProgram& prog, std::span<const double> params,
                    const FeatureMatrix& option_a,
                    const FeatureMatrix& option_b);

}  // namespace asmr::msl

#endif  // ASMR_MSL_EVAL_HPP_
