#ifndef ASMR_SYNTH_HPP_
#define ASMR_SYNTH_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include "asmr/data.hpp"
#include "asmr/msl/ast.hpp"

namespace asmr {

// Ground-truth generator: samples option pairs, draws choices from a known
// model, and emits the matching oracle reference-likelihood cache so the full
// loop can be verified without an external predictor.
struct GeneratorSpec {
  msl::ModelProgram true_model;       // defaults to adaptive_validity_model()
  std::vector<double> true_params;    // {1.5, 3.0} by default (fixture values)
  int num_subjects = 30;
  int trials_per_subject = 96;
  int num_features = 4;
  std::uint64_t seed = 0;
  bool exclude_identical_options = true;
};

GeneratorSpec default_generator_spec();

// Option pairs are uniform over {0,1}^4 x {0,1}^4, resampled while identical
// when exclusion is on; choices are Bernoulli draws from the true model's
// P(B); the cache holds the true model's NLL of each sampled choice.
// Deterministic given the seed.
std::pair<TrialSet, ReferenceLikelihoods> generate(const GeneratorSpec& spec);

}  // namespace asmr

#endif  // ASMR_SYNTH_HPP_
