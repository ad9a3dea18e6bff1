#include "asmr/synth.hpp"

#include <cmath>
#include <cstdio>

#include "asmr/errors.hpp"
#include "asmr/msl/baselines.hpp"
#include "asmr/msl/eval.hpp"
#include "asmr/rng.hpp"

namespace asmr {

GeneratorSpec default_generator_spec() {
  GeneratorSpec spec;
  spec.true_model = msl::adaptive_validity_model();
  spec.true_params = {1.5, 3.0};
  return spec;
}

std::pair<TrialSet, ReferenceLikelihoods> generate(const GeneratorSpec& spec) {
  if (static_cast<int>(spec.true_params.size()) !=
      spec.true_model.num_parameters)
    throw ValidationError(
        "true_params has " + std::to_string(spec.true_params.size()) +
        " values but the true model declares " +
        std::to_string(spec.true_model.num_parameters) + " parameters");
  if (spec.num_subjects < 1 || spec.trials_per_subject < 1 ||
      spec.num_features < 1)
    throw ValidationError("generator spec dimensions must be positive");

  msl::TypedProgram typed = msl::typecheck(spec.true_model, spec.num_features);
  Rng rng(spec.seed);

  TrialSet trials;
  trials.num_features = spec.num_features;
  ReferenceLikelihoods reference;

  const int width = spec.num_subjects > 999 ? 4 : 3;
  for (int s = 0; s < spec.num_subjects; ++s) {
    char subject_id[16];
    std::snprintf(subject_id, sizeof subject_id, "s%0*d", width, s + 1);

    msl::FeatureMatrix a{spec.trials_per_subject, spec.num_features, {}};
    msl::FeatureMatrix b{spec.trials_per_subject, spec.num_features, {}};
    a.values.reserve(a.num_trials * a.num_features);
    b.values.reserve(b.num_trials * b.num_features);
    for (int t = 0; t < spec.trials_per_subject; ++t) {
      std::vector<double> fa(spec.num_features), fb(spec.num_features);
      while (true) {
        for (double& v : fa) v = static_cast<double>(rng.bit());
        for (double& v : fb) v = static_cast<double>(rng.bit());
        if (!spec.exclude_identical_options || fa != fb) break;
      }
      a.values.insert(a.values.end(), fa.begin(), fa.end());
      b.values.insert(b.values.end(), fb.begin(), fb.end());
    }

    msl::EvalOutput out = msl::evaluate(typed, spec.true_params, a, b);
    for (int t = 0; t < spec.trials_per_subject; ++t) {
      double prob_b = out.probs_b[t];
      Choice choice = rng.bernoulli(prob_b) ? Choice::B : Choice::A;

      TrialRecord rec;
      rec.subject_id = subject_id;
      rec.trial_index = t;
      rec.option_a.assign(
          a.values.begin() + static_cast<std::size_t>(t) * spec.num_features,
          a.values.begin() +
              static_cast<std::size_t>(t + 1) * spec.num_features);
      rec.option_b.assign(
          b.values.begin() + static_cast<std::size_t>(t) * spec.num_features,
          b.values.begin() +
              static_cast<std::size_t>(t + 1) * spec.num_features);
      rec.choice = choice;
      trials.records.push_back(std::move(rec));

      double p_choice = choice == Choice::B ? prob_b : 1.0 - prob_b;
      reference.entries[{subject_id, t}] = -std::log(p_choice);
    }
  }

  validate_trials(trials);
  validate_alignment(reference, trials);
  return {std::move(trials), std::move(reference)};
}

}  // namespace asmr
