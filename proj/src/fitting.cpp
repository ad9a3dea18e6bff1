#include "asmr/fitting.hpp"

#include <cmath>
#include <limits>

#include "asmr/errors.hpp"
#include "asmr/rng.hpp"

namespace asmr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

FitResult score_at(const msl::TypedProgram& prog,
                   std::span<const double> params, const SubjectData& subject,
                   const msl::FeatureMatrix& a, const msl::FeatureMatrix& b) {
  msl::EvalOutput out = msl::evaluate(prog, params, a, b);
  NllResult n = nll(out.probs_b, subject.choices);
  FitResult fr;
  fr.subject_id = subject.subject_id;
  fr.params_hat.assign(params.begin(), params.end());
  fr.per_trial_nll = std::move(n.per_trial);
  fr.total_nll = n.total;
  fr.aic = aic(prog.num_parameters(), n.total);
  return fr;
}

}  // namespace

NllResult nll(std::span<const double> probs_b,
              std::span<const Choice> choices) {
  if (probs_b.size() != choices.size())
    throw LengthMismatch("probs_b has " + std::to_string(probs_b.size()) +
                         " entries but choices has " +
                         std::to_string(choices.size()));
  NllResult res;
  res.per_trial.resize(probs_b.size());
  for (std::size_t t = 0; t < probs_b.size(); ++t) {
    double p = choices[t] == Choice::B ? probs_b[t] : 1.0 - probs_b[t];
    res.per_trial[t] = -std::log(p);
    res.total += res.per_trial[t];
  }
  return res;
}

msl::FeatureMatrix matrix_a(const SubjectData& subject) {
  return {subject.num_trials, subject.num_features, subject.option_a};
}

msl::FeatureMatrix matrix_b(const SubjectData& subject) {
  return {subject.num_trials, subject.num_features, subject.option_b};
}

FitResult fit(const msl::TypedProgram& prog, const SubjectData& subject,
              std::uint64_t seed, const FitOptions& options) {
  if (subject.num_trials <= 0)
    throw ValidationError("cannot fit subject " + subject.subject_id +
                          " with no trials");
  const msl::FeatureMatrix a = matrix_a(subject);
  const msl::FeatureMatrix b = matrix_b(subject);
  const int k = prog.num_parameters();

  if (k == 0) {
    // Nothing to optimize; evaluation is the fit.
    FitResult fr = score_at(prog, {}, subject, a, b);
    fr.optimizer_meta = {0, true, 1};
    return fr;
  }

  Objective objective = [&](std::span<const double> params) -> double {
    try {
      msl::EvalOutput out = msl::evaluate(prog, params, a, b);
      double total = nll(out.probs_b, subject.choices).total;
      return std::isnan(total) ? kInf : total;
    } catch (const EvalError&) {
      return kInf;
    }
  };

  Rng rng(seed);
  MinimizeResult best;
  best.value = kInf;
  bool have_best = false;
  long total_evals = 0;

  for (int r = 0; r < options.restarts; ++r) {
    std::vector<double> start(k);
    for (double& x : start) x = rng.normal();
    MinimizeResult res = minimize_bfgs(objective, std::move(start),
                                       options.minimize);
    total_evals += res.function_evals;
    if (std::isfinite(res.value) && (!have_best || res.value < best.value)) {
      best = std::move(res);
      have_best = true;
    }
  }

  if (!have_best)
    throw OptimizerFailure("every restart produced a non-finite objective "
                           "for subject " + subject.subject_id);

  FitResult fr = score_at(prog, best.x, subject, a, b);
  fr.optimizer_meta = {options.restarts, best.converged, total_evals};
  return fr;
}

std::vector<FitResult> fit_all(const msl::TypedProgram& prog,
                               const std::vector<SubjectData>& subjects,
                               std::uint64_t seed, const FitOptions& options) {
  std::vector<FitResult> fits;
  fits.reserve(subjects.size());
  for (std::size_t i = 0; i < subjects.size(); ++i)
    fits.push_back(fit(prog, subjects[i],
                       derive_seed(seed, subjects[i].subject_id, i), options));
  return fits;
}

}  // namespace asmr
