#include <doctest.h>

#include <cmath>
#include <cstring>

#include "asmr/errors.hpp"
#include "asmr/fitting.hpp"
#include "asmr/msl/baselines.hpp"
#include "asmr/msl/parse.hpp"
#include "asmr/msl/typecheck.hpp"
#include "asmr/rng.hpp"
#include "asmr/synth.hpp"
#include "support/oracles.hpp"

using namespace asmr;
using asmr::testing::grid_search_min_nll;

namespace {

std::vector<SubjectData> synthetic_subjects(int n, std::uint64_t seed) {
  GeneratorSpec spec = default_generator_spec();
  spec.num_subjects = n;
  spec.seed = seed;
  auto [trials, reference] = generate(spec);
  (void)reference;
  return split_by_subject(trials);
}

bool bitwise_equal(const std::vector<double>& a,
                   const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  return a.empty() ||
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("fitting") {

TEST_CASE("nll of the uniform predictor is n ln 2") {
  std::vector<double> probs(96, 0.5);
  std::vector<Choice> choices(96, Choice::A);
  for (int t = 0; t < 96; t += 3) choices[t] = Choice::B;
  NllResult res = nll(probs, choices);
  CHECK(res.total == doctest::Approx(96.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(res.total == doctest::Approx(66.542).epsilon(1e-4));
}

TEST_CASE("nll at the clip boundary") {
  std::vector<double> probs{1.0 - 1e-5};
  std::vector<Choice> choices{Choice::B};
  NllResult res = nll(probs, choices);
  CHECK(res.per_trial[0] == doctest::Approx(1.000005e-5).epsilon(1e-6));
  CHECK(res.per_trial[0] > 0.0);
}

TEST_CASE("nll of the weighted additive hand example") {
  // P(B) = logistic(1.2) and the human chose A.
  std::vector<double> probs{0.7685247834990175};
  std::vector<Choice> choices{Choice::A};
  NllResult res = nll(probs, choices);
  CHECK(res.per_trial[0] == doctest::Approx(1.4633).epsilon(1e-4));
  CHECK(res.per_trial[0] ==
        doctest::Approx(-std::log(1.0 - 0.7685247834990175)).epsilon(1e-15));
}

TEST_CASE("nll length mismatch") {
  std::vector<double> probs(3, 0.5);
  std::vector<Choice> choices(2, Choice::A);
  CHECK_THROWS_AS(nll(probs, choices), LengthMismatch);
}

TEST_CASE("aic formula") {
  CHECK(aic(1, 35.365) == doctest::Approx(72.73));
  CHECK(aic(0, 0.0) == 0.0);
  CHECK(aic(2, 33.865) == doctest::Approx(71.73));
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    int k = static_cast<int>(rng.below(10));
    double total = rng.uniform(0.0, 200.0);
    CHECK(aic(k, total) == 2.0 * k + 2.0 * total);
  }
}

TEST_CASE("one-parameter fits match a dense grid search") {
  auto subjects = synthetic_subjects(3, 17);
  for (auto cls :
       {msl::ModelClass::wadd, msl::ModelClass::ttb, msl::ModelClass::eqw}) {
    msl::TypedProgram typed = msl::typecheck(msl::baseline(cls), 4);
    for (const auto& subject : subjects) {
      FitResult fr = fit(typed, subject, 31);
      double grid = grid_search_min_nll(typed, subject, -10.0, 10.0, 2001);
      CHECK(std::fabs(fr.total_nll - grid) <= 1e-3);
    }
  }
}

TEST_CASE("random responding is recovered as a flat predictor") {
  GeneratorSpec spec = default_generator_spec();
  spec.true_params = {1.5, 0.0};  // zero decision-noise scale
  spec.num_subjects = 1;
  spec.seed = 23;
  auto [trials, reference] = generate(spec);
  (void)reference;
  auto subjects = split_by_subject(trials);
  msl::TypedProgram typed = msl::typecheck(msl::baseline(msl::ModelClass::wadd), 4);
  FitResult fr = fit(typed, subjects[0], 5);
  CHECK(std::fabs(fr.total_nll - 96.0 * std::log(2.0)) <= 1.0);
}

TEST_CASE("the fitted model beats the generating parameters on its sample") {
  GeneratorSpec spec = default_generator_spec();
  spec.num_subjects = 4;
  spec.seed = 41;
  auto [trials, reference] = generate(spec);
  auto subjects = split_by_subject(trials);
  msl::TypedProgram typed = msl::typecheck(spec.true_model, 4);
  for (const auto& subject : subjects) {
    FitResult fr = fit(typed, subject, 77);
    double true_total = 0.0;
    for (int t = 0; t < subject.num_trials; ++t)
      true_total += reference.at(subject.subject_id, t);
    CHECK(fr.total_nll <= true_total + 1e-6);
  }
}

TEST_CASE("fit result invariants hold") {
  auto subjects = synthetic_subjects(2, 3);
  msl::TypedProgram typed = msl::typecheck(msl::baseline(msl::ModelClass::ttb), 4);
  FitResult fr = fit(typed, subjects[0], 9);
  double sum = 0.0;
  for (double v : fr.per_trial_nll) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(fr.total_nll == doctest::Approx(sum).epsilon(1e-9));
  CHECK(fr.aic == 2.0 * 1 + 2.0 * fr.total_nll);
  CHECK(fr.params_hat.size() == 1);
  CHECK(fr.optimizer_meta.restarts_used == 10);
  CHECK(fr.optimizer_meta.function_evals > 0);
}

TEST_CASE("fits are deterministic given the seed, bit for bit") {
  auto subjects = synthetic_subjects(1, 29);
  msl::TypedProgram typed = msl::typecheck(msl::baseline(msl::ModelClass::wadd), 4);
  FitResult a = fit(typed, subjects[0], 1234);
  FitResult b = fit(typed, subjects[0], 1234);
  CHECK(bitwise_equal(a.params_hat, b.params_hat));
  CHECK(bitwise_equal(a.per_trial_nll, b.per_trial_nll));
  CHECK(std::memcmp(&a.total_nll, &b.total_nll, sizeof(double)) == 0);

  FitResult c = fit(typed, subjects[0], 1235);
  CHECK(std::fabs(a.total_nll - c.total_nll) <= 1e-6);  // same optimum
}

TEST_CASE("best-of-n restarts is monotone in n") {
  auto subjects = synthetic_subjects(1, 53);
  msl::TypedProgram typed =
      msl::typecheck(msl::adaptive_validity_model(), 4);
  double previous = std::numeric_limits<double>::infinity();
  for (int restarts = 1; restarts <= 6; ++restarts) {
    FitOptions options;
    options.restarts = restarts;
    FitResult fr = fit(typed, subjects[0], 99, options);
    CHECK(fr.total_nll <= previous + 1e-12);
    previous = fr.total_nll;
  }
}

TEST_CASE("the optimizer gradient agrees with an independent stencil") {
  auto subjects = synthetic_subjects(1, 61);
  const SubjectData& subject = subjects[0];
  msl::FeatureMatrix a = matrix_a(subject);
  msl::FeatureMatrix b = matrix_b(subject);
  Rng rng(2);
  for (auto cls :
       {msl::ModelClass::wadd, msl::ModelClass::ttb, msl::ModelClass::eqw}) {
    msl::TypedProgram typed = msl::typecheck(msl::baseline(cls), 4);
    Objective objective = [&](std::span<const double> params) {
      auto out = msl::evaluate(typed, params, a, b);
      return nll(out.probs_b, subject.choices).total;
    };
    for (int round = 0; round < 100; ++round) {
      std::vector<double> x{rng.normal()};
      auto fine = fd_gradient(objective, x, 1e-6);
      auto coarse = fd_gradient(objective, x, 1e-4);
      double denom = std::max({std::fabs(fine[0]), std::fabs(coarse[0]),
                               1e-6});
      CHECK(std::fabs(fine[0] - coarse[0]) / denom <= 1e-3);
    }
  }
}

TEST_CASE("zero-parameter models skip optimization") {
  auto subjects = synthetic_subjects(1, 71);
  msl::TypedProgram typed = msl::typecheck(
      msl::parse("params 0;\nmodel = logistic(sum(B) - sum(A));"), 4);
  FitResult fr = fit(typed, subjects[0], 0);
  CHECK(fr.params_hat.empty());
  CHECK(fr.optimizer_meta.restarts_used == 0);
  CHECK(fr.optimizer_meta.converged);
  CHECK(fr.aic == doctest::Approx(2.0 * fr.total_nll));
}

TEST_CASE("a model that never evaluates finitely is an optimizer failure") {
  auto subjects = synthetic_subjects(1, 83);
  msl::TypedProgram typed = msl::typecheck(
      msl::parse("params 1;\nmodel = sum(A) + p[0] + 0 / 0;"), 4);
  CHECK_THROWS_AS(fit(typed, subjects[0], 7), OptimizerFailure);
}

}  // TEST_SUITE
