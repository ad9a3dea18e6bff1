#include <doctest.h>

#include <cmath>
#include <string>

#include "asmr/errors.hpp"
#include "asmr/msl/baselines.hpp"
#include "asmr/msl/eval.hpp"
#include "asmr/msl/parse.hpp"
#include "asmr/msl/print.hpp"
#include "asmr/msl/typecheck.hpp"
#include "asmr/rng.hpp"
#include "support/oracles.hpp"

using namespace asmr;
using namespace asmr::msl;
using asmr::testing::BaselineKind;
using asmr::testing::closed_form_baseline;
using asmr::testing::ProgramGenerator;
using asmr::testing::random_binary_matrix;

namespace {

FeatureMatrix single_row(std::initializer_list<double> values) {
  return FeatureMatrix{1, 4, std::vector<double>(values)};
}

EvalOutput eval_source(const std::string& source,
                       std::initializer_list<double> params,
                       const FeatureMatrix& a, const FeatureMatrix& b) {
  TypedProgram typed = typecheck(parse(source), 4);
  return evaluate(typed, std::vector<double>(params), a, b);
}

}  // namespace

TEST_SUITE("msl") {

TEST_CASE("the baselines parse with one declared parameter") {
  Baselines all = baselines();
  CHECK(all.wadd.num_parameters == 1);
  CHECK(all.ttb.num_parameters == 1);
  CHECK(all.eqw.num_parameters == 1);
  CHECK(adaptive_validity_model().num_parameters == 2);
  for (const ModelProgram* prog : {&all.wadd, &all.ttb, &all.eqw})
    CHECK_NOTHROW(typecheck(*prog, 4));
}

TEST_CASE("parameter references beyond the declared count are rejected") {
  CHECK_THROWS_AS(parse("params 1;\nmodel = sum(A) * p[1];"),
                  ValidationError);
  CHECK_THROWS_AS(parse("params 0;\nmodel = sum(A) * p[0];"),
                  ValidationError);
}

TEST_CASE("header errors") {
  CHECK_THROWS_AS(parse("model = sum(A);"), HeaderError);
  CHECK_THROWS_AS(parse("params -1;\nmodel = sum(A);"), HeaderError);
  CHECK_THROWS_AS(parse("params 1.5;\nmodel = sum(A);"), HeaderError);
  CHECK_THROWS_AS(parse("params one;\nmodel = sum(A);"), HeaderError);
}

TEST_CASE("parse errors report position and the unexpected token") {
  try {
    parse("params 1;\nmodel = sum(A) + ;");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(std::string(e.what()).find("expected an expression") !=
          std::string::npos);
  }
  CHECK_THROWS_AS(parse("params 1;\nmodel = foo(A);"), ParseError);
  CHECK_THROWS_AS(parse("params 1;\nmodel = sum(A); extra"), ParseError);
  CHECK_THROWS_AS(parse("params 1;\nmodel = dot(A);"), ParseError);
}

TEST_CASE("program size and depth limits") {
  std::string big = "params 1;\nmodel = sum(A)";
  while (big.size() < kMaxProgramSize + 10) big += " + sum(B)";
  big += ";";
  CHECK_THROWS_AS(parse(big), ParseError);

  std::string deep = "params 0;\nmodel = ";
  for (int i = 0; i < 80; ++i) deep += "logistic(";
  deep += "sum(A)";
  for (int i = 0; i < 80; ++i) deep += ")";
  deep += ";";
  CHECK_THROWS_AS(parse(deep), ParseError);
}

TEST_CASE("typechecking assigns shapes and rejects mismatches") {
  CHECK_NOTHROW(typecheck(
      parse("params 0;\nmodel = dot(A, [0.9, 0.8, 0.7, 0.6]);"), 4));
  CHECK_NOTHROW(typecheck(
      parse("params 1;\nmodel = logistic(p[0] * (dot(B, [1, 1, 1, 1]) - "
            "dot(A, [1, 1, 1, 1])));"),
      4));

  // FeatVector + FeatMatrix without dot
  CHECK_THROWS_WITH_AS(
      typecheck(parse("params 0;\nmodel = sum([1, 2, 3, 4] + A);"), 4),
      doctest::Contains("FeatVector"), TypeError);
  // scalar body
  CHECK_THROWS_AS(typecheck(parse("params 1;\nmodel = logistic(p[0]);"), 4),
                  TypeError);
  // wrong vector arity for the paradigm
  CHECK_THROWS_AS(
      typecheck(parse("params 0;\nmodel = dot(A, [1, 2, 3]);"), 4),
      TypeError);
  // vector elements must be scalars
  CHECK_THROWS_AS(
      typecheck(parse("params 0;\nmodel = dot(A, [sum(A), 1, 2, 3]);"), 4),
      TypeError);
  // clip bounds must be scalars
  CHECK_THROWS_AS(
      typecheck(
          parse("params 0;\nmodel = clip(sum(A), [1, 1, 1, 1], 2);"), 4),
      TypeError);
}

TEST_CASE("weighted additive hand example") {
  // value_A = 0.9, value_B = 0.8 + 0.7 + 0.6 = 2.1, diff = 1.2
  EvalOutput out = eval_source(
      "params 1;\nmodel = logistic(p[0] * (dot(B, [0.9, 0.8, 0.7, 0.6]) - "
      "dot(A, [0.9, 0.8, 0.7, 0.6])));",
      {1.0}, single_row({1, 0, 0, 0}), single_row({0, 1, 1, 1}));
  REQUIRE(out.probs_b.size() == 1);
  CHECK(out.probs_b[0] == doctest::Approx(0.7685247834990175).epsilon(1e-12));
}

TEST_CASE("take-the-best hand example checks top-cue dominance") {
  // value_A = 1.0, value_B = 0.5 + 0.25 + 0.125 = 0.875, scaled diff -1.25
  EvalOutput out = eval_source(
      "params 1;\nmodel = logistic(p[0] * (dot(B, [1.0, 0.5, 0.25, 0.125]) - "
      "dot(A, [1.0, 0.5, 0.25, 0.125])));",
      {10.0}, single_row({1, 0, 0, 0}), single_row({0, 1, 1, 1}));
  REQUIRE(out.probs_b.size() == 1);
  CHECK(out.probs_b[0] == doctest::Approx(0.2227001388253009).epsilon(1e-12));
}

TEST_CASE("identical options give indifference under difference models") {
  Baselines all = baselines();
  FeatureMatrix same = single_row({1, 0, 1, 0});
  for (const ModelProgram* prog : {&all.wadd, &all.ttb, &all.eqw}) {
    TypedProgram typed = typecheck(*prog, 4);
    double params[1] = {2.5};
    EvalOutput out =
        evaluate(typed, std::span<const double>(params, 1), same, same);
    CHECK(out.probs_b[0] == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("outputs are always clipped and evaluation is pure") {
  TypedProgram typed = typecheck(baseline(ModelClass::wadd), 4);
  Rng rng(21);
  FeatureMatrix a = random_binary_matrix(rng, 64, 4);
  FeatureMatrix b = random_binary_matrix(rng, 64, 4);
  double params[1] = {5000.0};  // saturates the logistic
  EvalOutput first =
      evaluate(typed, std::span<const double>(params, 1), a, b);
  EvalOutput second =
      evaluate(typed, std::span<const double>(params, 1), a, b);
  for (std::size_t t = 0; t < first.probs_b.size(); ++t) {
    CHECK(first.probs_b[t] >= kProbEpsilon);
    CHECK(first.probs_b[t] <= 1.0 - kProbEpsilon);
    CHECK(first.probs_b[t] == second.probs_b[t]);  // bit-identical
  }
}

TEST_CASE("division by zero is tolerated, NaN is not") {
  FeatureMatrix a = single_row({1, 0, 0, 0});
  FeatureMatrix b = single_row({0, 1, 1, 1});
  // inf flows into the logistic and clips cleanly
  EvalOutput inf_out =
      eval_source("params 0;\nmodel = logistic(sum(A) + 1 / 0);", {}, a, b);
  CHECK(inf_out.probs_b[0] == 1.0 - kProbEpsilon);
  // NaN in the pre-clip output is an evaluation error
  CHECK_THROWS_AS(
      eval_source("params 0;\nmodel = sum(A) + 0 / 0;", {}, a, b),
      EvalError);
}

TEST_CASE("comparisons, where, clip and min behave elementwise") {
  FeatureMatrix a = single_row({1, 1, 0, 0});
  FeatureMatrix b = single_row({0, 1, 1, 0});
  // sum(A) = 2, sum(B) = 2: equality holds, where picks 0.75
  EvalOutput out = eval_source(
      "params 0;\nmodel = where(sum(A) == sum(B), sum(B) * 0 + 0.75, "
      "sum(B) * 0 + 0.25);",
      {}, a, b);
  CHECK(out.probs_b[0] == doctest::Approx(0.75));

  EvalOutput cmp = eval_source(
      "params 0;\nmodel = 0.1 + 0.5 * (dot(B, [1, 0, 0, 0]) > "
      "dot(A, [1, 0, 0, 0]));",
      {}, a, b);
  CHECK(cmp.probs_b[0] == doctest::Approx(0.1));  // A wins on feature 1

  EvalOutput clipped = eval_source(
      "params 0;\nmodel = clip(sum(B) - sum(A) + 0.9, 0.2, 0.8);", {}, a, b);
  CHECK(clipped.probs_b[0] == doctest::Approx(0.8));

  EvalOutput mn =
      eval_source("params 0;\nmodel = min(sum(A) * 0.3, 0.45);", {}, a, b);
  CHECK(mn.probs_b[0] == doctest::Approx(0.45));
}

TEST_CASE("baselines match an independent closed-form implementation") {
  Baselines all = baselines();
  const struct {
    const ModelProgram* prog;
    BaselineKind kind;
  } cases[] = {{&all.wadd, BaselineKind::wadd},
               {&all.ttb, BaselineKind::ttb},
               {&all.eqw, BaselineKind::eqw}};
  Rng rng(314);
  for (const auto& c : cases) {
    TypedProgram typed = typecheck(*c.prog, 4);
    for (int round = 0; round < 1000; ++round) {
      int trials = 1 + static_cast<int>(rng.below(8));
      FeatureMatrix a = random_binary_matrix(rng, trials, 4);
      FeatureMatrix b = random_binary_matrix(rng, trials, 4);
      double scale = rng.normal() * 3.0;
      EvalOutput out =
          evaluate(typed, std::span<const double>(&scale, 1), a, b);
      std::vector<double> expected = closed_form_baseline(c.kind, scale, a, b);
      for (int t = 0; t < trials; ++t)
        CHECK(std::fabs(out.probs_b[t] - expected[t]) <= 1e-12);
    }
  }
}

TEST_CASE("swapping the options mirrors the probabilities") {
  Baselines all = baselines();
  Rng rng(77);
  for (const ModelProgram* prog : {&all.wadd, &all.ttb, &all.eqw}) {
    TypedProgram typed = typecheck(*prog, 4);
    for (int round = 0; round < 50; ++round) {
      FeatureMatrix a = random_binary_matrix(rng, 16, 4);
      FeatureMatrix b = random_binary_matrix(rng, 16, 4);
      double scale = rng.normal() * 2.0;
      EvalOutput fwd = evaluate(typed, std::span<const double>(&scale, 1),
                                a, b);
      EvalOutput rev = evaluate(typed, std::span<const double>(&scale, 1),
                                b, a);
      for (int t = 0; t < 16; ++t)
        CHECK(fwd.probs_b[t] ==
              doctest::Approx(1.0 - rev.probs_b[t]).epsilon(1e-9));
    }
  }
}

TEST_CASE("take-the-best weights let the top expert dominate") {
  TypedProgram typed = typecheck(baseline(ModelClass::ttb), 4);
  Rng rng(4242);
  double scale = 50.0;
  for (int round = 0; round < 200; ++round) {
    FeatureMatrix a = random_binary_matrix(rng, 1, 4);
    FeatureMatrix b = random_binary_matrix(rng, 1, 4);
    if (a.at(0, 0) == b.at(0, 0)) continue;  // expert 1 must discriminate
    EvalOutput out = evaluate(typed, std::span<const double>(&scale, 1), a, b);
    double rounded = out.probs_b[0] >= 0.5 ? 1.0 : 0.0;
    CHECK(rounded == b.at(0, 0));  // follows expert 1's approval
  }
}

TEST_CASE("printing is canonical") {
  ModelProgram eqw = baseline(ModelClass::eqw);
  std::string text = print(eqw);
  CHECK(text.find("sum(A)") != std::string::npos);
  CHECK(text.find("sum(B)") != std::string::npos);
  CHECK(print(parse(text)) == text);  // idempotent

  // precedence round trips
  const char* sources[] = {
      "params 2;\nmodel = sum(A) - (p[0] - p[1]) * sum(B);",
      "params 1;\nmodel = sum(A) / (p[0] / (2 + 3)) - -sum(B);",
      "params 0;\nmodel = where(sum(A) <= sum(B), sum(A) * 0.5, "
      "max(sum(B), 1) * 0.125);",
  };
  for (const char* src : sources) {
    ModelProgram prog = parse(src);
    std::string printed = print(prog);
    CHECK(structurally_equal(prog, parse(printed)));
    CHECK(print(parse(printed)) == printed);
  }
}

TEST_CASE("random programs survive print/parse round trips") {
  Rng rng(20250808);
  ProgramGenerator gen(rng, 4);
  for (int round = 0; round < 1000; ++round) {
    ModelProgram prog = gen.generate();
    std::string printed = print(prog);
    ModelProgram reparsed = parse(printed);
    REQUIRE(structurally_equal(prog, reparsed));
    REQUIRE(print(reparsed) == printed);
    CHECK_NOTHROW(typecheck(reparsed, 4));
  }
}

TEST_CASE("random programs evaluate to clipped outputs or fail cleanly") {
  Rng rng(5150);
  ProgramGenerator gen(rng, 4);
  int evaluated = 0;
  for (int round = 0; round < 300; ++round) {
    ModelProgram prog = parse(print(gen.generate()));
    TypedProgram typed = typecheck(prog, 4);
    FeatureMatrix a = random_binary_matrix(rng, 12, 4);
    FeatureMatrix b = random_binary_matrix(rng, 12, 4);
    std::vector<double> params(prog.num_parameters);
    for (double& v : params) v = rng.normal();
    try {
      EvalOutput out = evaluate(typed, params, a, b);
      EvalOutput again = evaluate(typed, params, a, b);
      REQUIRE(out.probs_b.size() == 12);
      for (int t = 0; t < 12; ++t) {
        CHECK(out.probs_b[t] >= kProbEpsilon);
        CHECK(out.probs_b[t] <= 1.0 - kProbEpsilon);
        CHECK(out.probs_b[t] == again.probs_b[t]);
      }
      ++evaluated;
    } catch (const EvalError&) {
      // NaN outputs are a legal, clean failure mode
    }
  }
  CHECK(evaluated > 100);  // most programs evaluate finitely
}

TEST_CASE("legal nesting near the depth limit round-trips") {
  std::string source = "params 0;\nmodel = ";
  for (int i = 0; i < 30; ++i) source += "logistic(";
  source += "sum(A)";
  for (int i = 0; i < 30; ++i) source += ")";
  source += ";";
  ModelProgram prog = parse(source);
  std::string printed = print(prog);
  CHECK(structurally_equal(prog, parse(printed)));
  CHECK_NOTHROW(typecheck(prog, 4));
}

TEST_CASE("comments are allowed around the program") {
  ModelProgram prog = parse(
      "# scale-only strategy\nparams 1;  # one parameter\n"
      "model = logistic(p[0] * (sum(B) - sum(A)));\n# done\n");
  CHECK(prog.num_parameters == 1);
}

}  // TEST_SUITE
