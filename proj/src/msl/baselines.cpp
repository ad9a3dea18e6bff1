#include "asmr/msl/baselines.hpp"

#include "asmr/errors.hpp"
#include "asmr/msl/parse.hpp"

namespace asmr::msl {

namespace {

constexpr const char* kWaddSource =
    "# weighted additive strategy\n"
    "params 1;\n"
    "model = logistic(p[0] * (dot(B, [0.9, 0.8, 0.7, 0.6]) - "
    "dot(A, [0.9, 0.8, 0.7, 0.6])));\n";

constexpr const char* kTtbSource =
    "# take-the-best heuristic\n"
    "params 1;\n"
    "model = logistic(p[0] * (dot(B, [1.0, 0.5, 0.25, 0.125]) - "
    "dot(A, [1.0, 0.5, 0.25, 0.125])));\n";

constexpr const char* kEqwSource =
    "# equal weighting heuristic\n"
    "params 1;\n"
    "model = logistic(p[0] * (sum(B) - sum(A)));\n";

constexpr const char* kAdaptiveValiditySource =
    "# adaptive top-validity weighting\n"
    "params 2;\n"
    "model = logistic(p[1] * (dot(B, [p[0] * 0.9, 0.8, 0.7, 0.6]) - "
    "dot(A, [p[0] * 0.9, 0.8, 0.7, 0.6])));\n";

}  // namespace

const char* model_class_name(ModelClass c) {
  switch (c) {
    case ModelClass::wadd: return "wadd";
    case ModelClass::ttb: return "ttb";
    case ModelClass::eqw: return "eqw";
  }
  return "?";
}

ModelClass model_class_from_name(const std::string& name) {
  if (name == "wadd") return ModelClass::wadd;
  if (name == "ttb") return ModelClass::ttb;
  if (name == "eqw") return ModelClass::eqw;
  throw ValidationError("unknown model class '" + name +
                        "' (expected wadd, ttb or eqw)");
}

ModelProgram baseline(ModelClass c) {
  switch (c) {
    case ModelClass::wadd: return parse(kWaddSource);
    case ModelClass::ttb: return parse(kTtbSource);
    case ModelClass::eqw: return parse(kEqwSource);
  }
  throw ValidationError("unknown model class");
}

Baselines baselines() {
  return {baseline(ModelClass::wadd), baseline(ModelClass::ttb),
          baseline(ModelClass::eqw)};
}

ModelProgram adaptive_validity_model() {
  return parse(kAdaptiveValiditySource);
}

}  // namespace asmr::msl
