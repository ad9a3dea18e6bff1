#ifndef ASMR_MSL_BASELINES_HPP_
#define ASMR_MSL_BASELINES_HPP_

#include <string>

#include "asmr/msl/ast.hpp"

namespace asmr::msl {

enum class ModelClass { wadd, ttb, eqw };

const char* model_class_name(ModelClass c);
ModelClass model_class_from_name(const std::string& name);

// The three initial strategies: weighted additive (validities
// 0.9/0.8/0.7/0.6), take-the-best (geometric weights 1/0.5/0.25/0.125, so
// the top cue dominates at high decision noise scales), and equal weighting.
// Each has one free parameter, the logistic scale.
ModelProgram baseline(ModelClass c);

struct Baselines {
  ModelProgram wadd;
  ModelProgram ttb;
  ModelProgram eqw;
};

Baselines baselines();

// Two-parameter variant of the weighted additive strategy whose first
// parameter rescales the top expert's validity, interpolating between
// take-the-best-like and weighted-additive behavior. Used as the default
// ground truth for synthetic data.
ModelProgram adaptive_validity_model();

}  // namespace asmr::msl

#endif  // ASMR_MSL_BASELINES_HPP_
