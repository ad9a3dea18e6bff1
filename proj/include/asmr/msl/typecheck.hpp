#ifndef ASMR_MSL_TYPECHECK_HPP_
#define ASMR_MSL_TYPECHECK_HPP_

#include <vector>

#include "asmr/msl/ast.hpp"

namespace asmr::msl {

// Shape of a value flowing through a model expression. FeatVector length is
// the paradigm's feature count; TrialVector length is only known at
// evaluation time.
enum class MslType { Scalar, FeatVector, TrialVector, FeatMatrix };

const char* type_name(MslType t);

// A typechecked, immutable program. node_types is indexed by Expr::node_id;
// the body type is always TrialVector.
struct TypedProgram {
  ModelProgram program;
  int num_features = 0;
  std::vector<MslType> node_types;

  int num_parameters() const { return program.num_parameters; }
  MslType type_of(const Expr& e) const { return node_types[e.node_id]; }
};

// Assigns one MslType to every node. Elementwise operations accept equal
// shapes or a scalar operand; dot pairs a feature matrix with a feature
// vector (yielding a trial vector) or two feature vectors (yielding a
// scalar); the body must typecheck to TrialVector. Throws TypeError.
TypedProgram typecheck(const ModelProgram& program, int num_features);

}  // namespace asmr::msl

#endif  // ASMR_MSL_TYPECHECK_HPP_
