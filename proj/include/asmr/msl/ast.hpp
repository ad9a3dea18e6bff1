#ifndef ASMR_MSL_AST_HPP_
#define ASMR_MSL_AST_HPP_

#include <memory>
#include <string>
#include <vector>

namespace asmr::msl {

// A program is `params <k>;` followed by `model = <expr>;`. The expression
// language is total: no loops, no recursion, no side effects. Inputs are the
// per-trial feature matrices A and B; free parameters are referenced as p[i].

enum class NodeKind {
  Number,     // nonnegative literal; negatives are Neg(Number)
  Param,      // p[i]
  InputA,
  InputB,
  VectorLit,  // [e0, ..., en-1], elements scalar-typed
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Lt,
  Le,
  Gt,
  Ge,
  Eq,
  Ne,
  Call,
};

enum class Builtin {
  Dot,       // rowwise inner product of a feature matrix with a feature vector
  Sum,       // over features: matrix -> trial vector, vector -> scalar
  Logistic,  // 1 / (1 + exp(-x)), elementwise
  Exp,
  Log,
  Abs,
  Min,   // elementwise, two arguments
  Max,
  Clip,  // clip(x, lo, hi) with scalar bounds
  Where, // where(cond, x, y): cond != 0 selects x
};

struct SourcePos {
  int line = 0;
  int column = 0;
};

struct Expr {
  using Ptr = std::unique_ptr<Expr>;

  NodeKind kind = NodeKind::Number;
  double number = 0.0;            // Number
  int param_index = 0;            // Param
  Builtin builtin = Builtin::Dot; // Call
  std::vector<Ptr> children;
  SourcePos pos;
  int node_id = -1;  // assigned by the parser in preorder
};

// Parsed candidate cognitive model. Immutable after construction; copies
// share the expression tree.
struct ModelProgram {
  std::string source;
  int num_parameters = 0;
  std::shared_ptr<const Expr> body;
  int node_count = 0;
};

bool structurally_equal(const Expr& a, const Expr& b);

inline bool structurally_equal(const ModelProgram& a, const ModelProgram& b) {
  return a.num_parameters == b.num_parameters && a.body && b.body &&
         structurally_equal(*a.body, *b.body);
}

const char* builtin_name(Builtin b);

// Limits on reviser-supplied programs.
inline constexpr std::size_t kMaxProgramSize = 10000;
inline constexpr int kMaxAstDepth = 64;

}  // namespace asmr::msl

#endif  // ASMR_MSL_AST_HPP_
