#include "asmr/msl/typecheck.hpp"

#include <string>

#include "asmr/errors.hpp"

namespace asmr::msl {

const char* type_name(MslType t) {
  switch (t) {
    case MslType::Scalar: return "Scalar";
    case MslType::FeatVector: return "FeatVector";
    case MslType::TrialVector: return "TrialVector";
    case MslType::FeatMatrix: return "FeatMatrix";
  }
  return "?";
}

const char* builtin_name(Builtin b) {
  switch (b) {
    case Builtin::Dot: return "dot";
    case Builtin::Sum: return "sum";
    case Builtin::Logistic: return "logistic";
    case Builtin::Exp: return "exp";
    case Builtin::Log: return "log";
    case Builtin::Abs: return "abs";
    case Builtin::Min: return "min";
    case Builtin::Max: return "max";
    case Builtin::Clip: return "clip";
    case Builtin::Where: return "where";
  }
  return "?";
}

namespace {

[[noreturn]] void type_fail(const Expr& e, const std::string& msg) {
  throw TypeError(msg + " (line " + std::to_string(e.pos.line) + ", column " +
                  std::to_string(e.pos.column) + ")");
}

class Checker {
 public:
  Checker(const ModelProgram& program, int num_features)
      : num_features_(num_features) {
    types_.resize(program.node_count, MslType::Scalar);
  }

  MslType check(const Expr& e) {
    MslType t = infer(e);
    types_[e.node_id] = t;
    return t;
  }

  std::vector<MslType> take_types() { return std::move(types_); }

 private:
  // Elementwise combination: equal shapes, or a scalar on either side.
  MslType broadcast(const Expr& site, const char* op, MslType a, MslType b) {
    if (a == b) return a;
    if (a == MslType::Scalar) return b;
    if (b == MslType::Scalar) return a;
    type_fail(site, std::string("cannot apply '") + op + "' to " +
                        type_name(a) + " and " + type_name(b));
  }

  MslType infer(const Expr& e) {
    switch (e.kind) {
      case NodeKind::Number:
      case NodeKind::Param:
        return MslType::Scalar;
      case NodeKind::InputA:
      case NodeKind::InputB:
        return MslType::FeatMatrix;
      case NodeKind::VectorLit: {
        for (const auto& child : e.children)
          if (check(*child) != MslType::Scalar)
            type_fail(*child, "vector literal elements must be scalars, got " +
                                  std::string(type_name(types_[child->node_id])));
        if (static_cast<int>(e.children.size()) != num_features_)
          type_fail(e, "vector literal must have " +
                           std::to_string(num_features_) + " elements, got " +
                           std::to_string(e.children.size()));
        return MslType::FeatVector;
      }
      case NodeKind::Neg:
        return check(*e.children[0]);
      case NodeKind::Add: return binary(e, "+");
      case NodeKind::Sub: return binary(e, "-");
      case NodeKind::Mul: return binary(e, "*");
      case NodeKind::Div: return binary(e, "/");
      case NodeKind::Lt: return binary(e, "<");
      case NodeKind::Le: return binary(e, "<=");
      case NodeKind::Gt: return binary(e, ">");
      case NodeKind::Ge: return binary(e, ">=");
      case NodeKind::Eq: return binary(e, "==");
      case NodeKind::Ne: return binary(e, "!=");
      case NodeKind::Call: return call(e);
    }
    type_fail(e, "unhandled node");
  }

  MslType binary(const Expr& e, const char* op) {
    MslType a = check(*e.children[0]);
    MslType b = check(*e.children[1]);
    return broadcast(e, op, a, b);
  }

  MslType call(const Expr& e) {
    switch (e.builtin) {
      case Builtin::Dot: {
        MslType a = check(*e.children[0]);
        MslType b = check(*e.children[1]);
        bool mat_vec = (a == MslType::FeatMatrix && b == MslType::FeatVector) ||
                       (a == MslType::FeatVector && b == MslType::FeatMatrix);
        if (mat_vec) return MslType::TrialVector;
        if (a == MslType::FeatVector && b == MslType::FeatVector)
          return MslType::Scalar;
        type_fail(e, std::string("'dot' pairs a FeatMatrix with a FeatVector "
                                 "(or two FeatVectors), got ") +
                         type_name(a) + " and " + type_name(b));
      }
      case Builtin::Sum: {
        MslType a = check(*e.children[0]);
        if (a == MslType::FeatMatrix) return MslType::TrialVector;
        if (a == MslType::FeatVector) return MslType::Scalar;
        type_fail(e, std::string("'sum' reduces over features and takes a "
                                 "FeatMatrix or FeatVector, got ") +
                         type_name(a));
      }
      case Builtin::Logistic:
      case Builtin::Exp:
      case Builtin::Log:
      case Builtin::Abs:
        return check(*e.children[0]);
      case Builtin::Min:
      case Builtin::Max: {
        MslType a = check(*e.children[0]);
        MslType b = check(*e.children[1]);
        return broadcast(e, builtin_name(e.builtin), a, b);
      }
      case Builtin::Clip: {
        MslType x = check(*e.children[0]);
        MslType lo = check(*e.children[1]);
        MslType hi = check(*e.children[2]);
        if (lo != MslType::Scalar || hi != MslType::Scalar)
          type_fail(e, std::string("'clip' bounds must be scalars, got ") +
                           type_name(lo) + " and " + type_name(hi));
        return x;
      }
      case Builtin::Where: {
        MslType c = check(*e.children[0]);
        MslType x = check(*e.children[1]);
        MslType y = check(*e.children[2]);
        MslType branches = broadcast(e, "where", x, y);
        return broadcast(e, "where", c, branches);
      }
    }
    type_fail(e, "unhandled builtin");
  }

  int num_features_;
  std::vector<MslType> types_;
};

}  // namespace

TypedProgram typecheck(const ModelProgram& program, int num_features) {
  if (!program.body) throw TypeError("program has no body");
  Checker checker(program, num_features);
  MslType result = checker.check(*program.body);
  if (result != MslType::TrialVector)
    throw TypeError(std::string("model must evaluate to a per-trial "
                                "probability vector (TrialVector), got ") +
                    type_name(result));
  TypedProgram typed;
  typed.program = program;
  typed.num_features = num_features;
  typed.node_types = checker.take_types();
  return typed;
}

}  // namespace asmr::msl
