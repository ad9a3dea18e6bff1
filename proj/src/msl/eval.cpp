#include "asmr/msl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asmr/errors.hpp"

namespace asmr::msl {

namespace {

// Runtime value: a scalar or a flat buffer whose shape is given by its type.
struct Value {
  MslType type = MslType::Scalar;
  double scalar = 0.0;
  std::vector<double> buf;

  static Value make_scalar(double v) { return {MslType::Scalar, v, {}}; }
};

class Evaluator {
 public:
  Evaluator(const TypedProgram& prog, std::span<const double> params,
            const FeatureMatrix& a, const FeatureMatrix& b)
      : prog_(prog), params_(params), a_(a), b_(b),
        num_trials_(a.num_trials), num_features_(a.num_features) {}

  Value eval(const Expr& e) {
    switch (e.kind) {
      case NodeKind::Number:
        return Value::make_scalar(e.number);
      case NodeKind::Param:
        return Value::make_scalar(params_[e.param_index]);
      case NodeKind::InputA:
        return matrix_value(a_);
      case NodeKind::InputB:
        return matrix_value(b_);
      case NodeKind::VectorLit: {
        Value out{MslType::FeatVector, 0.0, {}};
        out.buf.reserve(e.children.size());
        for (const auto& child : e.children)
          out.buf.push_back(eval(*child).scalar);
        return out;
      }
      case NodeKind::Neg: {
        Value v = eval(*e.children[0]);
        return map1(std::move(v), [](double x) { return -x; });
      }
      case NodeKind::Add: return binary(e, [](double x, double y) { return x + y; });
      case NodeKind::Sub: return binary(e, [](double x, double y) { return x - y; });
      case NodeKind::Mul: return binary(e, [](double x, double y) { return x * y; });
      case NodeKind::Div: return binary(e, [](double x, double y) { return x / y; });
      case NodeKind::Lt: return binary(e, [](double x, double y) { return x < y ? 1.0 : 0.0; });
      case NodeKind::Le: return binary(e, [](double x, double y) { return x <= y ? 1.0 : 0.0; });
      case NodeKind::Gt: return binary(e, [](double x, double y) { return x > y ? 1.0 : 0.0; });
      case NodeKind::Ge: return binary(e, [](double x, double y) { return x >= y ? 1.0 : 0.0; });
      case NodeKind::Eq: return binary(e, [](double x, double y) { return x == y ? 1.0 : 0.0; });
      case NodeKind::Ne: return binary(e, [](double x, double y) { return x != y ? 1.0 : 0.0; });
      case NodeKind::Call: return call(e);
    }
    throw EvalError("unhandled node kind");
  }

 private:
  Value matrix_value(const FeatureMatrix& m) {
    Value out{MslType::FeatMatrix, 0.0, m.values};
    return out;
  }

  std::size_t size_of(MslType t) const {
    switch (t) {
      case MslType::Scalar: return 1;
      case MslType::FeatVector: return static_cast<std::size_t>(num_features_);
      case MslType::TrialVector: return static_cast<std::size_t>(num_trials_);
      case MslType::FeatMatrix:
        return static_cast<std::size_t>(num_trials_) * num_features_;
    }
    return 0;
  }

  template <typename F>
  Value map1(Value v, F f) {
    if (v.type == MslType::Scalar) return Value::make_scalar(f(v.scalar));
    for (double& x : v.buf) x = f(x);
    return v;
  }

  template <typename F>
  Value binary(const Expr& e, F f) {
    Value lhs = eval(*e.children[0]);
    Value rhs = eval(*e.children[1]);
    return zip(std::move(lhs), std::move(rhs), f);
  }

  // Elementwise combination with scalar broadcast. The typechecker has
  // already rejected shape mismatches.
  template <typename F>
  Value zip(Value lhs, Value rhs, F f) {
    if (lhs.type == MslType::Scalar && rhs.type == MslType::Scalar)
      return Value::make_scalar(f(lhs.scalar, rhs.scalar));
    if (lhs.type == MslType::Scalar) {
      double s = lhs.scalar;
      for (double& x : rhs.buf) x = f(s, x);
      return rhs;
    }
    if (rhs.type == MslType::Scalar) {
      double s = rhs.scalar;
      for (double& x : lhs.buf) x = f(x, s);
      return lhs;
    }
    for (std::size_t i = 0; i < lhs.buf.size(); ++i)
      lhs.buf[i] = f(lhs.buf[i], rhs.buf[i]);
    return lhs;
  }

  Value call(const Expr& e) {
    switch (e.builtin) {
      case Builtin::Dot: return dot(e);
      case Builtin::Sum: return sum(e);
      case Builtin::Logistic:
        return map1(eval(*e.children[0]),
                    [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
      case Builtin::Exp:
        return map1(eval(*e.children[0]), [](double x) { return std::exp(x); });
      case Builtin::Log:
        return map1(eval(*e.children[0]), [](double x) { return std::log(x); });
      case Builtin::Abs:
        return map1(eval(*e.children[0]), [](double x) { return std::fabs(x); });
      case Builtin::Min:
        return binary(e, [](double x, double y) { return std::fmin(x, y); });
      case Builtin::Max:
        return binary(e, [](double x, double y) { return std::fmax(x, y); });
      case Builtin::Clip: {
        Value x = eval(*e.children[0]);
        double lo = eval(*e.children[1]).scalar;
        double hi = eval(*e.children[2]).scalar;
        return map1(std::move(x), [lo, hi](double v) {
          return std::fmin(std::fmax(v, lo), hi);
        });
      }
      case Builtin::Where: {
        Value c = eval(*e.children[0]);
        Value x = eval(*e.children[1]);
        Value y = eval(*e.children[2]);
        MslType out_type = MslType::Scalar;
        for (MslType t : {c.type, x.type, y.type})
          if (t != MslType::Scalar) out_type = t;
        if (out_type == MslType::Scalar)
          return Value::make_scalar(c.scalar != 0.0 ? x.scalar : y.scalar);
        auto at = [](const Value& v, std::size_t i) {
          return v.type == MslType::Scalar ? v.scalar : v.buf[i];
        };
        Value out{out_type, 0.0, {}};
        out.buf.resize(size_of(out_type));
        for (std::size_t i = 0; i < out.buf.size(); ++i)
          out.buf[i] = at(c, i) != 0.0 ? at(x, i) : at(y, i);
        return out;
      }
    }
    throw EvalError("unhandled builtin");
  }

  Value dot(const Expr& e) {
    Value lhs = eval(*e.children[0]);
    Value rhs = eval(*e.children[1]);
    if (lhs.type == MslType::FeatVector && rhs.type == MslType::FeatVector) {
      double acc = 0.0;
      for (int f = 0; f < num_features_; ++f) acc += lhs.buf[f] * rhs.buf[f];
      return Value::make_scalar(acc);
    }
    const Value& mat = lhs.type == MslType::FeatMatrix ? lhs : rhs;
    const Value& vec = lhs.type == MslType::FeatMatrix ? rhs : lhs;
    Value out{MslType::TrialVector, 0.0, {}};
    out.buf.resize(num_trials_);
    for (int t = 0; t < num_trials_; ++t) {
      double acc = 0.0;
      const double* row = mat.buf.data() +
                          static_cast<std::size_t>(t) * num_features_;
      for (int f = 0; f < num_features_; ++f) acc += row[f] * vec.buf[f];
      out.buf[t] = acc;
    }
    return out;
  }

  Value sum(const Expr& e) {
    Value v = eval(*e.children[0]);
    if (v.type == MslType::FeatVector) {
      double acc = 0.0;
      for (double x : v.buf) acc += x;
      return Value::make_scalar(acc);
    }
    Value out{MslType::TrialVector, 0.0, {}};
    out.buf.resize(num_trials_);
    for (int t = 0; t < num_trials_; ++t) {
      double acc = 0.0;
      const double* row =
          v.buf.data() + static_cast<std::size_t>(t) * num_features_;
      for (int f = 0; f < num_features_; ++f) acc += row[f];
      out.buf[t] = acc;
    }
    return out;
  }

  const TypedProgram& prog_;
  std::span<const double> params_;
  const FeatureMatrix& a_;
  const FeatureMatrix& b_;
  int num_trials_;
  int num_features_;
};

}  // namespace

EvalOutput evaluate(const TypedProgram& prog, std::span<const double> params,
                    const FeatureMatrix& option_a,
                    const FeatureMatrix& option_b) {
  if (static_cast<int>(params.size()) != prog.num_parameters())
    throw EvalError("expected " + std::to_string(prog.num_parameters()) +
                    " parameters, got " + std::to_string(params.size()));
  if (option_a.num_trials != option_b.num_trials ||
      option_a.num_features != option_b.num_features)
    throw EvalError("option matrices must share num_trials and num_features");
  if (option_a.num_features != prog.num_features)
    throw EvalError("program was typechecked for " +
                    std::to_string(prog.num_features) + " features, got " +
                    std::to_string(option_a.num_features));

  Evaluator evaluator(prog, params, option_a, option_b);
  Value result = evaluator.eval(*prog.program.body);

  EvalOutput out;
  out.probs_b = std::move(result.buf);
  for (double& p : out.probs_b) {
    if (std::isnan(p))
      throw EvalError("model produced NaN probabilities (NonFinite)");
    p = std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
  }
  return out;
}

}  // namespace asmr::msl
