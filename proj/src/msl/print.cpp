#include "asmr/msl/print.hpp"

#include <sstream>

#include "asmr/text.hpp"

namespace asmr::msl {

namespace {

int precedence(const Expr& e) {
  switch (e.kind) {
    case NodeKind::Lt:
    case NodeKind::Le:
    case NodeKind::Gt:
    case NodeKind::Ge:
    case NodeKind::Eq:
    case NodeKind::Ne:
      return 1;
    case NodeKind::Add:
    case NodeKind::Sub:
      return 2;
    case NodeKind::Mul:
    case NodeKind::Div:
      return 3;
    case NodeKind::Neg:
      return 4;
    default:
      return 5;
  }
}

const char* op_text(NodeKind k) {
  switch (k) {
    case NodeKind::Add: return " + ";
    case NodeKind::Sub: return " - ";
    case NodeKind::Mul: return " * ";
    case NodeKind::Div: return " / ";
    case NodeKind::Lt: return " < ";
    case NodeKind::Le: return " <= ";
    case NodeKind::Gt: return " > ";
    case NodeKind::Ge: return " >= ";
    case NodeKind::Eq: return " == ";
    case NodeKind::Ne: return " != ";
    default: return "?";
  }
}

void print_expr(std::ostream& out, const Expr& e);

// The grammar is left-associative, so a right operand at the parent's
// precedence level needs parentheses to survive a reparse; comparisons do
// not chain, so comparison children of comparisons are parenthesized too.
void print_child(std::ostream& out, const Expr& child, int parent_prec,
                 bool is_right) {
  bool parens = precedence(child) < parent_prec ||
                (precedence(child) == parent_prec &&
                 (is_right || parent_prec == 1));
  if (parens) out << '(';
  print_expr(out, child);
  if (parens) out << ')';
}

void print_expr(std::ostream& out, const Expr& e) {
  switch (e.kind) {
    case NodeKind::Number:
      out << fmt_double(e.number);
      return;
    case NodeKind::Param:
      out << "p[" << e.param_index << "]";
      return;
    case NodeKind::InputA:
      out << 'A';
      return;
    case NodeKind::InputB:
      out << 'B';
      return;
    case NodeKind::VectorLit: {
      out << '[';
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i > 0) out << ", ";
        print_expr(out, *e.children[i]);
      }
      out << ']';
      return;
    }
    case NodeKind::Neg:
      out << '-';
      print_child(out, *e.children[0], precedence(e), false);
      return;
    case NodeKind::Call: {
      out << builtin_name(e.builtin) << '(';
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i > 0) out << ", ";
        print_expr(out, *e.children[i]);
      }
      out << ')';
      return;
    }
    default: {
      print_child(out, *e.children[0], precedence(e), false);
      out << op_text(e.kind);
      print_child(out, *e.children[1], precedence(e), true);
      return;
    }
  }
}

}  // namespace

std::string print(const ModelProgram& program) {
  std::ostringstream out;
  out << "params " << program.num_parameters << ";\n";
  out << "model = ";
  print_expr(out, *program.body);
  out << ";\n";
  return out.str();
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::Number:
      // Bit-level comparison keeps -0.0 and 0.0 distinct; literals are
      // nonnegative by construction so this is plain equality in practice.
      if (!(a.number == b.number)) return false;
      break;
    case NodeKind::Param:
      if (a.param_index != b.param_index) return false;
      break;
    case NodeKind::Call:
      if (a.builtin != b.builtin) return false;
      break;
    default:
      break;
  }
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!structurally_equal(*a.children[i], *b.children[i])) return false;
  return true;
}

}  // namespace asmr::msl
