#include "asmr/msl/parse.hpp"

#include <cctype>
#include <charconv>
#include <sstream>
#include <string>

#include "asmr/errors.hpp"

namespace asmr::msl {

namespace {

enum class Tok {
  End,
  Ident,
  Number,
  Semicolon,
  Assign,    // =
  LBracket,
  RBracket,
  LParen,
  RParen,
  Comma,
  Plus,
  Minus,
  Star,
  Slash,
  Lt,
  Le,
  Gt,
  Ge,
  EqEq,
  Ne,
};

const char* tok_name(Tok t) {
  switch (t) {
    case Tok::End: return "end of input";
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::Semicolon: return "';'";
    case Tok::Assign: return "'='";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Lt: return "'<'";
    case Tok::Le: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::EqEq: return "'=='";
    case Tok::Ne: return "'!='";
  }
  return "?";
}

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  SourcePos pos;
  std::size_t end_offset = 0;  // offset just past this token
};

class Lexer {
 public:
  Lexer(std::string_view text, std::size_t offset) : text_(text) {
    // Establish line/column for the starting offset.
    for (std::size_t i = 0; i < offset && i < text_.size(); ++i) advance();
    next();
  }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    next();
    return t;
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at line " + std::to_string(line_) + ", column " +
                         std::to_string(column_),
                     line_, column_);
  }

  void next() {
    skip_space_and_comments();
    current_ = Token{};
    current_.pos = {line_, column_};
    if (pos_ >= text_.size()) {
      current_.kind = Tok::End;
      current_.end_offset = pos_;
      return;
    }
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_'))
        advance();
      current_.kind = Tok::Ident;
      current_.text = std::string(text_.substr(start, pos_ - start));
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_])))
        advance();
      if (pos_ < text_.size() && text_[pos_] == '.') {
        advance();
        if (pos_ >= text_.size() ||
            !std::isdigit(static_cast<unsigned char>(text_[pos_])))
          fail("expected digits after decimal point");
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_])))
          advance();
      }
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        advance();
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-'))
          advance();
        if (pos_ >= text_.size() ||
            !std::isdigit(static_cast<unsigned char>(text_[pos_])))
          fail("expected digits in exponent");
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_])))
          advance();
      }
      std::string_view digits = text_.substr(start, pos_ - start);
      double value = 0.0;
      auto [ptr, ec] =
          std::from_chars(digits.data(), digits.data() + digits.size(), value);
      if (ec != std::errc() || ptr != digits.data() + digits.size())
        fail("number literal out of range");
      current_.kind = Tok::Number;
      current_.number = value;
      current_.text = std::string(digits);
    } else {
      switch (c) {
        case ';': current_.kind = Tok::Semicolon; advance(); break;
        case '[': current_.kind = Tok::LBracket; advance(); break;
        case ']': current_.kind = Tok::RBracket; advance(); break;
        case '(': current_.kind = Tok::LParen; advance(); break;
        case ')': current_.kind = Tok::RParen; advance(); break;
        case ',': current_.kind = Tok::Comma; advance(); break;
        case '+': current_.kind = Tok::Plus; advance(); break;
        case '-': current_.kind = Tok::Minus; advance(); break;
        case '*': current_.kind = Tok::Star; advance(); break;
        case '/': current_.kind = Tok::Slash; advance(); break;
        case '=':
          advance();
          if (pos_ < text_.size() && text_[pos_] == '=') {
            advance();
            current_.kind = Tok::EqEq;
          } else {
            current_.kind = Tok::Assign;
          }
          break;
        case '<':
          advance();
          if (pos_ < text_.size() && text_[pos_] == '=') {
            advance();
            current_.kind = Tok::Le;
          } else {
            current_.kind = Tok::Lt;
          }
          break;
        case '>':
          advance();
          if (pos_ < text_.size() && text_[pos_] == '=') {
            advance();
            current_.kind = Tok::Ge;
          } else {
            current_.kind = Tok::Gt;
          }
          break;
        case '!':
          advance();
          if (pos_ < text_.size() && text_[pos_] == '=') {
            advance();
            current_.kind = Tok::Ne;
          } else {
            fail("expected '=' after '!'");
          }
          break;
        default:
          fail(std::string("unexpected character '") + c + "'");
      }
    }
    current_.end_offset = pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
  Token current_;
};

struct ParsedProgram {
  int num_parameters = 0;
  Expr::Ptr body;
};

class Parser {
 public:
  explicit Parser(Lexer& lex) : lex_(lex) {}

  // header and model statement; leaves the lexer just past the closing ';'.
  ParsedProgram parse_program() {
    expect_ident("params");
    if (lex_.peek().kind == Tok::Minus)
      throw HeaderError("parameter count must be nonnegative");
    if (lex_.peek().kind != Tok::Number)
      throw HeaderError("expected a parameter count after 'params'");
    Token count = lex_.take();
    double k = count.number;
    if (k != static_cast<double>(static_cast<int>(k)) ||
        count.text.find('.') != std::string::npos ||
        count.text.find('e') != std::string::npos ||
        count.text.find('E') != std::string::npos)
      throw HeaderError("parameter count must be a nonnegative integer, got " +
                        count.text);
    expect(Tok::Semicolon, "';' after parameter count");

    expect_ident("model");
    expect(Tok::Assign, "'=' after 'model'");
    ParsedProgram prog;
    prog.num_parameters = static_cast<int>(k);
    prog.body = parse_expr();
    Token semi = expect(Tok::Semicolon, "';' after model expression");
    end_offset_ = semi.end_offset;
    return prog;
  }

  std::size_t end_offset() const { return end_offset_; }

 private:
  [[noreturn]] void fail(const Token& at, const std::string& msg) {
    throw ParseError(msg + " at line " + std::to_string(at.pos.line) +
                         ", column " + std::to_string(at.pos.column) +
                         " (found " + tok_name(at.kind) + ")",
                     at.pos.line, at.pos.column);
  }

  Token expect(Tok kind, const std::string& what) {
    if (lex_.peek().kind != kind) fail(lex_.peek(), "expected " + what);
    return lex_.take();
  }

  Token expect_ident(const std::string& word) {
    const Token& t = lex_.peek();
    if (t.kind != Tok::Ident || t.text != word) {
      if (word == "params")
        throw HeaderError(
            "program must start with a 'params <count>;' header");
      fail(t, "expected '" + word + "'");
    }
    return lex_.take();
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : parser(p) {
      if (++parser.depth_ > kParserRecursionLimit)
        throw ParseError("expression nesting too deep", 0, 0);
    }
    ~DepthGuard() { --parser.depth_; }
    Parser& parser;
  };

  Expr::Ptr make(NodeKind kind, SourcePos pos) {
    auto e = std::make_unique<Expr>();
    e->kind = kind;
    e->pos = pos;
    return e;
  }

  Expr::Ptr parse_expr() {
    DepthGuard guard(*this);
    Expr::Ptr lhs = parse_additive();
    Tok t = lex_.peek().kind;
    NodeKind kind;
    switch (t) {
      case Tok::Lt: kind = NodeKind::Lt; break;
      case Tok::Le: kind = NodeKind::Le; break;
      case Tok::Gt: kind = NodeKind::Gt; break;
      case Tok::Ge: kind = NodeKind::Ge; break;
      case Tok::EqEq: kind = NodeKind::Eq; break;
      case Tok::Ne: kind = NodeKind::Ne; break;
      default: return lhs;
    }
    Token op = lex_.take();
    Expr::Ptr rhs = parse_additive();
    Expr::Ptr node = make(kind, op.pos);
    node->children.push_back(std::move(lhs));
    node->children.push_back(std::move(rhs));
    return node;
  }

  Expr::Ptr parse_additive() {
    DepthGuard guard(*this);
    Expr::Ptr lhs = parse_term();
    while (lex_.peek().kind == Tok::Plus || lex_.peek().kind == Tok::Minus) {
      Token op = lex_.take();
      Expr::Ptr rhs = parse_term();
      Expr::Ptr node =
          make(op.kind == Tok::Plus ? NodeKind::Add : NodeKind::Sub, op.pos);
      node->children.push_back(std::move(lhs));
      node->children.push_back(std::move(rhs));
      lhs = std::move(node);
    }
    return lhs;
  }

  Expr::Ptr parse_term() {
    DepthGuard guard(*this);
    Expr::Ptr lhs = parse_unary();
    while (lex_.peek().kind == Tok::Star || lex_.peek().kind == Tok::Slash) {
      Token op = lex_.take();
      Expr::Ptr rhs = parse_unary();
      Expr::Ptr node =
          make(op.kind == Tok::Star ? NodeKind::Mul : NodeKind::Div, op.pos);
      node->children.push_back(std::move(lhs));
      node->children.push_back(std::move(rhs));
      lhs = std::move(node);
    }
    return lhs;
  }

  Expr::Ptr parse_unary() {
    DepthGuard guard(*this);
    if (lex_.peek().kind == Tok::Minus) {
      Token op = lex_.take();
      Expr::Ptr node = make(NodeKind::Neg, op.pos);
      node->children.push_back(parse_unary());
      return node;
    }
    if (lex_.peek().kind == Tok::Plus) {
      lex_.take();  // unary plus is the identity
      return parse_unary();
    }
    return parse_primary();
  }

  Expr::Ptr parse_primary() {
    DepthGuard guard(*this);
    const Token& t = lex_.peek();
    switch (t.kind) {
      case Tok::Number: {
        Token num = lex_.take();
        Expr::Ptr node = make(NodeKind::Number, num.pos);
        node->number = num.number;
        return node;
      }
      case Tok::LParen: {
        lex_.take();
        Expr::Ptr inner = parse_expr();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::LBracket: {
        Token open = lex_.take();
        Expr::Ptr node = make(NodeKind::VectorLit, open.pos);
        node->children.push_back(parse_expr());
        while (lex_.peek().kind == Tok::Comma) {
          lex_.take();
          node->children.push_back(parse_expr());
        }
        expect(Tok::RBracket, "']' or ','");
        return node;
      }
      case Tok::Ident:
        return parse_ident();
      default:
        fail(t, "expected an expression");
    }
  }

  Expr::Ptr parse_ident() {
    Token id = lex_.take();
    if (id.text == "A") return make(NodeKind::InputA, id.pos);
    if (id.text == "B") return make(NodeKind::InputB, id.pos);
    if (id.text == "p") {
      expect(Tok::LBracket, "'[' after 'p'");
      Token index = expect(Tok::Number, "parameter index");
      if (index.number != static_cast<int>(index.number) ||
          index.text.find('.') != std::string::npos)
        fail(index, "parameter index must be an integer");
      expect(Tok::RBracket, "']' after parameter index");
      Expr::Ptr node = make(NodeKind::Param, id.pos);
      node->param_index = static_cast<int>(index.number);
      return node;
    }
    static const struct { const char* name; Builtin fn; int arity; } kBuiltins[] = {
        {"dot", Builtin::Dot, 2},       {"sum", Builtin::Sum, 1},
        {"logistic", Builtin::Logistic, 1}, {"exp", Builtin::Exp, 1},
        {"log", Builtin::Log, 1},       {"abs", Builtin::Abs, 1},
        {"min", Builtin::Min, 2},       {"max", Builtin::Max, 2},
        {"clip", Builtin::Clip, 3},     {"where", Builtin::Where, 3},
    };
    for (const auto& b : kBuiltins) {
      if (id.text != b.name) continue;
      expect(Tok::LParen, "'(' after function name");
      Expr::Ptr node = make(NodeKind::Call, id.pos);
      node->builtin = b.fn;
      node->children.push_back(parse_expr());
      while (lex_.peek().kind == Tok::Comma) {
        lex_.take();
        node->children.push_back(parse_expr());
      }
      expect(Tok::RParen, "')'");
      if (static_cast<int>(node->children.size()) != b.arity)
        fail(id, std::string("'") + b.name + "' takes " +
                     std::to_string(b.arity) + " arguments, got " +
                     std::to_string(node->children.size()));
      return node;
    }
    fail(id, "unknown identifier '" + id.text + "'");
  }

  static constexpr int kParserRecursionLimit = 640;

  Lexer& lex_;
  int depth_ = 0;
  std::size_t end_offset_ = 0;
};

int assign_ids(Expr& e, int next) {
  e.node_id = next++;
  for (auto& child : e.children) next = assign_ids(*child, next);
  return next;
}

int ast_depth(const Expr& e) {
  int deepest = 0;
  for (const auto& child : e.children)
    deepest = std::max(deepest, ast_depth(*child));
  return deepest + 1;
}

void check_param_refs(const Expr& e, int num_parameters) {
  if (e.kind == NodeKind::Param &&
      (e.param_index < 0 || e.param_index >= num_parameters))
    throw ValidationError(
        "parameter reference p[" + std::to_string(e.param_index) +
        "] is out of range for params " + std::to_string(num_parameters) +
        " (line " + std::to_string(e.pos.line) + ")");
  for (const auto& child : e.children) check_param_refs(*child, num_parameters);
}

ModelProgram finish(ParsedProgram parsed, std::string_view source) {
  if (parsed.num_parameters < 0)
    throw HeaderError("parameter count must be nonnegative");
  if (ast_depth(*parsed.body) > kMaxAstDepth)
    throw ParseError("model expression exceeds maximum depth of " +
                         std::to_string(kMaxAstDepth),
                     parsed.body->pos.line, parsed.body->pos.column);
  check_param_refs(*parsed.body, parsed.num_parameters);

  ModelProgram prog;
  prog.num_parameters = parsed.num_parameters;
  prog.node_count = assign_ids(*parsed.body, 0);
  prog.body = std::shared_ptr<const Expr>(parsed.body.release());
  prog.source = std::string(source);
  return prog;
}

}  // namespace

ModelProgram parse(std::string_view source) {
  if (source.size() > kMaxProgramSize)
    throw ParseError("program exceeds maximum size of " +
                         std::to_string(kMaxProgramSize) + " characters",
                     1, 1);
  Lexer lex(source, 0);
  Parser parser(lex);
  ParsedProgram prog = parser.parse_program();
  const Token& rest = lex.peek();
  if (rest.kind != Tok::End)
    throw ParseError("unexpected content after model statement at line " +
                         std::to_string(rest.pos.line) + ", column " +
                         std::to_string(rest.pos.column),
                     rest.pos.line, rest.pos.column);
  return finish(std::move(prog), source);
}

ModelProgram parse_prefix(std::string_view text, std::size_t offset,
                          std::size_t& consumed) {
  if (text.size() > 20 * kMaxProgramSize)
    text = text.substr(0, 20 * kMaxProgramSize);
  Lexer lex(text, offset);
  Parser parser(lex);
  ParsedProgram prog = parser.parse_program();
  consumed = parser.end_offset() - offset;
  if (consumed > kMaxProgramSize)
    throw ParseError("program exceeds maximum size of " +
                         std::to_string(kMaxProgramSize) + " characters",
                     1, 1);
  return finish(std::move(prog), text.substr(offset, consumed));
}

}  // namespace asmr::msl
