#include "dsl.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>

#include "nullot/core.hpp"

namespace nullot::cli {

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Tan, Exp, Log, Sqrt, Tanh, Sinh, Cosh, Abs, Sign };

struct Expression::Node {
  Op op = Op::Const;
  double value = 0.0;
  int var = -1;
  std::shared_ptr<const Node> a, b;
};

namespace {

using P = std::shared_ptr<const Expression::Node>;

P leaf(double c) {
  auto n = std::make_shared<Expression::Node>();
  n->value = c;
  return n;
}

bool is_const(const P& p, double c) { return p->op == Op::Const && p->value == c; }

double eval(const Expression::Node& n, std::span<const double> v);

P make(Op op, P a, P b = nullptr) {
  // light folding keeps derivatives from ballooning
  if (a->op == Op::Const && (!b || b->op == Op::Const)) {
    Expression::Node tmp;
    tmp.op = op;
    tmp.a = a;
    tmp.b = b;
    return leaf(eval(tmp, {}));
  }
  switch (op) {
    case Op::Add:
      if (is_const(a, 0)) return b;
      if (is_const(b, 0)) return a;
      break;
    case Op::Sub:
      if (is_const(b, 0)) return a;
      if (is_const(a, 0)) return make(Op::Neg, b);
      break;
    case Op::Mul:
      if (is_const(a, 0) || is_const(b, 0)) return leaf(0.0);
      if (is_const(a, 1)) return b;
      if (is_const(b, 1)) return a;
      break;
    case Op::Div:
      if (is_const(a, 0)) return leaf(0.0);
      if (is_const(b, 1)) return a;
      break;
    case Op::Neg:
      if (a->op == Op::Const) return leaf(-a->value);
      break;
    default:
      break;
  }
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

double eval(const Expression::Node& n, std::span<const double> v) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return v[n.var];
    case Op::Add: return eval(*n.a, v) + eval(*n.b, v);
    case Op::Sub: return eval(*n.a, v) - eval(*n.b, v);
    case Op::Mul: return eval(*n.a, v) * eval(*n.b, v);
    case Op::Div: return eval(*n.a, v) / eval(*n.b, v);
    case Op::Pow: {
      const double e = eval(*n.b, v);
      if (e == 2.0) {
        const double x = eval(*n.a, v);
        return x * x;
      }
      return std::pow(eval(*n.a, v), e);
    }
    case Op::Neg: return -eval(*n.a, v);
    case Op::Sin: return std::sin(eval(*n.a, v));
    case Op::Cos: return std::cos(eval(*n.a, v));
    case Op::Tan: return std::tan(eval(*n.a, v));
    case Op::Exp: return std::exp(eval(*n.a, v));
    case Op::Log: return std::log(eval(*n.a, v));
    case Op::Sqrt: return std::sqrt(eval(*n.a, v));
    case Op::Tanh: return std::tanh(eval(*n.a, v));
    case Op::Sinh: return std::sinh(eval(*n.a, v));
    case Op::Cosh: return std::cosh(eval(*n.a, v));
    case Op::Abs: return std::abs(eval(*n.a, v));
    case Op::Sign: {
      const double x = eval(*n.a, v);
      return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
    }
  }
  return 0.0;
}

bool depends(const P& p, int k) {
  if (!p) return false;
  if (p->op == Op::Var) return p->var == k;
  return depends(p->a, k) || depends(p->b, k);
}

P diff(const P& p, int k) {
  if (!depends(p, k)) return leaf(0.0);
  const P& a = p->a;
  const P& b = p->b;
  switch (p->op) {
    case Op::Const: return leaf(0.0);
    case Op::Var: return leaf(1.0);
    case Op::Add: return make(Op::Add, diff(a, k), diff(b, k));
    case Op::Sub: return make(Op::Sub, diff(a, k), diff(b, k));
    case Op::Mul: return make(Op::Add, make(Op::Mul, diff(a, k), b), make(Op::Mul, a, diff(b, k)));
    case Op::Div:
      return make(Op::Div, make(Op::Sub, make(Op::Mul, diff(a, k), b), make(Op::Mul, a, diff(b, k))),
                  make(Op::Mul, b, b));
    case Op::Pow:
      if (!depends(b, k)) {
        // b a^(b−1) a′
        return make(Op::Mul, make(Op::Mul, b, make(Op::Pow, a, make(Op::Sub, b, leaf(1.0)))), diff(a, k));
      }
      // a^b (b′ log a + b a′/a)
      return make(Op::Mul, p,
                  make(Op::Add, make(Op::Mul, diff(b, k), make(Op::Log, a)),
                       make(Op::Div, make(Op::Mul, b, diff(a, k)), a)));
    case Op::Neg: return make(Op::Neg, diff(a, k));
    case Op::Sin: return make(Op::Mul, make(Op::Cos, a), diff(a, k));
    case Op::Cos: return make(Op::Neg, make(Op::Mul, make(Op::Sin, a), diff(a, k)));
    case Op::Tan: return make(Op::Div, diff(a, k), make(Op::Mul, make(Op::Cos, a), make(Op::Cos, a)));
    case Op::Exp: return make(Op::Mul, p, diff(a, k));
    case Op::Log: return make(Op::Div, diff(a, k), a);
    case Op::Sqrt: return make(Op::Div, diff(a, k), make(Op::Mul, leaf(2.0), p));
    case Op::Tanh: return make(Op::Mul, make(Op::Sub, leaf(1.0), make(Op::Mul, p, p)), diff(a, k));
    case Op::Sinh: return make(Op::Mul, make(Op::Cosh, a), diff(a, k));
    case Op::Cosh: return make(Op::Mul, make(Op::Sinh, a), diff(a, k));
    case Op::Abs: return make(Op::Mul, make(Op::Sign, a), diff(a, k));
    case Op::Sign: return leaf(0.0);
  }
  return leaf(0.0);
}

bool has_abs(const P& p) {
  if (!p) return false;
  if (p->op == Op::Abs || p->op == Op::Sign) return true;
  return has_abs(p->a) || has_abs(p->b);
}

const std::map<std::string, Op>& functions() {
  static const std::map<std::string, Op> f{{"sin", Op::Sin},   {"cos", Op::Cos},   {"tan", Op::Tan},
                                           {"exp", Op::Exp},   {"log", Op::Log},   {"sqrt", Op::Sqrt},
                                           {"tanh", Op::Tanh}, {"sinh", Op::Sinh}, {"cosh", Op::Cosh},
                                           {"abs", Op::Abs}};
  return f;
}

class Parser {
 public:
  Parser(const std::string& s, const std::vector<std::string>& vars) : s_(s), vars_(vars) {}

  P run() {
    P e = sum();
    skip();
    if (i_ < s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::ParseError, "column " + std::to_string(i_ + 1) + ": " + msg + " in \"" + s_ + "\"");
  }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }

  P sum() {
    P e = product();
    for (;;) {
      if (eat('+')) e = make(Op::Add, e, product());
      else if (eat('-')) e = make(Op::Sub, e, product());
      else return e;
    }
  }
  P product() {
    P e = unary();
    for (;;) {
      if (eat('*')) e = make(Op::Mul, e, unary());
      else if (eat('/')) e = make(Op::Div, e, unary());
      else return e;
    }
  }
  P unary() {
    if (eat('-')) return make(Op::Neg, unary());
    if (eat('+')) return unary();
    return power();
  }
  P power() {
    P base = primary();
    if (eat('^')) return make(Op::Pow, base, unary());  // −2^2 = −4, 2^3^2 = 512
    return base;
  }
  P primary() {
    skip();
    if (i_ >= s_.size()) fail("unexpected end");
    const char c = s_[i_];
    if (eat('(')) {
      P e = sum();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + i_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      i_ += static_cast<std::size_t>(end - begin);
      return leaf(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = i_;
      while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
      const std::string name = s_.substr(start, i_ - start);
      if (auto f = functions().find(name); f != functions().end()) {
        if (!eat('(')) fail("expected '(' after " + name);
        P arg = sum();
        if (!eat(')')) fail("expected ')'");
        return make(f->second, arg);
      }
      for (std::size_t k = 0; k < vars_.size(); ++k) {
        if (vars_[k] == name) {
          auto n = std::make_shared<Expression::Node>();
          n->op = Op::Var;
          n->var = static_cast<int>(k);
          return n;
        }
      }
      if (name == "pi") return leaf(3.14159265358979323846);
      if (name == "e") return leaf(2.71828182845904523536);
      i_ = start;
      std::string allowed;
      for (const auto& v : vars_) allowed += (allowed.empty() ? "" : ", ") + v;
      fail("unknown name '" + name + "' (variables: " + allowed + ")");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  std::size_t i_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables) {
  Expression e;
  e.root_ = Parser(text, variables).run();
  e.text_ = text;
  return e;
}

Expression Expression::constant(double c) {
  Expression e;
  e.root_ = leaf(c);
  e.text_ = std::to_string(c);
  return e;
}

double Expression::eval(std::span<const double> values) const { return root_ ? cli::eval(*root_, values) : 0.0; }

Expression Expression::derivative(int index) const {
  Expression e;
  e.root_ = root_ ? diff(root_, index) : leaf(0.0);
  e.text_ = "d(" + text_ + ")";
  return e;
}

bool Expression::smooth() const { return !has_abs(root_); }

bool Expression::uses(int index) const { return depends(root_, index); }

}  // namespace nullot::cli
