#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nullot::cli {

// Arithmetic expressions: numbers, named variables, + − * / ^ (right
// associative), unary minus, parentheses, the constants pi and e, and
// sin cos tan exp log sqrt tanh sinh cosh abs.
class Expression {
 public:
  struct Node;

  Expression() = default;

  // Variables are resolved against `variables` once; eval takes their
  // values in the same order. Throws nullot::Error(ParseError) with the
  // 1-based column of the offending token.
  static Expression parse(const std::string& text, const std::vector<std::string>& variables);
  static Expression constant(double c);

  double eval(std::span<const double> values) const;
  // Symbolic partial derivative in variable `index`.
  Expression derivative(int index) const;

  // False once abs appears (the weight is then only C0).
  bool smooth() const;
  bool uses(int index) const;
  const std::string& text() const { return text_; }
  bool empty() const { return !root_; }

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace nullot::cli
