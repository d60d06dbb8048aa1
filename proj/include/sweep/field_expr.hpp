#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sweep {

// Value and first-order partials of a scalar field at (t, x1..xn), produced
// by forward-mode dual-number propagation. `nonsmooth` is set when abs/min/
// max was evaluated exactly at a tie; the reported derivative is then the
// one-sided derivative taken from the first argument.
struct FieldJet {
  double value = 0.0;
  double dt = 0.0;
  std::vector<double> dx;
  bool nonsmooth = false;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& message, std::string subexpr);
  const std::string& subexpr() const noexcept { return subexpr_; }

 private:
  std::string subexpr_;
};

// Immutable parsed formula over {t, x1..xdim}, constants, + - * / ^, unary
// minus and sin, cos, exp, log, sqrt, abs, min, max. Exponents must be
// constant expressions. Thread-safe to evaluate concurrently.
class FieldExpr {
 public:
  FieldExpr() = default;

  int dim() const noexcept { return dim_; }
  const std::string& source() const noexcept { return source_; }

  bool uses_time() const noexcept;
  bool uses_coords() const noexcept;

  FieldJet jet(double t, std::span<const double> x) const;
  double value(double t, std::span<const double> x) const;

  // Canonical fully-parenthesized form; parsing it back yields a
  // structurally identical ast.
  std::string print() const;
  bool same_ast(const FieldExpr& other) const;

  struct Node;
  struct Tape;

 private:
  friend FieldExpr parse_field(std::string_view, int);
  std::shared_ptr<const Node> root_;
  std::shared_ptr<const Tape> tape_;  // post-order instruction list
  std::string source_;
  int dim_ = 0;
};

FieldExpr parse_field(std::string_view source, int dim);
FieldJet eval_jet(const FieldExpr& expr, double t, std::span<const double> x);

}  // namespace sweep
