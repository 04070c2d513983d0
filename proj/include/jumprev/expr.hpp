// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jumprev {

/// Values bound to the free variables of an expression.  `x` is the current
/// state, `y` the landing point of a jump and `xi = y - x` the jump itself.
struct ExprArgs {
  double t = 0.0;
  std::span<const double> x{};
  std::span<const double> y{};
  std::span<const double> xi{};
};

using ExprParams = std::map<std::string, double, std::less<>>;

/// A compiled closed-form expression.
///
/// Grammar: numbers, `+ - * / ^`, comparisons (yielding 0 or 1), parentheses,
/// the variables `t`, `x`, `y`, `xi` (first coordinate) and `x0..x9`,
/// `y0..y9`, `xi0..xi9`, named parameters, the constants `pi` and `e`, and
/// the functions exp, log, sqrt, abs, sin, cos, tanh, floor, pow, min, max
/// and if(cond, a, b).
class Expr {
 public:
  enum Uses : std::uint8_t {
    kTime = 1,
    kState = 2,
    kTarget = 4,
    kJump = 8,
  };

  Expr() = default;

  /// Throws Error(Config) on a syntax error or an unknown identifier.
  static Expr parse(std::string_view source, const ExprParams& params = {});
  static Expr constant(double value);

  double operator()(const ExprArgs& args) const;
  double operator()(double t, std::span<const double> x) const {
    return (*this)(ExprArgs{t, x, {}, {}});
  }

  const std::string& source() const { return source_; }
  bool empty() const { return nodes_.empty(); }

  bool uses_time() const { return (uses_ & kTime) != 0; }
  bool uses_state() const { return (uses_ & kState) != 0; }
  bool uses_target() const { return (uses_ & kTarget) != 0; }
  bool uses_jump() const { return (uses_ & kJump) != 0; }
  bool is_constant() const { return uses_ == 0; }

  /// Highest coordinate index referenced (-1 if no coordinate is used).
  int max_coordinate() const { return max_coordinate_; }

  struct Node {
    enum class Op : std::uint8_t {
      Const, Time, X, Y, Xi,
      Neg, Add, Sub, Mul, Div, Pow,
      Lt, Le, Gt, Ge, Eq, Ne,
      Exp, Log, Sqrt, Abs, Sin, Cos, Tanh, Floor,
      Min, Max, If,
    };
    Op op = Op::Const;
    double value = 0.0;
    int index = 0;
    std::vector<int> args;
  };

 private:
  friend class ExprParser;

  double eval(int node, const ExprArgs& args) const;

  std::string source_;
  std::vector<Node> nodes_;
  int root_ = -1;
  std::uint8_t uses_ = 0;
  int max_coordinate_ = -1;
};

}  // namespace jumprev
