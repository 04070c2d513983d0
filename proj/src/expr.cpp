// Copyright 2026 The jumprev Authors
// SPDX-License-Identifier: Apache-2.0

#include "jumprev/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <algorithm>

#include "jumprev/errors.hpp"

namespace jumprev {

namespace {

using Op = Expr::Node::Op;

struct FunctionInfo {
  std::string_view name;
  Op op;
  int min_args;
  int max_args;
};

constexpr FunctionInfo kFunctions[] = {
    {"exp", Op::Exp, 1, 1},   {"log", Op::Log, 1, 1},     {"sqrt", Op::Sqrt, 1, 1},
    {"abs", Op::Abs, 1, 1},   {"sin", Op::Sin, 1, 1},     {"cos", Op::Cos, 1, 1},
    {"tanh", Op::Tanh, 1, 1}, {"floor", Op::Floor, 1, 1}, {"pow", Op::Pow, 2, 2},
    {"min", Op::Min, 2, 16},  {"max", Op::Max, 2, 16},    {"if", Op::If, 3, 3},
};

}  // namespace

class ExprParser {
 public:
  ExprParser(std::string_view src, const ExprParams& params, Expr& out)
      : src_(src), params_(params), out_(out) {}

  void run() {
    out_.root_ = comparison();
    skip_space();
    if (pos_ != src_.size()) fail("unexpected trailing input");
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::Config, "expression '" + std::string(src_) + "': " + what +
                                       " at offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(std::string_view token) {
    skip_space();
    if (src_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  int add_node(Op op, std::vector<int> args = {}, double value = 0.0, int index = 0) {
    out_.nodes_.push_back(Expr::Node{op, value, index, std::move(args)});
    return static_cast<int>(out_.nodes_.size()) - 1;
  }

  int comparison() {
    int lhs = additive();
    struct Cmp {
      std::string_view tok;
      Op op;
    };
    // Two-character operators first.
    static constexpr Cmp kCmp[] = {{"<=", Op::Le}, {">=", Op::Ge}, {"==", Op::Eq},
                                   {"!=", Op::Ne}, {"<", Op::Lt},  {">", Op::Gt}};
    for (const auto& c : kCmp) {
      if (accept(c.tok)) return add_node(c.op, {lhs, additive()});
    }
    return lhs;
  }

  int additive() {
    int lhs = multiplicative();
    for (;;) {
      if (accept("+")) {
        lhs = add_node(Op::Add, {lhs, multiplicative()});
      } else if (accept("-")) {
        lhs = add_node(Op::Sub, {lhs, multiplicative()});
      } else {
        return lhs;
      }
    }
  }

  int multiplicative() {
    int lhs = unary();
    for (;;) {
      if (accept("*")) {
        lhs = add_node(Op::Mul, {lhs, unary()});
      } else if (accept("/")) {
        lhs = add_node(Op::Div, {lhs, unary()});
      } else {
        return lhs;
      }
    }
  }

  int unary() {
    if (accept("-")) return add_node(Op::Neg, {unary()});
    if (accept("+")) return unary();
    return power();
  }

  int power() {
    int base = primary();
    if (accept("^")) return add_node(Op::Pow, {base, unary()});
    return base;
  }

  int primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      int inner = comparison();
      if (!accept(")")) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  int number() {
    const char* begin = src_.data() + pos_;
    const char* end = src_.data() + src_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return add_node(Op::Const, {}, value);
  }

  int identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = src_.substr(start, pos_ - start);

    if (accept("(")) return call(name);

    if (auto it = params_.find(name); it != params_.end()) {
      return add_node(Op::Const, {}, it->second);
    }
    if (name == "pi") return add_node(Op::Const, {}, std::numbers::pi);
    if (name == "e") return add_node(Op::Const, {}, std::numbers::e);
    if (name == "t") {
      out_.uses_ |= Expr::kTime;
      return add_node(Op::Time);
    }
    if (auto var = coordinate(name)) return *var;
    pos_ = start;
    fail("unknown identifier '" + std::string(name) + "'");
  }

  std::optional<int> coordinate(std::string_view name) {
    struct Prefix {
      std::string_view text;
      Op op;
      std::uint8_t use;
    };
    // "xi" must be tried before "x".
    static constexpr Prefix kPrefixes[] = {{"xi", Op::Xi, Expr::kJump},
                                           {"x", Op::X, Expr::kState},
                                           {"y", Op::Y, Expr::kTarget}};
    for (const auto& p : kPrefixes) {
      if (!name.starts_with(p.text)) continue;
      std::string_view rest = name.substr(p.text.size());
      int index = 0;
      if (!rest.empty()) {
        if (rest.size() > 1 || !std::isdigit(static_cast<unsigned char>(rest[0]))) continue;
        index = rest[0] - '0';
      }
      out_.uses_ |= p.use;
      out_.max_coordinate_ = std::max(out_.max_coordinate_, index);
      return add_node(p.op, {}, 0.0, index);
    }
    return std::nullopt;
  }

  int call(std::string_view name) {
    const FunctionInfo* info = nullptr;
    for (const auto& f : kFunctions) {
      if (f.name == name) info = &f;
    }
    if (info == nullptr) fail("unknown function '" + std::string(name) + "'");
    std::vector<int> args;
    if (!accept(")")) {
      do {
        args.push_back(comparison());
      } while (accept(","));
      if (!accept(")")) fail("expected ')' after arguments");
    }
    const int n = static_cast<int>(args.size());
    if (n < info->min_args || n > info->max_args) {
      fail("wrong number of arguments to " + std::string(name));
    }
    return add_node(info->op, std::move(args));
  }

  std::string_view src_;
  const ExprParams& params_;
  Expr& out_;
  std::size_t pos_ = 0;
};

Expr Expr::parse(std::string_view source, const ExprParams& params) {
  Expr e;
  e.source_ = std::string(source);
  ExprParser parser(source, params, e);
  parser.run();
  return e;
}

Expr Expr::constant(double value) {
  Expr e;
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  e.source_.assign(buf, ptr);
  e.nodes_.push_back(Node{Node::Op::Const, value, 0, {}});
  e.root_ = 0;
  return e;
}

double Expr::operator()(const ExprArgs& args) const {
  if (root_ < 0) return 0.0;
  return eval(root_, args);
}

namespace {

double coordinate_of(std::span<const double> v, int index, const char* what) {
  if (index >= static_cast<int>(v.size())) {
    throw Error(ErrorKind::InvalidArgument,
                std::string("expression references ") + what + std::to_string(index) +
                    " but only " + std::to_string(v.size()) + " coordinates are bound");
  }
  return v[static_cast<std::size_t>(index)];
}

}  // namespace

double Expr::eval(int node, const ExprArgs& a) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  auto arg = [&](std::size_t i) { return eval(n.args[i], a); };
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Time: return a.t;
    case Op::X: return coordinate_of(a.x, n.index, "x");
    case Op::Y: return coordinate_of(a.y, n.index, "y");
    case Op::Xi:
      if (!a.xi.empty()) return coordinate_of(a.xi, n.index, "xi");
      return coordinate_of(a.y, n.index, "y") - coordinate_of(a.x, n.index, "x");
    case Op::Neg: return -arg(0);
    case Op::Add: return arg(0) + arg(1);
    case Op::Sub: return arg(0) - arg(1);
    case Op::Mul: return arg(0) * arg(1);
    case Op::Div: return arg(0) / arg(1);
    case Op::Pow: return std::pow(arg(0), arg(1));
    case Op::Lt: return arg(0) < arg(1) ? 1.0 : 0.0;
    case Op::Le: return arg(0) <= arg(1) ? 1.0 : 0.0;
    case Op::Gt: return arg(0) > arg(1) ? 1.0 : 0.0;
    case Op::Ge: return arg(0) >= arg(1) ? 1.0 : 0.0;
    case Op::Eq: return arg(0) == arg(1) ? 1.0 : 0.0;
    case Op::Ne: return arg(0) != arg(1) ? 1.0 : 0.0;
    case Op::Exp: return std::exp(arg(0));
    case Op::Log: return std::log(arg(0));
    case Op::Sqrt: return std::sqrt(arg(0));
    case Op::Abs: return std::abs(arg(0));
    case Op::Sin: return std::sin(arg(0));
    case Op::Cos: return std::cos(arg(0));
    case Op::Tanh: return std::tanh(arg(0));
    case Op::Floor: return std::floor(arg(0));
    case Op::Min: {
      double m = arg(0);
      for (std::size_t i = 1; i < n.args.size(); ++i) m = std::min(m, arg(i));
      return m;
    }
    case Op::Max: {
      double m = arg(0);
      for (std::size_t i = 1; i < n.args.size(); ++i) m = std::max(m, arg(i));
      return m;
    }
    case Op::If: return arg(0) != 0.0 ? arg(1) : arg(2);
  }
  return 0.0;
}

}  // namespace jumprev
