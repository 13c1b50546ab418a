#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "epiwave/error.hpp"

namespace epiwave {

// Arithmetic expressions over the variables x (= x1), x2, y (= x1), t, r:
// numbers, pi, + - * /, parentheses, sin, cos, exp. Parsed once into a tree;
// evaluation is const and safe to share across threads.
class Expression {
 public:
  struct Vars {
    double x1 = 0.0, x2 = 0.0, t = 0.0, r = 0.0;
  };

  Expression() : Expression("0") {}
  explicit Expression(const std::string& text) : text_(text) {
    pos_ = 0;
    root_ = parse_sum();
    skip();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
  }

  double operator()(const Vars& v) const { return eval(*root_, v); }
  const std::string& text() const { return text_; }

 private:
  enum class Op { Num, X1, X2, T, R, Add, Sub, Mul, Div, Neg, Sin, Cos, Exp };
  struct Node {
    Op op;
    double value = 0.0;
    std::shared_ptr<Node> a, b;
  };
  using P = std::shared_ptr<Node>;

  static double eval(const Node& n, const Vars& v) {
    switch (n.op) {
      case Op::Num: return n.value;
      case Op::X1: return v.x1;
      case Op::X2: return v.x2;
      case Op::T: return v.t;
      case Op::R: return v.r;
      case Op::Add: return eval(*n.a, v) + eval(*n.b, v);
      case Op::Sub: return eval(*n.a, v) - eval(*n.b, v);
      case Op::Mul: return eval(*n.a, v) * eval(*n.b, v);
      case Op::Div: return eval(*n.a, v) / eval(*n.b, v);
      case Op::Neg: return -eval(*n.a, v);
      case Op::Sin: return std::sin(eval(*n.a, v));
      case Op::Cos: return std::cos(eval(*n.a, v));
      case Op::Exp: return std::exp(eval(*n.a, v));
    }
    return 0.0;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw ValidationError("cannot parse expression \"" + text_ + "\" at " + std::to_string(pos_) +
                          ": " + why);
  }
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  static P make(Op op, P a = nullptr, P b = nullptr, double v = 0.0) {
    return std::make_shared<Node>(Node{op, v, std::move(a), std::move(b)});
  }

  P parse_sum() {
    P lhs = parse_product();
    while (true) {
      if (eat('+'))
        lhs = make(Op::Add, lhs, parse_product());
      else if (eat('-'))
        lhs = make(Op::Sub, lhs, parse_product());
      else
        return lhs;
    }
  }
  P parse_product() {
    P lhs = parse_unary();
    while (true) {
      if (eat('*'))
        lhs = make(Op::Mul, lhs, parse_unary());
      else if (eat('/'))
        lhs = make(Op::Div, lhs, parse_unary());
      else
        return lhs;
    }
  }
  P parse_unary() {
    if (eat('-')) return make(Op::Neg, parse_unary());
    if (eat('+')) return parse_unary();
    return parse_atom();
  }
  P parse_atom() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end");
    if (eat('(')) {
      P e = parse_sum();
      if (!eat(')')) fail("missing ')'");
      return e;
    }
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(text_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return make(Op::Num, nullptr, nullptr, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t end = pos_;
      while (end < text_.size() && std::isalnum(static_cast<unsigned char>(text_[end]))) ++end;
      const std::string id = text_.substr(pos_, end - pos_);
      pos_ = end;
      if (id == "pi") return make(Op::Num, nullptr, nullptr, std::numbers::pi);
      if (id == "x" || id == "x1" || id == "y" || id == "y1") return make(Op::X1);
      if (id == "x2" || id == "y2") return make(Op::X2);
      if (id == "t") return make(Op::T);
      if (id == "r") return make(Op::R);
      Op fn;
      if (id == "sin")
        fn = Op::Sin;
      else if (id == "cos")
        fn = Op::Cos;
      else if (id == "exp")
        fn = Op::Exp;
      else
        fail("unknown name '" + id + "'");
      if (!eat('(')) fail("expected '(' after " + id);
      P arg = parse_sum();
      if (!eat(')')) fail("missing ')'");
      return make(fn, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string text_;
  std::size_t pos_ = 0;
  P root_;
};

}  // namespace epiwave
