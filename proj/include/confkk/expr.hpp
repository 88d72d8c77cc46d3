#pragma once

// Scalar expression trees over named coordinates and parameters.
//
// Expressions are parsed from infix text (or built programmatically) into an
// append-only arena. Evaluation is templated on the scalar type, so the same
// tree runs on plain doubles or on jets of any order. A finite-difference
// bundle builder lives here too; it produces third-order derivative data from
// value-only evaluations and serves as the independent cross-check backend.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "confkk/jet.hpp"

namespace confkk {

using ExprId = std::int32_t;
inline constexpr ExprId kNoExpr = -1;
inline constexpr std::uint32_t kNoOffset = 0xffffffffu;

struct ParseError : std::runtime_error {
  std::size_t offset;
  ParseError(const std::string& what, std::size_t off)
      : std::runtime_error(what + " at offset " + std::to_string(off)), offset(off) {}
};

struct EvalError : std::runtime_error {
  std::uint32_t offset;
  EvalError(const std::string& what, std::uint32_t off)
      : std::runtime_error(off == kNoOffset ? what : what + " at offset " + std::to_string(off)),
        offset(off) {}
};

enum class UnFn : std::uint8_t {
  Neg, Sin, Cos, Sinh, Cosh, Tanh, Exp, Ln, Sqrt, Arcsin, Arctanh
};

enum class BinOp : std::uint8_t { Add, Sub, Mul, Div };

// Node kinds: number, coordinate, parameter, unary function, binary op, and
// power with a constant exponent (exponent kept in `num`).
struct ExprNode {
  enum class Kind : std::uint8_t { Num, Coord, Param, Un, Bin, Pow } kind;
  double num = 0.0;
  std::int32_t slot = -1;
  UnFn fn = UnFn::Neg;
  BinOp op = BinOp::Add;
  ExprId a = kNoExpr, b = kNoExpr;
  std::uint32_t offset = kNoOffset;
};

template <class T>
T scalar_const(double v, int nvars) {
  if constexpr (std::is_same_v<T, double>) {
    (void)nvars;
    return v;
  } else {
    return T::constant(v, nvars);
  }
}

class ExprPool {
 public:
  ExprId num(double v, std::uint32_t off = kNoOffset) {
    return push({ExprNode::Kind::Num, v, -1, UnFn::Neg, BinOp::Add, kNoExpr, kNoExpr, off});
  }
  ExprId coord(int slot, std::uint32_t off = kNoOffset) {
    return push({ExprNode::Kind::Coord, 0.0, slot, UnFn::Neg, BinOp::Add, kNoExpr, kNoExpr, off});
  }
  ExprId param(int slot, std::uint32_t off = kNoOffset) {
    return push({ExprNode::Kind::Param, 0.0, slot, UnFn::Neg, BinOp::Add, kNoExpr, kNoExpr, off});
  }
  ExprId un(UnFn f, ExprId a, std::uint32_t off = kNoOffset) {
    return push({ExprNode::Kind::Un, 0.0, -1, f, BinOp::Add, a, kNoExpr, off});
  }
  ExprId bin(BinOp o, ExprId a, ExprId b, std::uint32_t off = kNoOffset) {
    return push({ExprNode::Kind::Bin, 0.0, -1, UnFn::Neg, o, a, b, off});
  }
  ExprId pow(ExprId a, double expo, std::uint32_t off = kNoOffset) {
    return push({ExprNode::Kind::Pow, expo, -1, UnFn::Neg, BinOp::Add, a, kNoExpr, off});
  }

  ExprId add(ExprId a, ExprId b) { return bin(BinOp::Add, a, b); }
  ExprId sub(ExprId a, ExprId b) { return bin(BinOp::Sub, a, b); }
  ExprId mul(ExprId a, ExprId b) { return bin(BinOp::Mul, a, b); }
  ExprId div(ExprId a, ExprId b) { return bin(BinOp::Div, a, b); }
  ExprId neg(ExprId a) { return un(UnFn::Neg, a); }

  const ExprNode& node(ExprId id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return nodes_.size(); }

  // deep-copies a subtree from another pool; coordinate slots can be remapped
  // (parameter slots are preserved)
  ExprId import(const ExprPool& src, ExprId id, std::span<const int> coord_map = {}) {
    const ExprNode& nd = src.node(id);
    switch (nd.kind) {
      case ExprNode::Kind::Num: return num(nd.num, nd.offset);
      case ExprNode::Kind::Coord: {
        int slot = nd.slot;
        if (!coord_map.empty()) slot = coord_map[static_cast<std::size_t>(slot)];
        return coord(slot, nd.offset);
      }
      case ExprNode::Kind::Param: return param(nd.slot, nd.offset);
      case ExprNode::Kind::Un: return un(nd.fn, import(src, nd.a, coord_map), nd.offset);
      case ExprNode::Kind::Bin:
        return bin(nd.op, import(src, nd.a, coord_map), import(src, nd.b, coord_map), nd.offset);
      case ExprNode::Kind::Pow: return pow(import(src, nd.a, coord_map), nd.num, nd.offset);
    }
    throw std::logic_error("corrupt expression node");
  }

  bool depends_on_coord(ExprId id, int slot) const {
    const ExprNode& nd = node(id);
    switch (nd.kind) {
      case ExprNode::Kind::Num:
      case ExprNode::Kind::Param: return false;
      case ExprNode::Kind::Coord: return nd.slot == slot;
      case ExprNode::Kind::Un:
      case ExprNode::Kind::Pow: return depends_on_coord(nd.a, slot);
      case ExprNode::Kind::Bin:
        return depends_on_coord(nd.a, slot) || depends_on_coord(nd.b, slot);
    }
    return false;
  }

  template <class T>
  T eval(ExprId id, std::span<const T> coords, std::span<const double> params, int nvars) const {
    const ExprNode& nd = node(id);
    switch (nd.kind) {
      case ExprNode::Kind::Num:
        return scalar_const<T>(nd.num, nvars);
      case ExprNode::Kind::Coord:
        return coords[static_cast<std::size_t>(nd.slot)];
      case ExprNode::Kind::Param:
        return scalar_const<T>(params[static_cast<std::size_t>(nd.slot)], nvars);
      case ExprNode::Kind::Un: {
        T x = eval(nd.a, coords, params, nvars);
        return apply_fn(nd.fn, x, nd.offset);
      }
      case ExprNode::Kind::Bin: {
        T x = eval(nd.a, coords, params, nvars);
        T y = eval(nd.b, coords, params, nvars);
        switch (nd.op) {
          case BinOp::Add: return x + y;
          case BinOp::Sub: return x - y;
          case BinOp::Mul: return x * y;
          case BinOp::Div:
            if (value_of(y) == 0.0) throw EvalError("division by zero", nd.offset);
            return x / y;
        }
        break;
      }
      case ExprNode::Kind::Pow: {
        T x = eval(nd.a, coords, params, nvars);
        return apply_pow(x, nd.num, nd.offset);
      }
    }
    throw std::logic_error("corrupt expression node");
  }

  std::string print(ExprId id, std::span<const std::string> coord_names,
                    std::span<const std::string> param_names) const {
    std::string out;
    print_rec(id, coord_names, param_names, 0, out);
    return out;
  }

 private:
  std::vector<ExprNode> nodes_;

  ExprId push(ExprNode nd) {
    nodes_.push_back(nd);
    return static_cast<ExprId>(nodes_.size() - 1);
  }

  template <class T>
  static T apply_fn(UnFn f, const T& x, std::uint32_t off) {
    using std::sin; using std::cos; using std::sinh; using std::cosh; using std::tanh;
    using std::exp; using std::log; using std::sqrt; using std::asin; using std::atanh;
    double v = value_of(x);
    switch (f) {
      case UnFn::Neg: return -x;
      case UnFn::Sin: return sin(x);
      case UnFn::Cos: return cos(x);
      case UnFn::Sinh: return sinh(x);
      case UnFn::Cosh: return cosh(x);
      case UnFn::Tanh: return tanh(x);
      case UnFn::Exp: return exp(x);
      case UnFn::Ln:
        if (v <= 0.0) throw EvalError("ln of non-positive value", off);
        return log(x);
      case UnFn::Sqrt:
        if (v < 0.0) throw EvalError("sqrt of negative value", off);
        if (v == 0.0) throw EvalError("sqrt at zero has no derivatives", off);
        return sqrt(x);
      case UnFn::Arcsin:
        if (v <= -1.0 || v >= 1.0) throw EvalError("arcsin argument outside (-1,1)", off);
        return asin(x);
      case UnFn::Arctanh:
        if (v <= -1.0 || v >= 1.0) throw EvalError("arctanh argument outside (-1,1)", off);
        return atanh(x);
    }
    throw std::logic_error("corrupt function tag");
  }

  template <class T>
  static T apply_pow(const T& x, double p, std::uint32_t off) {
    using std::pow;
    double v = value_of(x);
    bool integral = p == std::floor(p) && std::abs(p) < 1e9;
    if (v == 0.0 && p < 0.0) throw EvalError("negative power of zero", off);
    if (v < 0.0 && !integral) throw EvalError("non-integer power of negative base", off);
    if (v == 0.0 && p > 0.0 && !integral)
      throw EvalError("non-integer power at zero has no derivatives", off);
    return pow(x, p);
  }

  static int precedence_of(const ExprNode& nd) {
    switch (nd.kind) {
      case ExprNode::Kind::Bin:
        return (nd.op == BinOp::Add || nd.op == BinOp::Sub) ? 1 : 2;
      case ExprNode::Kind::Un:
        return nd.fn == UnFn::Neg ? 3 : 5;
      case ExprNode::Kind::Pow: return 4;
      case ExprNode::Kind::Num:
        return nd.num < 0.0 ? 3 : 5;
      default: return 5;
    }
  }

  void print_rec(ExprId id, std::span<const std::string> cn, std::span<const std::string> pn,
                 int parent_prec, std::string& out) const {
    const ExprNode& nd = node(id);
    int prec = precedence_of(nd);
    bool paren = prec < parent_prec;
    if (paren) out += '(';
    switch (nd.kind) {
      case ExprNode::Kind::Num: out += format_double(nd.num); break;
      case ExprNode::Kind::Coord: out += cn[static_cast<std::size_t>(nd.slot)]; break;
      case ExprNode::Kind::Param: out += pn[static_cast<std::size_t>(nd.slot)]; break;
      case ExprNode::Kind::Un:
        if (nd.fn == UnFn::Neg) {
          out += '-';
          print_rec(nd.a, cn, pn, 4, out);
        } else {
          out += fn_name(nd.fn);
          out += '(';
          print_rec(nd.a, cn, pn, 0, out);
          out += ')';
        }
        break;
      case ExprNode::Kind::Bin: {
        const char* sym = nd.op == BinOp::Add ? "+" : nd.op == BinOp::Sub ? "-"
                        : nd.op == BinOp::Mul ? "*" : "/";
        print_rec(nd.a, cn, pn, prec, out);
        out += sym;
        // right operand of - or / needs strictly higher precedence
        print_rec(nd.b, cn, pn, (nd.op == BinOp::Sub || nd.op == BinOp::Div) ? prec + 1 : prec,
                  out);
        break;
      }
      case ExprNode::Kind::Pow:
        print_rec(nd.a, cn, pn, prec + 1, out);
        out += '^';
        if (nd.num < 0.0) {
          out += '(';
          out += format_double(nd.num);
          out += ')';
        } else {
          out += format_double(nd.num);
        }
        break;
    }
    if (paren) out += ')';
  }

 public:
  static const char* fn_name(UnFn f) {
    switch (f) {
      case UnFn::Neg: return "neg";
      case UnFn::Sin: return "sin";
      case UnFn::Cos: return "cos";
      case UnFn::Sinh: return "sinh";
      case UnFn::Cosh: return "cosh";
      case UnFn::Tanh: return "tanh";
      case UnFn::Exp: return "exp";
      case UnFn::Ln: return "ln";
      case UnFn::Sqrt: return "sqrt";
      case UnFn::Arcsin: return "arcsin";
      case UnFn::Arctanh: return "arctanh";
    }
    return "?";
  }

  // shortest decimal form that parses back to the same double
  static std::string format_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
      int len = std::snprintf(buf, sizeof buf, "%.*g", prec, v);
      double back = 0.0;
      std::from_chars(buf, buf + len, back);
      if (back == v) return std::string(buf, static_cast<std::size_t>(len));
    }
    return std::string(buf);
  }
};

namespace detail {

class Parser {
 public:
  Parser(ExprPool& pool, std::string_view text, std::span<const std::string> coords,
         std::span<const std::string> params)
      : pool_(pool), text_(text), coords_(coords), params_(params) {}

  ExprId run() {
    ExprId e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  ExprPool& pool_;
  std::string_view text_;
  std::span<const std::string> coords_, params_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) { ++pos_; return true; }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  ExprId parse_expr() {
    ExprId left = parse_term();
    for (;;) {
      std::size_t at = pos_;
      if (accept('+')) left = pool_.bin(BinOp::Add, left, parse_term(), static_cast<std::uint32_t>(at));
      else if (accept('-')) left = pool_.bin(BinOp::Sub, left, parse_term(), static_cast<std::uint32_t>(at));
      else return left;
    }
  }

  ExprId parse_term() {
    ExprId left = parse_unary();
    for (;;) {
      std::size_t at = pos_;
      if (accept('*')) left = pool_.bin(BinOp::Mul, left, parse_unary(), static_cast<std::uint32_t>(at));
      else if (accept('/')) left = pool_.bin(BinOp::Div, left, parse_unary(), static_cast<std::uint32_t>(at));
      else return left;
    }
  }

  ExprId parse_unary() {
    std::size_t at = pos_;
    if (accept('-')) return pool_.un(UnFn::Neg, parse_unary(), static_cast<std::uint32_t>(at));
    return parse_power();
  }

  ExprId parse_power() {
    ExprId base = parse_atom();
    skip_ws();
    std::size_t at = pos_;
    if (accept('^')) {
      double expo = parse_const_exponent();
      return pool_.pow(base, expo, static_cast<std::uint32_t>(at));
    }
    return base;
  }

  double parse_const_exponent() {
    skip_ws();
    std::size_t at = pos_;
    bool neg = false;
    bool paren = accept('(');
    if (accept('-')) neg = true;
    skip_ws();
    double v = parse_number_literal();
    if (paren && !accept(')')) throw ParseError("expected ')' after exponent", pos_);
    (void)at;
    return neg ? -v : v;
  }

  double parse_number_literal() {
    skip_ws();
    std::size_t start = pos_;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    double v = 0.0;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr == first)
      throw ParseError("expected a number", start);
    pos_ = static_cast<std::size_t>(res.ptr - text_.data());
    return v;
  }

  ExprId parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    std::size_t at = pos_;
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      ExprId e = parse_expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') {
      double v = parse_number_literal();
      return pool_.num(v, static_cast<std::uint32_t>(at));
    }
    if (is_ident_start(c)) {
      std::size_t end = pos_;
      while (end < text_.size() && is_ident_char(text_[end])) ++end;
      std::string_view name = text_.substr(pos_, end - pos_);
      pos_ = end;
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '(') {
        UnFn f;
        if (!lookup_fn(name, f))
          throw ParseError("unsupported function '" + std::string(name) + "'", at);
        ++pos_;
        ExprId arg = parse_expr();
        if (!accept(')')) throw ParseError("expected ')'", pos_);
        return pool_.un(f, arg, static_cast<std::uint32_t>(at));
      }
      for (std::size_t i = 0; i < coords_.size(); ++i)
        if (coords_[i] == name) return pool_.coord(static_cast<int>(i), static_cast<std::uint32_t>(at));
      for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i] == name) return pool_.param(static_cast<int>(i), static_cast<std::uint32_t>(at));
      throw ParseError("unknown symbol '" + std::string(name) + "'", at);
    }
    throw ParseError(std::string("unexpected character '") + c + "'", at);
  }

  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
  }

  static bool lookup_fn(std::string_view name, UnFn& out) {
    struct Entry { std::string_view name; UnFn fn; };
    static constexpr Entry table[] = {
        {"neg", UnFn::Neg},       {"sin", UnFn::Sin},     {"cos", UnFn::Cos},
        {"sinh", UnFn::Sinh},     {"cosh", UnFn::Cosh},   {"tanh", UnFn::Tanh},
        {"exp", UnFn::Exp},       {"ln", UnFn::Ln},       {"sqrt", UnFn::Sqrt},
        {"arcsin", UnFn::Arcsin}, {"asin", UnFn::Arcsin}, {"arctanh", UnFn::Arctanh},
        {"atanh", UnFn::Arctanh},
    };
    for (const Entry& e : table)
      if (e.name == name) { out = e.fn; return true; }
    return false;
  }
};

}  // namespace detail

inline ExprId parse_expression(ExprPool& pool, std::string_view text,
                               std::span<const std::string> coords,
                               std::span<const std::string> params) {
  return detail::Parser(pool, text, coords, params).run();
}

// ---------------------------------------------------------------------------
// Finite-difference bundle: third-order derivative data of a value-only
// callable, used as the independent backend and as the oracle for jet tests.
// First and second derivatives use step 1e-5, third derivatives 1e-3 (both
// scaled by 1 + |x_i|), matching the documented oracle accuracy targets.

struct FdSteps {
  double low = 1e-5;   // first and second order
  double high = 1e-3;  // third order
};

template <class F>
Jet3 fd_jet3(F&& f, std::span<const double> x, FdSteps steps = {}) {
  const int n = static_cast<int>(x.size());
  Jet3 r;
  r.n = n;
  std::vector<double> p(x.begin(), x.end());
  auto at = [&](const std::vector<double>& q) { return f(std::span<const double>(q)); };

  double f0 = at(p);
  r.v = f0;

  std::vector<double> h(n), H(n);
  for (int i = 0; i < n; ++i) {
    h[i] = steps.low * (1.0 + std::abs(x[i]));
    H[i] = steps.high * (1.0 + std::abs(x[i]));
  }

  auto shift = [&](std::initializer_list<std::pair<int, double>> moves) {
    std::vector<double> q(x.begin(), x.end());
    for (auto [i, d] : moves) q[static_cast<std::size_t>(i)] += d;
    return at(q);
  };

  for (int i = 0; i < n; ++i)
    r.g[i] = (shift({{i, h[i]}}) - shift({{i, -h[i]}})) / (2.0 * h[i]);

  for (int i = 0; i < n; ++i) {
    r.h[sym2_index(i, i)] = (shift({{i, h[i]}}) - 2.0 * f0 + shift({{i, -h[i]}})) / (h[i] * h[i]);
    for (int j = i + 1; j < n; ++j) {
      double s = (shift({{i, h[i]}, {j, h[j]}}) - shift({{i, h[i]}, {j, -h[j]}}) -
                  shift({{i, -h[i]}, {j, h[j]}}) + shift({{i, -h[i]}, {j, -h[j]}})) /
                 (4.0 * h[i] * h[j]);
      r.h[sym2_index(i, j)] = s;
    }
  }

  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = j; k < n; ++k) {
        double t;
        if (i == j && j == k) {
          double d = H[i];
          t = (shift({{i, 2 * d}}) - 2.0 * shift({{i, d}}) + 2.0 * shift({{i, -d}}) -
               shift({{i, -2 * d}})) / (2.0 * d * d * d);
        } else if (i == j || j == k) {
          int rep = (i == j) ? i : j;
          int other = (i == j) ? k : i;
          double d = H[rep], e = H[other];
          auto second = [&](double off) {
            return (shift({{rep, d}, {other, off}}) - 2.0 * shift({{other, off}}) +
                    shift({{rep, -d}, {other, off}})) / (d * d);
          };
          t = (second(e) - second(-e)) / (2.0 * e);
        } else {
          double di = H[i], dj = H[j], dk = H[k];
          t = 0.0;
          for (int si = -1; si <= 1; si += 2)
            for (int sj = -1; sj <= 1; sj += 2)
              for (int sk = -1; sk <= 1; sk += 2)
                t += si * sj * sk * shift({{i, si * di}, {j, sj * dj}, {k, sk * dk}});
          t /= 8.0 * di * dj * dk;
        }
        r.t[sym3_index(i, j, k)] = t;
      }
  return r;
}

enum class Backend { Jets, FiniteDiff };

inline Backend parse_backend(std::string_view s) {
  if (s == "jets") return Backend::Jets;
  if (s == "fd" || s == "finite-diff") return Backend::FiniteDiff;
  throw std::invalid_argument("unknown backend '" + std::string(s) + "'");
}

}  // namespace confkk
