#pragma once

#include <charconv>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evo/expr/builtins.hpp"

namespace evo {

enum class ExprKind : std::uint8_t {
  Literal,    // numeric constant
  Param,      // reference to an enclosing lambda parameter
  Ident,      // free identifier: dataset input or node name
  GlobalsRef, // globals["key"]
  Call,       // @callable(args...)
  BuiltinCall,
  Unary,      // -x
  Binary,     // + - * / ** == != < <= > >=
};

enum class BinOp : std::uint8_t {
  Add, Sub, Mul, Div, Pow, Eq, Ne, Lt, Le, Gt, Ge,
};

inline const char* binop_text(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Pow: return "**";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
  }
  return "?";
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind;

  double literal = 0.0;           // Literal
  std::string name;               // Param/Ident/GlobalsRef key/Call callee
  std::size_t param_index = 0;    // Param
  Builtin builtin{};              // BuiltinCall
  std::optional<long> axis;       // BuiltinCall axis= keyword
  BinOp op{};                     // Binary
  std::vector<ExprPtr> children;  // operands / call arguments

  static ExprPtr make_literal(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Literal;
    e->literal = v;
    return e;
  }
  static ExprPtr make_param(std::string name, std::size_t index) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Param;
    e->name = std::move(name);
    e->param_index = index;
    return e;
  }
  static ExprPtr make_ident(std::string name) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Ident;
    e->name = std::move(name);
    return e;
  }
  static ExprPtr make_globals_ref(std::string key) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::GlobalsRef;
    e->name = std::move(key);
    return e;
  }
  static ExprPtr make_call(std::string callee, std::vector<ExprPtr> args) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Call;
    e->name = std::move(callee);
    e->children = std::move(args);
    return e;
  }
  static ExprPtr make_builtin(Builtin b, std::vector<ExprPtr> args,
                              std::optional<long> axis = std::nullopt) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::BuiltinCall;
    e->builtin = b;
    e->children = std::move(args);
    e->axis = axis;
    return e;
  }
  static ExprPtr make_unary(ExprPtr operand) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Unary;
    e->children = {std::move(operand)};
    return e;
  }
  static ExprPtr make_binary(BinOp op, ExprPtr lhs, ExprPtr rhs) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Binary;
    e->op = op;
    e->children = {std::move(lhs), std::move(rhs)};
    return e;
  }
};

/// Parsed expression tree for one alternative: `lambda <params>: <body>`.
/// Globals initializers are bare bodies with an empty parameter list.
struct ExprAst {
  std::vector<std::string> params;
  ExprPtr root;
};

inline bool expr_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::Literal:
      if (a.literal != b.literal) return false;
      break;
    case ExprKind::Param:
      if (a.param_index != b.param_index) return false;
      break;
    case ExprKind::Ident:
    case ExprKind::GlobalsRef:
    case ExprKind::Call:
      if (a.name != b.name) return false;
      break;
    case ExprKind::BuiltinCall:
      if (a.builtin != b.builtin || a.axis != b.axis) return false;
      break;
    case ExprKind::Binary:
      if (a.op != b.op) return false;
      break;
    case ExprKind::Unary:
      break;
  }
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!expr_equal(*a.children[i], *b.children[i])) return false;
  return true;
}

/// Structural equality up to parameter names (indices must agree).
inline bool ast_equal(const ExprAst& a, const ExprAst& b) {
  return a.params.size() == b.params.size() && expr_equal(*a.root, *b.root);
}

/// Shortest decimal rendering that round-trips through parsing.
inline std::string format_number(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

// Operator precedence tiers for minimal-parenthesis printing.
// comparison(1) < additive(2) < multiplicative(3) < unary(4) < power(5)
inline int expr_precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Binary:
      switch (e.op) {
        case BinOp::Eq: case BinOp::Ne: case BinOp::Lt:
        case BinOp::Le: case BinOp::Gt: case BinOp::Ge:
          return 1;
        case BinOp::Add: case BinOp::Sub:
          return 2;
        case BinOp::Mul: case BinOp::Div:
          return 3;
        case BinOp::Pow:
          return 5;
      }
      return 1;
    case ExprKind::Unary:
      return 4;
    default:
      return 6;
  }
}

inline void print_expr(const Expr& e, const std::vector<std::string>& params,
                       bool canonical, std::string& out) {
  auto child = [&](const Expr& c, int min_prec, bool strict) {
    const int p = expr_precedence(c);
    const bool parens = strict ? p <= min_prec : p < min_prec;
    if (parens) out += '(';
    print_expr(c, params, canonical, out);
    if (parens) out += ')';
  };
  switch (e.kind) {
    case ExprKind::Literal:
      out += format_number(e.literal);
      break;
    case ExprKind::Param:
      if (canonical)
        out += "$" + std::to_string(e.param_index);
      else
        out += e.name;
      break;
    case ExprKind::Ident:
      out += e.name;
      break;
    case ExprKind::GlobalsRef:
      out += "globals[\"" + e.name + "\"]";
      break;
    case ExprKind::Call:
      out += e.name;
      out += '(';
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) out += ", ";
        print_expr(*e.children[i], params, canonical, out);
      }
      out += ')';
      break;
    case ExprKind::BuiltinCall: {
      out += builtin_info(e.builtin).name;
      out += '(';
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) out += ", ";
        print_expr(*e.children[i], params, canonical, out);
      }
      if (e.axis) {
        if (!e.children.empty()) out += ", ";
        out += "axis=" + std::to_string(*e.axis);
      }
      out += ')';
      break;
    }
    case ExprKind::Unary:
      out += '-';
      child(*e.children[0], 4, false);
      break;
    case ExprKind::Binary: {
      const int p = expr_precedence(e);
      if (e.op == BinOp::Pow) {
        // right-associative
        child(*e.children[0], p, true);
        out += "**";
        child(*e.children[1], p, false);
      } else {
        // comparisons are non-associative, so both sides need parens at
        // equal precedence; + - * / are left-associative
        const bool cmp = p == 1;
        child(*e.children[0], p, cmp);
        out += ' ';
        out += binop_text(e.op);
        out += ' ';
        child(*e.children[1], p, true);
      }
      break;
    }
  }
}

}  // namespace detail

/// Renders the AST back to grammar-valid source with original parameter
/// names. parse(pretty_print(ast)) is structurally equal to ast.
inline std::string pretty_print(const ExprAst& ast) {
  std::string out = "lambda";
  for (std::size_t i = 0; i < ast.params.size(); ++i) {
    out += i ? ", " : " ";
    out += ast.params[i];
  }
  out += ": ";
  detail::print_expr(*ast.root, ast.params, /*canonical=*/false, out);
  return out;
}

/// Rendering for a bare expression (globals initializers).
inline std::string pretty_print_expr(const ExprPtr& root) {
  std::string out;
  detail::print_expr(*root, {}, false, out);
  return out;
}

/// Whitespace-normalized, parameter-renamed rendering. Two alternatives are
/// duplicates iff their canonical forms are byte-equal. Parameters print as
/// $0, $1, ... so renaming cannot collide with free identifiers.
inline std::string canonical_form(const ExprAst& ast) {
  std::string out = "lambda";
  for (std::size_t i = 0; i < ast.params.size(); ++i) {
    out += i ? ", $" : " $";
    out += std::to_string(i);
  }
  out += ": ";
  detail::print_expr(*ast.root, ast.params, /*canonical=*/true, out);
  return out;
}

}  // namespace evo
