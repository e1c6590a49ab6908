#pragma once

#include <cctype>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "evo/expr/ast.hpp"
#include "evo/expr/builtins.hpp"

namespace evo {

/// Parse failure with 1-based line:column and what was expected.
class SyntaxError : public std::runtime_error {
public:
  SyntaxError(int line, int col, const std::string& msg)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) +
                           ": " + msg),
        line_(line),
        col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

private:
  int line_, col_;
};

namespace detail {

enum class Tok : std::uint8_t {
  End, Number, Ident, AtIdent, String, Lambda,
  LParen, RParen, LBracket, RBracket, Comma, Colon, Assign,
  Plus, Minus, Star, Slash, Pow, Eq, Ne, Lt, Le, Gt, Ge,
};

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  int line = 1, col = 1;
};

class Lexer {
public:
  explicit Lexer(const std::string& src) : src_(src) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= src_.size()) {
      t.kind = Tok::End;
      return t;
    }
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      return lex_number(t);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return lex_ident(t, false);
    if (c == '@') {
      advance();
      if (pos_ >= src_.size() ||
          (!std::isalpha(static_cast<unsigned char>(src_[pos_])) &&
           src_[pos_] != '_'))
        fail(t, "expected identifier after '@'");
      return lex_ident(t, true);
    }
    if (c == '"' || c == '\'') return lex_string(t, c);
    advance();
    switch (c) {
      case '(': t.kind = Tok::LParen; return t;
      case ')': t.kind = Tok::RParen; return t;
      case '[': t.kind = Tok::LBracket; return t;
      case ']': t.kind = Tok::RBracket; return t;
      case ',': t.kind = Tok::Comma; return t;
      case ':': t.kind = Tok::Colon; return t;
      case '+': t.kind = Tok::Plus; return t;
      case '-': t.kind = Tok::Minus; return t;
      case '/': t.kind = Tok::Slash; return t;
      case '*':
        if (peek() == '*') {
          advance();
          t.kind = Tok::Pow;
        } else {
          t.kind = Tok::Star;
        }
        return t;
      case '=':
        if (peek() == '=') {
          advance();
          t.kind = Tok::Eq;
        } else {
          t.kind = Tok::Assign;
        }
        return t;
      case '!':
        if (peek() == '=') {
          advance();
          t.kind = Tok::Ne;
          return t;
        }
        fail(t, "expected '=' after '!'");
        break;
      case '<':
        if (peek() == '=') {
          advance();
          t.kind = Tok::Le;
        } else {
          t.kind = Tok::Lt;
        }
        return t;
      case '>':
        if (peek() == '=') {
          advance();
          t.kind = Tok::Ge;
        } else {
          t.kind = Tok::Gt;
        }
        return t;
      default:
        fail(t, std::string("unexpected character '") + c + "'");
    }
    return t;  // unreachable
  }

private:
  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

  void advance() {
    if (pos_ < src_.size()) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void skip_ws() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      advance();
  }

  [[noreturn]] void fail(const Token& t, const std::string& msg) {
    throw SyntaxError(t.line, t.col, msg);
  }

  Token lex_number(Token& t) {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '.'))
      advance();
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
        advance();
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        advance();
    }
    t.text = src_.substr(start, pos_ - start);
    char* end = nullptr;
    t.number = std::strtod(t.text.c_str(), &end);
    if (end != t.text.c_str() + t.text.size())
      fail(t, "malformed number '" + t.text + "'");
    t.kind = Tok::Number;
    return t;
  }

  Token lex_ident(Token& t, bool at_prefixed) {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '_'))
      advance();
    t.text = src_.substr(start, pos_ - start);
    if (at_prefixed) {
      t.kind = Tok::AtIdent;
      t.text = "@" + t.text;
    } else if (t.text == "lambda") {
      t.kind = Tok::Lambda;
    } else {
      t.kind = Tok::Ident;
    }
    return t;
  }

  Token lex_string(Token& t, char quote) {
    advance();
    std::string out;
    while (pos_ < src_.size() && src_[pos_] != quote) {
      out += src_[pos_];
      advance();
    }
    if (pos_ >= src_.size()) fail(t, "unterminated string literal");
    advance();
    t.kind = Tok::String;
    t.text = out;
    return t;
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

class Parser {
public:
  Parser(const std::string& src, bool allow_init_builtins)
      : lexer_(src), allow_init_(allow_init_builtins) {
    cur_ = lexer_.next();
  }

  ExprAst parse_lambda() {
    ExprAst ast;
    expect(Tok::Lambda, "'lambda'");
    while (cur_.kind != Tok::Colon) {
      if (!ast.params.empty()) expect(Tok::Comma, "',' or ':'");
      if (cur_.kind != Tok::Ident)
        fail("expected parameter name, got " + describe(cur_));
      for (const auto& p : ast.params)
        if (p == cur_.text) fail("duplicate parameter '" + cur_.text + "'");
      ast.params.push_back(cur_.text);
      consume();
    }
    consume();  // ':'
    params_ = &ast.params;
    ast.root = parse_expr();
    expect(Tok::End, "end of input");
    return ast;
  }

  ExprPtr parse_bare_expr() {
    ExprPtr e = parse_expr();
    expect(Tok::End, "end of input");
    return e;
  }

private:
  void consume() { cur_ = lexer_.next(); }

  void expect(Tok k, const std::string& what) {
    if (cur_.kind != k) fail("expected " + what + ", got " + describe(cur_));
    if (k != Tok::End) consume();
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw SyntaxError(cur_.line, cur_.col, msg);
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::End: return "end of input";
      case Tok::Number: return "number '" + t.text + "'";
      case Tok::Ident:
      case Tok::AtIdent: return "identifier '" + t.text + "'";
      case Tok::String: return "string literal";
      case Tok::Lambda: return "'lambda'";
      default: break;
    }
    static const char* names[] = {"", "", "", "", "", "",
                                  "'('", "')'", "'['", "']'", "','", "':'",
                                  "'='", "'+'", "'-'", "'*'", "'/'", "'**'",
                                  "'=='", "'!='", "'<'", "'<='", "'>'", "'>='"};
    return names[static_cast<int>(t.kind)];
  }

  // expr       := comparison
  // comparison := additive [cmp_op additive]
  // additive   := multiplicative (('+'|'-') multiplicative)*
  // multiplicative := unary (('*'|'/') unary)*
  // unary      := '-' unary | power
  // power      := postfix ['**' unary]
  // postfix    := primary | name '(' args ')' | 'globals' '[' string ']'
  ExprPtr parse_expr() { return parse_comparison(); }

  ExprPtr parse_comparison() {
    ExprPtr lhs = parse_additive();
    BinOp op;
    switch (cur_.kind) {
      case Tok::Eq: op = BinOp::Eq; break;
      case Tok::Ne: op = BinOp::Ne; break;
      case Tok::Lt: op = BinOp::Lt; break;
      case Tok::Le: op = BinOp::Le; break;
      case Tok::Gt: op = BinOp::Gt; break;
      case Tok::Ge: op = BinOp::Ge; break;
      default: return lhs;
    }
    consume();
    ExprPtr rhs = parse_additive();
    switch (cur_.kind) {
      case Tok::Eq: case Tok::Ne: case Tok::Lt:
      case Tok::Le: case Tok::Gt: case Tok::Ge:
        fail("comparison chaining is not supported; parenthesize");
      default: break;
    }
    return Expr::make_binary(op, std::move(lhs), std::move(rhs));
  }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_multiplicative();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      const BinOp op = cur_.kind == Tok::Plus ? BinOp::Add : BinOp::Sub;
      consume();
      lhs = Expr::make_binary(op, std::move(lhs), parse_multiplicative());
    }
    return lhs;
  }

  ExprPtr parse_multiplicative() {
    ExprPtr lhs = parse_unary();
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      const BinOp op = cur_.kind == Tok::Star ? BinOp::Mul : BinOp::Div;
      consume();
      lhs = Expr::make_binary(op, std::move(lhs), parse_unary());
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (cur_.kind == Tok::Minus) {
      consume();
      return Expr::make_unary(parse_unary());
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_postfix();
    if (cur_.kind == Tok::Pow) {
      consume();
      return Expr::make_binary(BinOp::Pow, std::move(base), parse_unary());
    }
    return base;
  }

  ExprPtr parse_postfix() {
    const Token tok = cur_;
    switch (cur_.kind) {
      case Tok::Number: {
        consume();
        return Expr::make_literal(tok.number);
      }
      case Tok::LParen: {
        consume();
        ExprPtr e = parse_expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::AtIdent: {
        consume();
        if (cur_.kind != Tok::LParen)
          fail("callable '" + tok.text + "' must be invoked with arguments");
        auto [args, axis] = parse_args(tok.text, false);
        return Expr::make_call(tok.text, std::move(args));
      }
      case Tok::Ident: {
        consume();
        if (tok.text == "globals" && cur_.kind == Tok::LBracket) {
          consume();
          if (cur_.kind != Tok::String)
            fail("globals must be indexed with a quoted entry name");
          const std::string key = cur_.text;
          consume();
          expect(Tok::RBracket, "']'");
          return Expr::make_globals_ref(key);
        }
        if (cur_.kind == Tok::LBracket)
          fail("only globals may be indexed");
        if (cur_.kind == Tok::LParen) {
          const BuiltinInfo* info = find_builtin(tok.text);
          if (!info)
            throw SyntaxError(tok.line, tok.col,
                              "unknown builtin '" + tok.text + "'");
          if (info->init_only && !allow_init_)
            throw SyntaxError(
                tok.line, tok.col,
                "builtin '" + tok.text +
                    "' is only available in globals initializers");
          auto [args, axis] =
              parse_args(tok.text, info->axis == AxisRule::Required);
          check_arity(tok, *info, args.size(), axis.has_value());
          return Expr::make_builtin(info->id, std::move(args), axis);
        }
        // plain reference: parameter or free identifier
        if (params_) {
          for (std::size_t i = 0; i < params_->size(); ++i)
            if ((*params_)[i] == tok.text)
              return Expr::make_param(tok.text, i);
        }
        if (tok.text == "globals")
          throw SyntaxError(tok.line, tok.col,
                            "globals must be indexed with a quoted entry name");
        if (tok.text == "axis")
          throw SyntaxError(tok.line, tok.col,
                            "'axis' is reserved for keyword arguments");
        return Expr::make_ident(tok.text);
      }
      case Tok::Lambda:
        fail("nested lambdas are not supported");
      default:
        fail("expected expression, got " + describe(tok));
    }
  }

  // Parses "(arg, arg, ..., [axis=INT])". Returns args and optional axis.
  std::pair<std::vector<ExprPtr>, std::optional<long>> parse_args(
      const std::string& callee, bool axis_allowed) {
    expect(Tok::LParen, "'('");
    std::vector<ExprPtr> args;
    std::optional<long> axis;
    bool first = true;
    while (cur_.kind != Tok::RParen) {
      if (!first) expect(Tok::Comma, "',' or ')'");
      first = false;
      if (cur_.kind == Tok::Ident && cur_.text == "axis") {
        const Token axis_tok = cur_;
        consume();
        expect(Tok::Assign, "'=' after 'axis'");
        bool neg = false;
        if (cur_.kind == Tok::Minus) {
          neg = true;
          consume();
        }
        if (cur_.kind != Tok::Number ||
            cur_.number != static_cast<long>(cur_.number))
          fail("axis must be an integer literal");
        if (axis)
          throw SyntaxError(axis_tok.line, axis_tok.col,
                            "duplicate axis argument");
        axis = static_cast<long>(cur_.number) * (neg ? -1 : 1);
        consume();
        continue;
      }
      if (axis) fail("positional argument after axis=");
      args.push_back(parse_expr());
    }
    consume();  // ')'
    if (axis && !axis_allowed)
      fail("'" + callee + "' does not take an axis argument");
    return {std::move(args), axis};
  }

  void check_arity(const Token& tok, const BuiltinInfo& info, std::size_t n,
                   bool has_axis) {
    const int ni = static_cast<int>(n);
    if (ni < info.min_args || (info.max_args >= 0 && ni > info.max_args))
      throw SyntaxError(
          tok.line, tok.col,
          "arity mismatch: '" + std::string(info.name) + "' takes " +
              (info.max_args < 0
                   ? "at least " + std::to_string(info.min_args)
                   : info.min_args == info.max_args
                         ? std::to_string(info.min_args)
                         : std::to_string(info.min_args) + ".." +
                               std::to_string(info.max_args)) +
              " argument(s), got " + std::to_string(n));
    if (info.axis == AxisRule::Required && !has_axis)
      throw SyntaxError(tok.line, tok.col,
                        "'" + std::string(info.name) +
                            "' requires an axis= argument");
  }

  Lexer lexer_;
  Token cur_;
  const std::vector<std::string>* params_ = nullptr;
  bool allow_init_ = false;
};

}  // namespace detail

/// Parses one alternative source `lambda <params>: <expr>`. Total and
/// deterministic; throws SyntaxError with 1-based position on bad input.
inline ExprAst parse(const std::string& source) {
  detail::Parser p(source, /*allow_init_builtins=*/false);
  return p.parse_lambda();
}

/// Parses a bare globals initializer expression; constructor builtins
/// (randn/zeros/ones/full) are available here and only here.
inline ExprPtr parse_init_expr(const std::string& source) {
  detail::Parser p(source, /*allow_init_builtins=*/true);
  return p.parse_bare_expr();
}

}  // namespace evo
