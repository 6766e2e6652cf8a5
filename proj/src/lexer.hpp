#pragma once

// Tokenizer and recursive-descent parser shared by the expression grammar and
// the constraint-predicate grammar layered on top of it.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "prepmark/expr.hpp"

namespace prepmark::detail {

enum class TokenKind {
  Number,
  Variable,
  Function,
  Sqrt,
  Constant,
  Plus,
  Minus,
  Star,
  Slash,
  Caret,
  LParen,
  RParen,
  Comma,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  And,
  Or,
  Not,
  Keyword,
  End,
};

struct Token {
  TokenKind kind = TokenKind::End;
  std::size_t offset = 0;  // code points from the start of the input
  std::string text;
  Scalar number;  // TokenKind::Number
  Function fn = Function::Sin;
  NamedConstant constant = NamedConstant::Pi;
};

struct LexOptions {
  // Recognize and/or/not and the built-in predicate names as words.
  bool predicate_words = false;
};

std::vector<Token> tokenize(std::string_view text, LexOptions options = {});

std::string describe(const Token& token);

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  // expr := term (('+'|'-') term)*
  Expr parse_expression();

  const Token& peek() const { return tokens_[pos_]; }
  std::size_t position() const { return pos_; }
  void rewind(std::size_t pos) { pos_ = pos; }
  Token advance();
  bool accept(TokenKind kind);
  Token expect(TokenKind kind, const std::string& hint);
  [[noreturn]] void fail(const std::string& hint) const;

 private:
  Expr parse_term();
  Expr parse_adjacent();
  Expr parse_factor();
  Expr parse_atom();
  bool starts_implicit_factor() const;

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace prepmark::detail
