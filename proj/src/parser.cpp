#include <array>
#include <cctype>
#include <utility>

#include "lexer.hpp"
#include "prepmark/error.hpp"

namespace prepmark {
namespace detail {
namespace {

struct CodePoint {
  char32_t value;
  std::size_t offset;
};

std::vector<CodePoint> decode_utf8(std::string_view text) {
  std::vector<CodePoint> out;
  out.reserve(text.size() + 1);
  std::size_t i = 0;
  std::size_t index = 0;
  while (i < text.size()) {
    auto lead = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      cp = lead & 0x1F;
      extra = 1;
    } else if ((lead & 0xF0) == 0xE0) {
      cp = lead & 0x0F;
      extra = 2;
    } else if ((lead & 0xF8) == 0xF0) {
      cp = lead & 0x07;
      extra = 3;
    } else {
      throw SyntaxError(index, "invalid UTF-8 byte");
    }
    if (i + static_cast<std::size_t>(extra) >= text.size()) {
      throw SyntaxError(index, "truncated UTF-8 sequence");
    }
    for (int k = 1; k <= extra; ++k) {
      auto cont = static_cast<unsigned char>(text[i + static_cast<std::size_t>(k)]);
      if ((cont & 0xC0) != 0x80) throw SyntaxError(index, "invalid UTF-8 sequence");
      cp = (cp << 6) | (cont & 0x3F);
    }
    out.push_back({cp, index});
    i += static_cast<std::size_t>(extra) + 1;
    ++index;
  }
  out.push_back({0, index});
  return out;
}

bool is_letter(char32_t c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }

bool is_word_char(char32_t c) { return is_letter(c) || is_digit(c) || c == '_'; }

struct Word {
  std::string_view text;
  TokenKind kind;
  Function fn;
};

constexpr std::array<Word, 7> kFunctions{{
    {"sqrt", TokenKind::Sqrt, Function::Sin},
    {"sin", TokenKind::Function, Function::Sin},
    {"cos", TokenKind::Function, Function::Cos},
    {"tan", TokenKind::Function, Function::Tan},
    {"exp", TokenKind::Function, Function::Exp},
    {"abs", TokenKind::Function, Function::Abs},
    {"ln", TokenKind::Function, Function::Ln},
}};

constexpr std::size_t kMaxExactDigits = 40;

class Lexer {
 public:
  Lexer(std::string_view text, LexOptions options)
      : cps_(decode_utf8(text)), options_(options) {}

  std::vector<Token> run() {
    std::vector<Token> tokens;
    for (;;) {
      skip_space();
      Token tok = next();
      const bool end = tok.kind == TokenKind::End;
      tokens.push_back(std::move(tok));
      if (end) return tokens;
    }
  }

 private:
  char32_t at(std::size_t k = 0) const {
    return pos_ + k < cps_.size() ? cps_[pos_ + k].value : 0;
  }
  std::size_t offset() const { return cps_[pos_].offset; }
  bool done() const { return pos_ + 1 >= cps_.size(); }

  void skip_space() {
    while (!done() && (at() == ' ' || at() == '\t' || at() == '\n' || at() == '\r' ||
                       at() == 0x00A0)) {
      ++pos_;
    }
  }

  bool word_at(std::string_view w) const {
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (at(k) != static_cast<char32_t>(w[k])) return false;
    }
    return true;
  }

  // Position of the next non-space code point after k characters.
  char32_t peek_after(std::size_t k) const {
    std::size_t j = pos_ + k;
    while (j < cps_.size() && (cps_[j].value == ' ' || cps_[j].value == '\t')) ++j;
    return j < cps_.size() ? cps_[j].value : 0;
  }

  Token make(TokenKind kind, std::size_t start, std::string text) {
    Token t;
    t.kind = kind;
    t.offset = start;
    t.text = std::move(text);
    return t;
  }

  Token next() {
    const std::size_t start = offset();
    if (done()) return make(TokenKind::End, start, "");
    const char32_t c = at();

    if (is_digit(c) || (c == '.' && is_digit(at(1)))) return number(start);
    if (is_letter(c)) return identifier(start);

    auto single = [&](TokenKind kind, const char* text) {
      ++pos_;
      return make(kind, start, text);
    };
    switch (c) {
      case '+': return single(TokenKind::Plus, "+");
      case '-':
      case 0x2212: return single(TokenKind::Minus, "-");
      case '*':
      case 0x00D7:
      case 0x00B7:
      case 0x22C5: return single(TokenKind::Star, "*");
      case '/':
      case 0x00F7: return single(TokenKind::Slash, "/");
      case '^': return single(TokenKind::Caret, "^");
      case '(': return single(TokenKind::LParen, "(");
      case ')': return single(TokenKind::RParen, ")");
      case ',': return single(TokenKind::Comma, ",");
      case 0x2260: return single(TokenKind::Ne, "!=");
      case 0x2264: return single(TokenKind::Le, "<=");
      case 0x2265: return single(TokenKind::Ge, ">=");
      case '=':
        ++pos_;
        if (at() == '=') ++pos_;
        return make(TokenKind::Eq, start, "=");
      case '!':
        ++pos_;
        if (at() == '=') {
          ++pos_;
          return make(TokenKind::Ne, start, "!=");
        }
        return make(TokenKind::Not, start, "!");
      case '<':
        ++pos_;
        if (at() == '=') {
          ++pos_;
          return make(TokenKind::Le, start, "<=");
        }
        if (at() == '>') {
          ++pos_;
          return make(TokenKind::Ne, start, "!=");
        }
        return make(TokenKind::Lt, start, "<");
      case '>':
        ++pos_;
        if (at() == '=') {
          ++pos_;
          return make(TokenKind::Ge, start, ">=");
        }
        return make(TokenKind::Gt, start, ">");
      case '&':
        if (at(1) == '&') {
          pos_ += 2;
          return make(TokenKind::And, start, "&&");
        }
        break;
      case '|':
        if (at(1) == '|') {
          pos_ += 2;
          return make(TokenKind::Or, start, "||");
        }
        break;
      default: break;
    }
    throw SyntaxError(start, "unexpected character");
  }

  Token number(std::size_t start) {
    std::string digits;
    while (is_digit(at())) digits.push_back(static_cast<char>(at())), ++pos_;
    if (at() == '.') {
      digits.push_back('.');
      ++pos_;
      while (is_digit(at())) digits.push_back(static_cast<char>(at())), ++pos_;
    }
    Token t = make(TokenKind::Number, start, digits);
    std::size_t significant = 0;
    for (char ch : digits) significant += ch != '.';
    if (significant <= kMaxExactDigits) {
      t.number = *parse_rational(digits);
    } else {
      t.number = std::stod(digits);
    }
    return t;
  }

  Token identifier(std::size_t start) {
    if (options_.predicate_words) {
      for (auto [w, kind] : {std::pair{std::string_view("no_solution_2x2"), TokenKind::Keyword},
                             std::pair{std::string_view("and"), TokenKind::And},
                             std::pair{std::string_view("or"), TokenKind::Or},
                             std::pair{std::string_view("not"), TokenKind::Not}}) {
        if (word_at(w) && !is_word_char(at(w.size()))) {
          pos_ += w.size();
          return make(kind, start, std::string(w));
        }
      }
    }
    for (const auto& f : kFunctions) {
      if (word_at(f.text)) {
        pos_ += f.text.size();
        if (peek_after(0) != '(') {
          skip_space();
          throw SyntaxError(offset(), "expected '(' after " + std::string(f.text));
        }
        Token t = make(f.kind, start, std::string(f.text));
        t.fn = f.fn;
        return t;
      }
    }
    if (word_at("pi")) {
      pos_ += 2;
      Token t = make(TokenKind::Constant, start, "pi");
      t.constant = NamedConstant::Pi;
      return t;
    }
    if (at() == 'e') {
      ++pos_;
      Token t = make(TokenKind::Constant, start, "e");
      t.constant = NamedConstant::E;
      return t;
    }
    std::string name(1, static_cast<char>(at()));
    ++pos_;
    return make(TokenKind::Variable, start, name);
  }

  std::vector<CodePoint> cps_;
  std::size_t pos_ = 0;
  LexOptions options_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view text, LexOptions options) {
  return Lexer(text, options).run();
}

std::string describe(const Token& token) {
  switch (token.kind) {
    case TokenKind::End: return "end of input";
    case TokenKind::Number: return "number '" + token.text + "'";
    case TokenKind::Variable: return "variable '" + token.text + "'";
    default: return "'" + token.text + "'";
  }
}

Token Parser::advance() {
  Token t = tokens_[pos_];
  if (pos_ + 1 < tokens_.size()) ++pos_;
  return t;
}

bool Parser::accept(TokenKind kind) {
  if (peek().kind != kind) return false;
  advance();
  return true;
}

Token Parser::expect(TokenKind kind, const std::string& hint) {
  if (peek().kind != kind) fail(hint);
  return advance();
}

void Parser::fail(const std::string& hint) const {
  throw SyntaxError(peek().offset, hint + ", found " + describe(peek()));
}

Expr Parser::parse_expression() {
  Expr lhs = parse_term();
  for (;;) {
    if (accept(TokenKind::Plus)) {
      lhs = Expr::binary(BinaryOp::Add, std::move(lhs), parse_term());
    } else if (accept(TokenKind::Minus)) {
      lhs = Expr::binary(BinaryOp::Sub, std::move(lhs), parse_term());
    } else {
      return lhs;
    }
  }
}

// term := adjacent (('*'|'/') adjacent)*
Expr Parser::parse_term() {
  Expr lhs = parse_adjacent();
  for (;;) {
    if (accept(TokenKind::Star)) {
      lhs = Expr::binary(BinaryOp::Mul, std::move(lhs), parse_adjacent());
    } else if (accept(TokenKind::Slash)) {
      lhs = Expr::binary(BinaryOp::Div, std::move(lhs), parse_adjacent());
    } else {
      return lhs;
    }
  }
}

bool Parser::starts_implicit_factor() const {
  switch (peek().kind) {
    case TokenKind::Variable:
    case TokenKind::Constant:
    case TokenKind::Function:
    case TokenKind::Sqrt:
    case TokenKind::LParen: return true;
    default: return false;
  }
}

// adjacent := factor factor*   (implicit multiplication)
Expr Parser::parse_adjacent() {
  Expr lhs = parse_factor();
  while (starts_implicit_factor()) {
    lhs = Expr::binary(BinaryOp::Mul, std::move(lhs), parse_factor());
  }
  return lhs;
}

// factor := '-' factor | atom ('^' factor)?
Expr Parser::parse_factor() {
  if (accept(TokenKind::Minus)) return Expr::negate(parse_factor());
  Expr base = parse_atom();
  if (accept(TokenKind::Caret)) {
    return Expr::binary(BinaryOp::Pow, std::move(base), parse_factor());
  }
  return base;
}

Expr Parser::parse_atom() {
  const Token& tok = peek();
  switch (tok.kind) {
    case TokenKind::Number: {
      Token t = advance();
      if (std::holds_alternative<Rational>(t.number)) {
        return Expr::number(std::get<Rational>(t.number));
      }
      return Expr::floating(std::get<double>(t.number));
    }
    case TokenKind::Variable: return Expr::variable(advance().text);
    case TokenKind::Constant: return Expr::constant(advance().constant);
    case TokenKind::Function:
    case TokenKind::Sqrt: {
      Token t = advance();
      expect(TokenKind::LParen, "expected '(' after " + t.text);
      Expr arg = parse_expression();
      expect(TokenKind::RParen, "expected ')'");
      if (t.kind == TokenKind::Sqrt) {
        return Expr::binary(BinaryOp::Pow, std::move(arg),
                            Expr::binary(BinaryOp::Div, Expr::number(1), Expr::number(2)));
      }
      return Expr::call(t.fn, std::move(arg));
    }
    case TokenKind::LParen: {
      advance();
      Expr inner = parse_expression();
      expect(TokenKind::RParen, "expected ')'");
      return inner;
    }
    default: fail("expected a number, variable, function or '('");
  }
}

}  // namespace detail

Expr parse(std::string_view text) {
  if (text.size() > kMaxExpressionLength) {
    throw SyntaxError(kMaxExpressionLength, "input longer than 4096 characters");
  }
  detail::Parser parser(detail::tokenize(text));
  if (parser.peek().kind == detail::TokenKind::End) {
    throw SyntaxError(0, "expected an expression");
  }
  Expr e = parser.parse_expression();
  if (parser.peek().kind != detail::TokenKind::End) {
    parser.fail("expected an operator or end of input");
  }
  return e;
}

}  // namespace prepmark
