#include "prepmark/rational.hpp"

#include <cctype>
#include <cmath>

namespace prepmark {

std::string to_string(const Rational& q) {
  const Integer& num = boost::multiprecision::numerator(q);
  const Integer& den = boost::multiprecision::denominator(q);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

std::optional<std::string> to_decimal_string(const Rational& q) {
  Integer num = boost::multiprecision::numerator(q);
  Integer den = boost::multiprecision::denominator(q);
  if (den == 1) return num.str();

  int twos = 0;
  int fives = 0;
  Integer d = den;
  while (d % 2 == 0) { d /= 2; ++twos; }
  while (d % 5 == 0) { d /= 5; ++fives; }
  if (d != 1) return std::nullopt;

  const int digits = std::max(twos, fives);
  Integer scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const bool negative = num < 0;
  if (negative) num = -num;
  Integer scaled = num * (scale / den);
  std::string text = scaled.str();
  if (static_cast<int>(text.size()) <= digits) {
    text.insert(0, static_cast<std::size_t>(digits) + 1 - text.size(), '0');
  }
  text.insert(text.size() - static_cast<std::size_t>(digits), ".");
  if (negative) text.insert(0, "-");
  return text;
}

double to_double(const Rational& q) { return q.convert_to<double>(); }

bool is_integer(const Rational& q) {
  return boost::multiprecision::denominator(q) == 1;
}

namespace {

std::optional<Integer> parse_integer(std::string_view text) {
  if (text.empty()) return std::nullopt;
  for (char c : text) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
  }
  // a leading zero would select octal in the cpp_int string constructor
  const auto first = text.find_first_not_of('0');
  if (first == std::string_view::npos) return Integer(0);
  return Integer(std::string(text.substr(first)));
}

}  // namespace

std::optional<Rational> parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  if (text.empty()) return std::nullopt;

  Rational value;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto num = parse_integer(text.substr(0, slash));
    auto den = parse_integer(text.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    value = Rational(*num, *den);
  } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    if (whole.empty() && frac.empty()) return std::nullopt;
    auto w = whole.empty() ? std::optional<Integer>(0) : parse_integer(whole);
    auto f = frac.empty() ? std::optional<Integer>(0) : parse_integer(frac);
    if (!w || !f) return std::nullopt;
    Integer scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    value = Rational(*w) + Rational(*f, scale);
  } else {
    auto n = parse_integer(text);
    if (!n) return std::nullopt;
    value = Rational(*n);
  }
  return negative ? Rational(-value) : value;
}

Rational rational_from_double(double v) {
  int exponent = 0;
  double mantissa = std::frexp(v, &exponent);
  // 53 significant bits
  auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
  exponent -= 53;
  Rational q(scaled);
  Integer pow2 = 1;
  pow2 <<= std::abs(exponent);
  if (exponent >= 0) return q * Rational(pow2);
  return q / Rational(pow2);
}

}  // namespace prepmark
