#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace prepmark {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// "3", "-7", "3/2"
std::string to_string(const Rational& q);

// Exact decimal text when the denominator has only factors 2 and 5
// ("0.25", "-1.5"), otherwise nullopt.
std::optional<std::string> to_decimal_string(const Rational& q);

double to_double(const Rational& q);

bool is_integer(const Rational& q);

// Parses "12", "-3", "2/3", "0.125". Returns nullopt on anything else.
std::optional<Rational> parse_rational(std::string_view text);

// Exact rational for a finite double (every double is a dyadic rational).
Rational rational_from_double(double v);

}  // namespace prepmark
