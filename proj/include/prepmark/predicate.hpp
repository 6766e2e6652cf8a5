#pragma once

#include <memory>
#include <set>
#include <string>
#include <string_view>

#include "prepmark/expr.hpp"

namespace prepmark {

// Tolerance applied to comparisons when either operand is floating point.
inline constexpr double kPredicateTolerance = 1e-9;

/// Boolean condition over submitted bindings, used by constraint graders.
///
/// Grammar:
///   pred    := conj (('or' | '||') conj)*
///   conj    := unary (('and' | '&&') unary)*
///   unary   := ('not' | '!') unary | '(' pred ')' | builtin | compare
///   compare := expr ('=' | '!=' | '<' | '<=' | '>' | '>=') expr
///   builtin := 'no_solution_2x2' '(' expr (',' expr){5} ')'
///
/// no_solution_2x2(a1,b1,c1,a2,b2,c2) holds when the system
/// a1 x + b1 y = c1, a2 x + b2 y = c2 is inconsistent, i.e. the coefficient
/// matrix has lower rank than the augmented matrix.
class Predicate {
 public:
  static Predicate parse(std::string_view text);

  const std::string& source() const { return source_; }
  const std::set<std::string>& variables() const { return variables_; }

  // Exact for rational operands, kPredicateTolerance otherwise.
  bool evaluate(const ExactBindings& bindings) const;

  struct Node;

 private:
  std::string source_;
  std::set<std::string> variables_;
  std::shared_ptr<const Node> root_;
};

// Rank comparison behind no_solution_2x2, exposed for tests.
bool linear_system_inconsistent(const Scalar& a1, const Scalar& b1, const Scalar& c1,
                                const Scalar& a2, const Scalar& b2, const Scalar& c2);

}  // namespace prepmark
