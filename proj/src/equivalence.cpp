#include "prepmark/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "prepmark/error.hpp"
#include "prepmark/polynomial.hpp"

namespace prepmark {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

void SamplingConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(errc::kInvalidSpec, "sampling: " + what); };
  if (point_count < 4) bad("point_count must be at least 4");
  if (!(relative_tolerance > 0)) bad("relative_tolerance must be positive");
  if (max_resamples < 0) bad("max_resamples must be non-negative");
  if (!(pole_guard >= 0)) bad("pole_guard must be non-negative");
  if (!(domain.lo < domain.hi)) bad("empty domain");
  for (const auto& [name, iv] : variable_domains) {
    if (!(iv.lo < iv.hi)) bad("empty domain for " + name);
  }
}

namespace {

void collect_singular_subexpressions(const Expr& e, std::vector<Expr>& out) {
  e.visit(overloaded{
      [](const Number&) {},
      [](const Variable&) {},
      [](const Constant&) {},
      [&](const Negate& n) { collect_singular_subexpressions(n.operand, out); },
      [&](const Binary& b) {
        if (b.op == BinaryOp::Div) out.push_back(b.rhs);
        if (b.op == BinaryOp::Pow) {
          // negative or fractional exponents are singular at base zero
          bool plain = false;
          if (const auto* n = std::get_if<Number>(&b.rhs.node().value)) {
            if (const auto* q = std::get_if<Rational>(&n->value)) plain = is_integer(*q) && *q >= 0;
          }
          if (!plain) out.push_back(b.lhs);
        }
        collect_singular_subexpressions(b.lhs, out);
        collect_singular_subexpressions(b.rhs, out);
      },
      [&](const Call& c) {
        if (c.fn == Function::Ln) out.push_back(c.argument);
        collect_singular_subexpressions(c.argument, out);
      },
  });
}

void add_roots(const Polynomial& p, std::map<std::string, std::vector<double>>& out) {
  std::string var;
  unsigned degree = 0;
  for (const auto& [m, c] : p.terms()) {
    if (m.size() > 1) return;
    if (m.size() == 1) {
      if (!var.empty() && var != m[0].first) return;
      var = m[0].first;
      degree = std::max(degree, m[0].second);
    }
  }
  if (var.empty() || degree > 2) return;
  auto coeff = [&](unsigned k) {
    Monomial m;
    if (k > 0) m.emplace_back(var, k);
    auto it = p.terms().find(m);
    return it == p.terms().end() ? 0.0 : to_double(it->second);
  };
  auto& roots = out[var];
  if (degree == 1) {
    roots.push_back(-coeff(0) / coeff(1));
    return;
  }
  const double a = coeff(2), b = coeff(1), c = coeff(0);
  const double disc = b * b - 4 * a * c;
  if (disc < 0) return;
  const double s = std::sqrt(disc);
  roots.push_back((-b + s) / (2 * a));
  roots.push_back((-b - s) / (2 * a));
}

}  // namespace

std::map<std::string, std::vector<double>> pole_candidates(const Expr& e) {
  std::vector<Expr> singular;
  collect_singular_subexpressions(e, singular);
  std::map<std::string, std::vector<double>> out;
  for (const Expr& s : singular) {
    try {
      add_roots(to_polynomial_nf(s), out);
    } catch (const Error&) {
      // not a low-degree univariate polynomial; rely on resampling
    }
  }
  return out;
}

bool equivalent(const Expr& a, const Expr& b, const SamplingConfig& cfg) {
  cfg.validate();
  std::set<std::string> vars = free_variables(a);
  vars.merge(free_variables(b));

  auto poles = pole_candidates(a);
  for (auto& [v, roots] : pole_candidates(b)) {
    auto& dst = poles[v];
    dst.insert(dst.end(), roots.begin(), roots.end());
  }

  std::mt19937_64 rng(cfg.rng_seed);
  auto draw = [&](const std::string& var) {
    auto it = cfg.variable_domains.find(var);
    const Interval iv = it == cfg.variable_domains.end() ? cfg.domain : it->second;
    const auto pit = poles.find(var);
    for (int guard_tries = 0;; ++guard_tries) {
      double x = iv.lo + (iv.hi - iv.lo) * unit_interval(rng());
      if (pit == poles.end() || guard_tries >= 1000) return x;
      bool near = std::any_of(pit->second.begin(), pit->second.end(),
                              [&](double r) { return std::fabs(x - r) < cfg.pole_guard; });
      if (!near) return x;
    }
  };

  int valid = 0;
  int failures = 0;
  Bindings point;
  while (valid < cfg.point_count) {
    for (const auto& v : vars) point[v] = draw(v);
    double va = 0;
    double vb = 0;
    try {
      va = evaluate(a, point);
      vb = evaluate(b, point);
    } catch (const Error& err) {
      if (err.code() != errc::kNonFiniteResult) throw;
      if (++failures > cfg.max_resamples) {
        throw Error(errc::kInsufficientSamples,
                    "could not find enough points where both expressions are defined");
      }
      continue;
    }
    const double scale = std::max({1.0, std::fabs(va), std::fabs(vb)});
    if (std::fabs(va - vb) > cfg.relative_tolerance * scale) return false;
    ++valid;
  }
  return true;
}

}  // namespace prepmark
