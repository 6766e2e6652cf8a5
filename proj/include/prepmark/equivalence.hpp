#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prepmark/expr.hpp"

namespace prepmark {

struct Interval {
  double lo = -5.0;
  double hi = 5.0;
};

struct SamplingConfig {
  int point_count = 8;
  Interval domain;                                   // default for every variable
  std::map<std::string, Interval> variable_domains;  // per-variable overrides
  double pole_guard = 0.05;
  double relative_tolerance = 1e-9;
  int max_resamples = 50;
  std::uint64_t rng_seed = 0x5eed5eed5eedULL;

  // Throws InvalidSpec unless point_count >= 4, relative_tolerance > 0,
  // every interval is non-empty and max_resamples >= 0.
  void validate() const;
};

// Roots of denominators, ln arguments and negative-power bases that are
// univariate polynomials of degree 1 or 2, keyed by variable. Sample points
// within pole_guard of a candidate are redrawn.
std::map<std::string, std::vector<double>> pole_candidates(const Expr& e);

/// Numeric identity test by random evaluation.
///
/// Draws points deterministically from cfg.rng_seed over the union of free
/// variables of a and b and requires
/// |a - b| <= relative_tolerance * max(1, |a|, |b|) at point_count points.
/// Points where either side is non-finite are redrawn; more than
/// max_resamples such failures raises InsufficientSamples.
bool equivalent(const Expr& a, const Expr& b, const SamplingConfig& cfg = {});

// splitmix64 finalizer, used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a over the bytes of text.
std::uint64_t hash64(std::string_view text);

// Uniform double in [0, 1) from 53 high bits; portable across standard
// libraries, unlike std::uniform_real_distribution.
double unit_interval(std::uint64_t bits);

}  // namespace prepmark
