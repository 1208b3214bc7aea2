#pragma once

#include <nlohmann/json.hpp>

#include "sqmean/distribution.hpp"

namespace sqmean {

// Exactly computable test distributions. The discretized families tile the
// real line with cells of width `step`, assign each cell's probability mass
// to its midpoint (lattice point for the gaussian), and lump everything
// beyond `cap` into the boundary point, so moments and tails of the result
// are exact finite sums.

FiniteDistribution uniform_grid(double lo, double hi, std::size_t count);
FiniteDistribution two_point(double lo, double hi, double p_hi);
// point masses come from FiniteDistribution::point_mass

FiniteDistribution discretized_gaussian(double mean, double sigma, double step, double cap);
FiniteDistribution discretized_lognormal(double mu, double sigma, double step, double cap);
// Pareto tail index alpha must exceed 2 so the second moment exists.
FiniteDistribution discretized_pareto(double alpha, double x_min, double step, double cap);

// Dispatch on {"kind": ...}. Kinds: uniform-grid(lo, hi, count),
// two-point(lo, hi, p), point-mass(value), discretized-gaussian(mean, sigma,
// step, cap), discretized-lognormal(mu, sigma, step, cap),
// discretized-pareto(alpha, x_min, step, cap), empirical-file(path).
FiniteDistribution generate_distribution(const nlohmann::json& spec);

}  // namespace sqmean
