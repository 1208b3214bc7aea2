#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqmean/distribution.hpp"
#include "sqmean/oracles.hpp"

namespace sqmean {

// Outcome of one estimation run. realized_error compares against the exact
// mean (the simulator knows it); theoretical_bound is the guarantee the
// estimator promises for any oracle that honors its tolerance contract.
struct EstimateReport {
    double value = 0.0;
    double true_value = 0.0;
    double realized_error = 0.0;
    double theoretical_bound = 0.0;
    std::uint64_t queries_used = 0;
    std::uint64_t oracle_parameter = 0;
    std::string notes;
};

struct QuantileResult {
    double point = 0.0;
    double tail_at_point = 0.0;         // exact Pr[q >= point]
    double strict_tail_at_point = 0.0;  // exact Pr[q >  point]
    std::uint64_t queries_used = 0;
};

struct VectorEstimateReport {
    std::vector<double> estimate;
    std::vector<double> true_mean;
    double l2_error = 0.0;
    double theoretical_bound = 0.0;
    std::uint64_t queries_used = 0;
    std::uint64_t oracle_parameter = 0;  // per-coordinate parameter
};

// One threshold test of a quantile binary search, for bracket audits.
struct SearchStep {
    double point = 0.0;
    double estimate = 0.0;
    bool passed = false;
};
using SearchTrace = std::vector<SearchStep>;

// Factory per coordinate for vector estimation.
using VectorOracleFactory =
    std::function<OracleFactory(std::size_t coord, const DistPtr& dist)>;

// Single-query estimate through the declared range: asks for the mean of
// (q - lo) / (hi - lo) and rescales. Error grows with the declared range
// width, which is exactly the failure mode the other estimators remove.
EstimateReport naive_mean(SqOracle& oracle, const Query& q);

// Mean of a nonnegative query with declared range [0, R] out of one query
// per dyadic scale: level i asks for 2^(i-1) * u * 1{u in (2^-i, 2^-i+1]}
// where u = q/R, and the estimate is R * sum_i 2^(-i+1) * v_i. Exactly
// floor(log2(n)) non-adaptive queries (or `levels` if nonzero); the error is
// at most 4R/n + 2*sqrt(E[q^2])*log2(n)/sqrt(n).
EstimateReport dyadic_mean(SqOracle& oracle, const Query& q, std::uint64_t levels = 0);

// Mean of a nonnegative query with E[q^2] <= B^2 to within eps, for
// eps <= B/16. Truncates at 4B^2/eps and runs a level-capped dyadic
// decomposition against an oracle with parameter ceil((8B*log2(B/eps)/eps)^2).
// Non-adaptive; at most 3*log2(B/eps) queries.
EstimateReport known_bound_mean(const OracleFactory& factory, const Query& q, double B,
                                double eps);

// Largest point a of q's value set whose threshold estimate stays above
// p - delta/2, located by binary search. For any oracle honoring the
// tolerance contract with parameter at least 4p/delta^2, the result
// satisfies Pr[q >= a] >= p - delta and Pr[q > a] < p. Requires p >= 2*delta.
QuantileResult quantile_search(SqOracle& oracle, const Query& q, double p, double delta,
                               SearchTrace* trace = nullptr);

// quantile_search at p = 16/n, delta = 8/n, where 4p/delta^2 = n exactly:
// finds a with Pr[q >= a] >= 8/n and Pr[q > a] < 16/n. Requires n >= 32.
QuantileResult tail_quantile(SqOracle& oracle, const Query& q, std::uint64_t n);

// Quantile search over the lattice {k*zeta} covering q's declared range
// instead of q's value set: returns a lattice point a with
// Pr[q >= a] >= p - delta and Pr[q >= a + zeta] < p.
QuantileResult grid_quantile(SqOracle& oracle, const Query& q, double zeta, double p,
                             double delta, SearchTrace* trace = nullptr);

// Point a with Pr[q >= a] >= 1/3 and Pr[q <= a] >= 1/2: quantile_search at
// p = 1/2, delta = 1/6 (oracle parameter 72).
QuantileResult approximate_median(SqOracle& oracle, const Query& q);

// Mean of a nonnegative query with E[q^2] <= B^2, unknown otherwise.
// Discretizes to multiples of zeta/2 capped at 2B/zeta, finds a tail cutoff
// with tail_quantile, clamps there and finishes with dyadic_mean. Error at
// most 2*sqrt(E[q^2])*log2(8n)/sqrt(n) + zeta. Requires n >= 32.
EstimateReport nonneg_mean(const OracleFactory& factory, const Query& q, std::uint64_t n,
                           double zeta, double B);

// Mean of a signed query with E[q^2] <= B^2: recenters at an approximate
// median a, splits into the nonnegative parts of q - a and a - q, estimates
// both with nonneg_mean at precision zeta/2 and bound B + |a|, and returns
// a + v_plus - v_minus. Error at most 8*sigma*log2(8n)/sqrt(n) + zeta where
// sigma is the true standard deviation. Requires n >= 32.
EstimateReport signed_mean(const OracleFactory& factory, const Query& q, std::uint64_t n,
                           double zeta, double B);

// signed_mean with the parameter n picked as the smallest value >= 32 for
// which 8*log2(8n)/sqrt(n) <= eps, hence error at most eps*sigma + zeta.
EstimateReport relative_accuracy_mean(const OracleFactory& factory, const Query& q,
                                      double eps, double zeta, double B);

// Coordinate-wise mean of a product distribution given as per-coordinate
// marginals. Requires total variance <= 1 and total second moment <= B^2.
// Runs relative_accuracy_mean per coordinate with relative accuracy eps/2
// and additive precision eps/(2*sqrt(d)); the estimate vector lands within
// l2 distance eps of the true mean vector.
VectorEstimateReport vector_mean(const std::vector<DistPtr>& coords, double eps, double B,
                                 const VectorOracleFactory& factories);

}  // namespace sqmean
