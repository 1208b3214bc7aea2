#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace sqmean {

// Neumaier-compensated accumulator. Exact enough that sums over supports of
// a million points stay well inside the 1e-12 tolerances used by the tests.
class CompensatedSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// A probability distribution with finite support on the real line.
// Support points are strictly increasing; duplicates passed to the
// constructor are merged and their weights summed. Weights must be
// nonnegative and are renormalized to sum to exactly 1 at construction.
class FiniteDistribution {
public:
    FiniteDistribution(std::vector<double> support, std::vector<double> weights);

    static FiniteDistribution point_mass(double x) { return {{x}, {1.0}}; }

    std::size_t size() const { return support_.size(); }
    const std::vector<double>& support() const { return support_; }
    const std::vector<double>& weights() const { return weights_; }
    double min_value() const { return support_.front(); }
    double max_value() const { return support_.back(); }

    bool same_support(const FiniteDistribution& other) const;

private:
    std::vector<double> support_;
    std::vector<double> weights_;
};

using DistPtr = std::shared_ptr<const FiniteDistribution>;

// A real-valued function on the support of a fixed distribution, carrying a
// declared range [lo, hi] that must contain every value. Estimators scale
// and threshold through the declared range, never through the exact values,
// so the declared range is part of the problem statement (a deliberately
// loose range is how the range-anxiety experiments are set up).
class Query {
public:
    Query(DistPtr dist, std::vector<double> values, double declared_lo, double declared_hi);

    static Query identity(DistPtr dist);
    static Query identity(DistPtr dist, double declared_lo, double declared_hi);

    // Derived query on the same distribution.
    Query with_values(std::vector<double> values, double declared_lo, double declared_hi) const;

    const FiniteDistribution& dist() const { return *dist_; }
    const DistPtr& dist_ptr() const { return dist_; }
    const std::vector<double>& values() const { return values_; }
    double declared_lo() const { return lo_; }
    double declared_hi() const { return hi_; }

    bool bound_to(const FiniteDistribution& d) const;
    bool boolean_valued() const;

private:
    DistPtr dist_;
    std::vector<double> values_;
    double lo_;
    double hi_;
};

struct Moments {
    double mean = 0.0;
    double second_moment = 0.0;
    double variance = 0.0;  // second_moment - mean^2, clamped at 0
    double std_dev = 0.0;
};

// Symmetric truncation of z to [-a, a], and what it cuts off.
// clamp(z, a) + residual(z, a) recomposes z exactly whenever any double
// residual can. The exception is a round-to-even tie between the lattices of
// z and clamp(z, a); there every candidate sum straddles z by half an ulp and
// rounds to the even neighbor, so the recomposition misses by one ulp of z.
double clamp(double z, double a);
double residual(double z, double a);

// Exact moments of q under its distribution, compensated summation throughout.
Moments exact_moments(const Query& q);

// Exact Pr[q >= t] (or Pr[q > t] when strict).
double exact_tail(const Query& q, double t, bool strict = false);

// Rounds every value down to a multiple of `step` after capping it at `cap`:
// v -> step * floor(min(v, cap) / step). Requires nonnegative values.
// The result has declared range [0, cap] and at most ceil(cap/step) + 1
// distinct values.
Query discretize_round_down(const Query& q, double step, double cap);

// Text format: one "value weight" pair per line, '#' starts a comment.
// Weights are renormalized on load.
FiniteDistribution load_distribution(const std::string& path);

}  // namespace sqmean
