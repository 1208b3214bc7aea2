#include "sqmean/estimators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <stdexcept>

namespace sqmean {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

std::uint64_t floor_log2(std::uint64_t n) {
    return static_cast<std::uint64_t>(std::bit_width(n)) - 1;
}

double min_value(const Query& q) {
    return *std::min_element(q.values().begin(), q.values().end());
}

std::string note(const char* fmt, ...) {
    char buf[160];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return buf;
}

bool degenerate_range(const Query& q) { return q.declared_lo() == q.declared_hi(); }

// A query whose declared range is a single point can only be that constant;
// every estimator returns it exactly without spending queries.
EstimateReport exact_report(const Query& q, std::uint64_t parameter) {
    EstimateReport r;
    r.value = q.declared_lo();
    r.true_value = exact_moments(q).mean;
    r.realized_error = std::abs(r.value - r.true_value);
    r.theoretical_bound = 0.0;
    r.queries_used = 0;
    r.oracle_parameter = parameter;
    r.notes = "degenerate declared range";
    return r;
}

Query threshold_indicator(const Query& q, double t) {
    std::vector<double> v(q.values().size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = q.values()[i] >= t ? 1.0 : 0.0;
    return q.with_values(std::move(v), 0.0, 1.0);
}

void check_second_moment(const Query& q, double B, const char* who) {
    double second = exact_moments(q).second_moment;
    if (second > B * B * (1.0 + 1e-12))
        throw std::invalid_argument(std::string(who) + ": E[q^2] exceeds the declared bound B^2");
}

// Core of quantile_search / grid_quantile: binary search for the last
// passing point among hypotheses(0..count-1), where hypothesis 0 is known to
// pass without being asked (its exact tail is 1, and any contract-compliant
// answer at p = 1 stays above the acceptance line) and a virtual hypothesis
// `count` counts as failed.
template <typename PointAt>
std::size_t bracket_search(SqOracle& oracle, const Query& q, double accept_line,
                           std::size_t count, PointAt point_at, SearchTrace* trace) {
    std::size_t lo = 0;
    std::size_t hi = count;
    while (hi - lo > 1) {
        std::size_t mid = lo + (hi - lo) / 2;
        double est = oracle.answer(threshold_indicator(q, point_at(mid)));
        bool passed = est >= accept_line;
        if (trace) trace->push_back({point_at(mid), est, passed});
        (passed ? lo : hi) = mid;
    }
    return lo;
}

void check_quantile_args(const SqOracle& oracle, double p, double delta) {
    require(delta > 0.0, "quantile: delta must be positive");
    require(p <= 1.0, "quantile: p must be at most 1");
    require(p >= 2.0 * delta, "quantile: p must be at least 2*delta");
    double needed = 4.0 * p / (delta * delta);
    require(static_cast<double>(oracle.parameter()) >= needed * (1.0 - 1e-9),
            "quantile: oracle parameter below 4p/delta^2");
}

QuantileResult finish_quantile(const Query& q, double point, std::uint64_t queries) {
    QuantileResult r;
    r.point = point;
    r.tail_at_point = exact_tail(q, point, false);
    r.strict_tail_at_point = exact_tail(q, point, true);
    r.queries_used = queries;
    return r;
}

Query clamp_upper(const Query& q, double a) {
    std::vector<double> v(q.values().size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::min(q.values()[i], a);
    return q.with_values(std::move(v), 0.0, a);
}

std::uint64_t checked_param(double x, const char* who) {
    require(x >= 1.0 && x < 9.0e18, std::string(who) + ": oracle parameter out of range");
    return static_cast<std::uint64_t>(std::ceil(x));
}

}  // namespace

EstimateReport naive_mean(SqOracle& oracle, const Query& q) {
    double lo = q.declared_lo();
    double hi = q.declared_hi();
    Moments m = exact_moments(q);
    if (degenerate_range(q)) return exact_report(q, oracle.parameter());

    double span = hi - lo;
    std::vector<double> scaled(q.values().size());
    for (std::size_t i = 0; i < scaled.size(); ++i)
        scaled[i] = std::clamp((q.values()[i] - lo) / span, 0.0, 1.0);
    std::uint64_t before = oracle.ledger().queries_asked;
    double v = oracle.answer(q.with_values(std::move(scaled), 0.0, 1.0));

    EstimateReport r;
    r.value = lo + span * v;
    r.true_value = m.mean;
    r.realized_error = std::abs(r.value - r.true_value);
    double p = std::clamp((m.mean - lo) / span, 0.0, 1.0);
    r.theoretical_bound = span * vstat_tolerance(p, oracle.parameter());
    r.queries_used = oracle.ledger().queries_asked - before;
    r.oracle_parameter = oracle.parameter();
    return r;
}

EstimateReport dyadic_mean(SqOracle& oracle, const Query& q, std::uint64_t levels) {
    require(min_value(q) >= 0.0, "dyadic_mean: values must be nonnegative");
    std::uint64_t n = oracle.parameter();
    require(n >= 2, "dyadic_mean: oracle parameter must be at least 2");
    if (degenerate_range(q)) return exact_report(q, n);

    double R = q.declared_hi();
    Moments m = exact_moments(q);
    std::uint64_t t = levels > 0 ? levels : floor_log2(n);
    std::uint64_t before = oracle.ledger().queries_asked;

    CompensatedSum acc;
    for (std::uint64_t i = 1; i <= t; ++i) {
        double lower = std::ldexp(1.0, -static_cast<int>(i));
        double upper = 2.0 * lower;
        double scale = 0.5 / lower;  // 2^(i-1), exact
        std::vector<double> level(q.values().size(), 0.0);
        for (std::size_t j = 0; j < level.size(); ++j) {
            double u = q.values()[j] / R;
            if (u > lower && u <= upper) level[j] = scale * u;  // lands in (1/2, 1]
        }
        double v = oracle.answer(q.with_values(std::move(level), 0.0, 1.0));
        acc.add(2.0 * lower * v);  // 2^(-i+1) * v_i
    }

    EstimateReport r;
    r.value = R * acc.value();
    r.true_value = m.mean;
    r.realized_error = std::abs(r.value - r.true_value);
    double nn = static_cast<double>(n);
    r.theoretical_bound =
        4.0 * R / nn + 2.0 * std::sqrt(m.second_moment) * std::log2(nn) / std::sqrt(nn);
    r.queries_used = oracle.ledger().queries_asked - before;
    r.oracle_parameter = n;
    r.notes = note("levels=%llu R=%.6g", static_cast<unsigned long long>(t), R);
    return r;
}

EstimateReport known_bound_mean(const OracleFactory& factory, const Query& q, double B,
                                double eps) {
    require(B > 0.0, "known_bound_mean: B must be positive");
    require(eps > 0.0 && eps <= B / 16.0, "known_bound_mean: eps must lie in (0, B/16]");
    require(min_value(q) >= 0.0, "known_bound_mean: values must be nonnegative");
    check_second_moment(q, B, "known_bound_mean");
    if (degenerate_range(q)) return exact_report(q, 0);

    double L = std::log2(B / eps);  // >= 4
    std::uint64_t n = checked_param(std::pow(8.0 * B * L / eps, 2.0), "known_bound_mean");

    // Truncating at a keeps the loss under eps/4; capping the level count at
    // t keeps the skipped scales under another eps/4 (or eps/2 when the
    // query budget forces the smaller cap) while staying within 3L queries.
    double a = 4.0 * B * B / eps;
    std::uint64_t t = static_cast<std::uint64_t>(
        std::min(std::floor(3.0 * L + 1e-9), std::ceil(2.0 * L - 1e-9) + 4.0));

    auto oracle = factory(n);
    EstimateReport inner = dyadic_mean(*oracle, clamp_upper(q, a), t);

    EstimateReport r;
    r.value = inner.value;
    r.true_value = exact_moments(q).mean;
    r.realized_error = std::abs(r.value - r.true_value);
    r.theoretical_bound = eps;
    r.queries_used = oracle->ledger().queries_asked;
    r.oracle_parameter = n;
    r.notes = note("levels=%llu cutoff=%.6g", static_cast<unsigned long long>(t), a);
    return r;
}

QuantileResult quantile_search(SqOracle& oracle, const Query& q, double p, double delta,
                               SearchTrace* trace) {
    check_quantile_args(oracle, p, delta);
    std::vector<double> z = q.values();
    std::sort(z.begin(), z.end());
    z.erase(std::unique(z.begin(), z.end()), z.end());

    std::uint64_t before = oracle.ledger().queries_asked;
    std::size_t lo = bracket_search(
        oracle, q, p - delta / 2.0, z.size(), [&](std::size_t i) { return z[i]; }, trace);
    return finish_quantile(q, z[lo], oracle.ledger().queries_asked - before);
}

QuantileResult tail_quantile(SqOracle& oracle, const Query& q, std::uint64_t n) {
    require(n >= 32, "tail_quantile: n must be at least 32");
    require(oracle.parameter() == n, "tail_quantile: oracle parameter must equal n");
    double nn = static_cast<double>(n);
    return quantile_search(oracle, q, 16.0 / nn, 8.0 / nn);
}

QuantileResult grid_quantile(SqOracle& oracle, const Query& q, double zeta, double p,
                             double delta, SearchTrace* trace) {
    require(zeta > 0.0 && std::isfinite(zeta), "grid_quantile: zeta must be positive");
    check_quantile_args(oracle, p, delta);

    // Lattice {k*zeta} from just below the declared range to its top. The
    // bottom point is pinned at or below every value so the search bracket
    // starts valid; one past the top point exceeds every value.
    auto lattice_index = [&](double x) {
        return static_cast<long long>(std::floor(x / zeta));
    };
    long long kmin = lattice_index(q.declared_lo());
    if (static_cast<double>(kmin) * zeta > q.declared_lo()) --kmin;
    long long kmax = lattice_index(q.declared_hi());
    while (static_cast<double>(kmax + 1) * zeta <= q.declared_hi()) ++kmax;
    std::size_t count = static_cast<std::size_t>(kmax - kmin + 1);

    std::uint64_t before = oracle.ledger().queries_asked;
    std::size_t lo = bracket_search(
        oracle, q, p - delta / 2.0, count,
        [&](std::size_t i) { return static_cast<double>(kmin + static_cast<long long>(i)) * zeta; },
        trace);
    double point = static_cast<double>(kmin + static_cast<long long>(lo)) * zeta;
    return finish_quantile(q, point, oracle.ledger().queries_asked - before);
}

QuantileResult approximate_median(SqOracle& oracle, const Query& q) {
    return quantile_search(oracle, q, 0.5, 1.0 / 6.0);
}

EstimateReport nonneg_mean(const OracleFactory& factory, const Query& q, std::uint64_t n,
                           double zeta, double B) {
    require(n >= 32, "nonneg_mean: n must be at least 32");
    require(zeta > 0.0, "nonneg_mean: zeta must be positive");
    require(B > 0.0, "nonneg_mean: B must be positive");
    require(min_value(q) >= 0.0, "nonneg_mean: values must be nonnegative");
    check_second_moment(q, B, "nonneg_mean");
    if (degenerate_range(q)) return exact_report(q, 0);

    Query psi = discretize_round_down(q, zeta / 2.0, 2.0 * B / zeta);
    auto oracle = factory(n);
    QuantileResult cutoff = tail_quantile(*oracle, psi, n);
    EstimateReport inner = dyadic_mean(*oracle, clamp_upper(psi, cutoff.point));

    Moments m = exact_moments(q);
    double nn = static_cast<double>(n);
    EstimateReport r;
    r.value = inner.value;
    r.true_value = m.mean;
    r.realized_error = std::abs(r.value - r.true_value);
    r.theoretical_bound =
        2.0 * std::sqrt(m.second_moment) * std::log2(8.0 * nn) / std::sqrt(nn) + zeta;
    r.queries_used = oracle->ledger().queries_asked;
    r.oracle_parameter = n;
    r.notes = note("cutoff=%.6g", cutoff.point);
    return r;
}

EstimateReport signed_mean(const OracleFactory& factory, const Query& q, std::uint64_t n,
                           double zeta, double B) {
    require(n >= 32, "signed_mean: n must be at least 32");
    require(zeta > 0.0, "signed_mean: zeta must be positive");
    require(B > 0.0, "signed_mean: B must be positive");
    check_second_moment(q, B, "signed_mean");
    if (degenerate_range(q)) return exact_report(q, 0);

    // Recentering point: approximate median of q discretized symmetrically
    // (round toward zero, cap at 2B/zeta) so its value set stays finite and
    // lattice-aligned.
    double step = zeta / 4.0;
    double cap = 2.0 * B / zeta;
    std::vector<double> sym(q.values().size());
    for (std::size_t i = 0; i < sym.size(); ++i) {
        double v = q.values()[i];
        double mag = step * std::floor(std::min(std::abs(v), cap) / step);
        sym[i] = v < 0.0 ? -mag : mag;
    }
    auto med_oracle = factory(72);
    QuantileResult med = approximate_median(*med_oracle, q.with_values(std::move(sym), -cap, cap));
    double a = med.point;

    std::vector<double> up(q.values().size()), down(q.values().size());
    for (std::size_t i = 0; i < up.size(); ++i) {
        up[i] = std::max(q.values()[i] - a, 0.0);
        down[i] = std::max(a - q.values()[i], 0.0);
    }
    double Bshift = B + std::abs(a);
    EstimateReport plus = nonneg_mean(
        factory, q.with_values(std::move(up), 0.0, std::max(q.declared_hi() - a, 0.0)), n,
        zeta / 2.0, Bshift);
    EstimateReport minus = nonneg_mean(
        factory, q.with_values(std::move(down), 0.0, std::max(a - q.declared_lo(), 0.0)), n,
        zeta / 2.0, Bshift);

    Moments m = exact_moments(q);
    double nn = static_cast<double>(n);
    EstimateReport r;
    r.value = a + plus.value - minus.value;
    r.true_value = m.mean;
    r.realized_error = std::abs(r.value - r.true_value);
    r.theoretical_bound = 8.0 * m.std_dev * std::log2(8.0 * nn) / std::sqrt(nn) + zeta;
    r.queries_used =
        med_oracle->ledger().queries_asked + plus.queries_used + minus.queries_used;
    r.oracle_parameter = n;
    r.notes = note("median=%.6g shifted_bound=%.6g", a, Bshift);
    return r;
}

EstimateReport relative_accuracy_mean(const OracleFactory& factory, const Query& q,
                                      double eps, double zeta, double B) {
    require(eps > 0.0 && eps < 1.0, "relative_accuracy_mean: eps must lie in (0, 1)");
    require(zeta > 0.0, "relative_accuracy_mean: zeta must be positive");
    require(B > zeta, "relative_accuracy_mean: B must exceed zeta");

    // Smallest n >= 32 with 8*log2(8n)/sqrt(n) <= eps; the left side is
    // decreasing in n, so a doubling scan plus bisection finds it.
    auto relative_term = [](std::uint64_t n) {
        double nn = static_cast<double>(n);
        return 8.0 * std::log2(8.0 * nn) / std::sqrt(nn);
    };
    std::uint64_t n = 32;
    if (relative_term(n) > eps) {
        std::uint64_t lo = 32, hi = 64;
        while (relative_term(hi) > eps) {
            require(hi < (1ULL << 62), "relative_accuracy_mean: eps too small");
            lo = hi;
            hi *= 2;
        }
        while (hi - lo > 1) {
            std::uint64_t mid = lo + (hi - lo) / 2;
            (relative_term(mid) > eps ? lo : hi) = mid;
        }
        n = hi;
    }

    EstimateReport r = signed_mean(factory, q, n, zeta, B);
    r.theoretical_bound = eps * exact_moments(q).std_dev + zeta;
    r.notes = note("n=%llu %s", static_cast<unsigned long long>(n), r.notes.c_str());
    return r;
}

VectorEstimateReport vector_mean(const std::vector<DistPtr>& coords, double eps, double B,
                                 const VectorOracleFactory& factories) {
    require(!coords.empty(), "vector_mean: at least one coordinate required");
    require(eps > 0.0, "vector_mean: eps must be positive");
    require(B > eps, "vector_mean: B must exceed eps");

    double total_var = 0.0, total_second = 0.0;
    for (const auto& d : coords) {
        require(d != nullptr, "vector_mean: null coordinate distribution");
        Moments m = exact_moments(Query::identity(d));
        total_var += m.variance;
        total_second += m.second_moment;
    }
    require(total_var <= 1.0 + 1e-9, "vector_mean: total variance must be at most 1");
    require(total_second <= B * B * (1.0 + 1e-12),
            "vector_mean: total second moment exceeds B^2");

    double d = static_cast<double>(coords.size());
    double zeta = eps / (2.0 * std::sqrt(d));
    VectorEstimateReport out;
    CompensatedSum sq_err;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        Query qi = Query::identity(coords[i]);
        EstimateReport ri =
            relative_accuracy_mean(factories(i, coords[i]), qi, eps / 2.0, zeta, B);
        out.estimate.push_back(ri.value);
        out.true_mean.push_back(ri.true_value);
        out.queries_used += ri.queries_used;
        out.oracle_parameter = ri.oracle_parameter;
        double e = ri.value - ri.true_value;
        sq_err.add(e * e);
    }
    out.l2_error = std::sqrt(std::max(sq_err.value(), 0.0));
    out.theoretical_bound = eps;
    return out;
}

}  // namespace sqmean
