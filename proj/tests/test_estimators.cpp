#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sqmean/distribution.hpp"
#include "sqmean/estimators.hpp"
#include "sqmean/generators.hpp"
#include "sqmean/oracles.hpp"
#include "sqmean/rng.hpp"

using namespace sqmean;

namespace {

constexpr OraclePolicy kAllPolicies[] = {
    OraclePolicy::HonestExact,
    OraclePolicy::AdversarialUp,
    OraclePolicy::AdversarialDown,
    OraclePolicy::AdversarialRandomSign,
};

DistPtr share(FiniteDistribution d) {
    return std::make_shared<FiniteDistribution>(std::move(d));
}

DistPtr random_dist(std::mt19937_64& gen, std::size_t min_points, std::size_t max_points,
                    double lo, double hi) {
    std::size_t count = min_points + gen() % (max_points - min_points + 1);
    std::vector<double> support(count), weights(count);
    for (std::size_t i = 0; i < count; ++i) {
        support[i] = lo + (hi - lo) * uniform01(gen);
        weights[i] = 0.05 + uniform01(gen);
    }
    return std::make_shared<FiniteDistribution>(std::move(support), std::move(weights));
}

}  // namespace

TEST_CASE("naive mean scales the tolerance by the declared range") {
    auto d = share(FiniteDistribution::point_mass(5.0));
    Query q = Query::identity(d, 0.0, 10.0);

    VstatOracle honest(d, 100, OraclePolicy::HonestExact);
    EstimateReport h = naive_mean(honest, q);
    CHECK(h.value == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(h.realized_error == doctest::Approx(0.0));
    CHECK(h.queries_used == 1);

    VstatOracle adv(d, 100, OraclePolicy::AdversarialUp);
    EstimateReport a = naive_mean(adv, q);
    CHECK(a.value == doctest::Approx(5.5).epsilon(1e-13));   // 10 * (0.5 + 0.05)
    CHECK(a.realized_error == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a.theoretical_bound == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a.realized_error <= a.theoretical_bound + 1e-12);
}

TEST_CASE("dyadic decomposition is exact for a point mass on a level") {
    auto d = share(FiniteDistribution::point_mass(0.3));
    Query q = Query::identity(d, 0.0, 1.0);
    VstatOracle oracle(d, 16, OraclePolicy::HonestExact);
    EstimateReport r = dyadic_mean(oracle, q);
    CHECK(r.value == 0.3);  // 0.3 sits in (1/4, 1/2]; halving is exact
    CHECK(r.queries_used == 4);
    CHECK(r.oracle_parameter == 16);
}

TEST_CASE("dyadic decomposition drops mass below the last level") {
    auto d = share(FiniteDistribution::point_mass(0.01));
    Query q = Query::identity(d, 0.0, 1.0);
    VstatOracle oracle(d, 16, OraclePolicy::HonestExact);
    EstimateReport r = dyadic_mean(oracle, q);
    CHECK(r.value == 0.0);  // 0.01 < 2^-4
    CHECK(r.realized_error == doctest::Approx(0.01));
    CHECK(r.realized_error <= r.theoretical_bound);
}

TEST_CASE("dyadic estimate under an honest oracle equals the tail-restricted mean") {
    std::mt19937_64 gen(101);
    for (int trial = 0; trial < 30; ++trial) {
        auto d = random_dist(gen, 1, 100, 0.0, 1.0);
        Query q = Query::identity(d, 0.0, 1.0);
        std::uint64_t n = 64;
        VstatOracle oracle(d, n, OraclePolicy::HonestExact);
        EstimateReport r = dyadic_mean(oracle, q);

        double floor_level = std::ldexp(1.0, -6);  // 2^-floor(log2 64)
        CompensatedSum want;
        for (std::size_t i = 0; i < d->size(); ++i)
            if (d->support()[i] > floor_level) want.add(d->weights()[i] * d->support()[i]);
        CHECK(r.value == doctest::Approx(want.value()).epsilon(1e-12));
    }
}

TEST_CASE("dyadic bound holds for every policy and parameter") {
    std::mt19937_64 gen(103);
    for (int trial = 0; trial < 20; ++trial) {
        auto d = random_dist(gen, 1, 100, 0.0, 1.0);
        Query q = Query::identity(d, 0.0, 1.0);
        for (std::uint64_t n : {32ULL, 64ULL, 256ULL, 1024ULL, 4096ULL}) {
            for (OraclePolicy policy : kAllPolicies) {
                VstatOracle oracle(d, n, policy, gen());
                EstimateReport r = dyadic_mean(oracle, q);
                CHECK(r.realized_error <= r.theoretical_bound + 1e-12);
                CHECK(r.queries_used == static_cast<std::uint64_t>(std::log2(double(n))));
            }
        }
    }
}

TEST_CASE("dyadic level override and preconditions") {
    auto d = share(FiniteDistribution::point_mass(0.3));
    Query q = Query::identity(d, 0.0, 1.0);
    VstatOracle oracle(d, 1024, OraclePolicy::HonestExact);
    EstimateReport r = dyadic_mean(oracle, q, 3);
    CHECK(r.queries_used == 3);

    auto neg = share(two_point(-1.0, 1.0, 0.5));
    VstatOracle o2(neg, 64, OraclePolicy::HonestExact);
    CHECK_THROWS(dyadic_mean(o2, Query::identity(neg)));

    VstatOracle tiny(d, 1, OraclePolicy::HonestExact);
    CHECK_THROWS(dyadic_mean(tiny, q));
}

TEST_CASE("known-bound mean hits eps with the pinned parameter and budget") {
    std::mt19937_64 gen(107);
    const double B = 1.0;
    for (double eps : {B / 16.0, B / 32.0}) {
        double L = std::log2(B / eps);
        auto want_n = static_cast<std::uint64_t>(std::ceil(std::pow(8.0 * B * L / eps, 2.0)));
        auto budget = static_cast<std::uint64_t>(3.0 * L + 1e-9);
        for (int trial = 0; trial < 10; ++trial) {
            auto d = random_dist(gen, 1, 100, 0.0, 1.0);
            Query q = Query::identity(d, 0.0, 1.0);
            for (OraclePolicy policy : kAllPolicies) {
                EstimateReport r =
                    known_bound_mean(make_vstat_factory(d, policy, gen()), q, B, eps);
                CHECK(r.realized_error <= eps + 1e-12);
                CHECK(r.theoretical_bound == eps);
                CHECK(r.oracle_parameter == want_n);
                CHECK(r.queries_used <= budget);
            }
        }
    }
}

TEST_CASE("known-bound mean recovers an on-level point mass exactly") {
    // After truncation the dyadic levels run over (a 2^-t, a] with a = 4B^2/eps.
    // 0.5 / 64 = 2^-7 lands on a level boundary, so every step is a power of
    // two and the honest estimate reproduces the mass bit for bit.
    auto d = share(FiniteDistribution::point_mass(0.5));
    Query q = Query::identity(d, 0.0, 1.0);
    EstimateReport r = known_bound_mean(
        make_vstat_factory(d, OraclePolicy::HonestExact, 1), q, 1.0, 1.0 / 16.0);
    CHECK(r.value == 0.5);

    // Mass below a 2^-t is dropped entirely; the bound still covers it.
    auto tiny = share(FiniteDistribution::point_mass(0.01));
    Query qt = Query::identity(tiny, 0.0, 1.0);
    EstimateReport rt = known_bound_mean(
        make_vstat_factory(tiny, OraclePolicy::HonestExact, 1), qt, 1.0, 1.0 / 16.0);
    CHECK(rt.value == 0.0);
    CHECK(rt.realized_error == doctest::Approx(0.01));
    CHECK(rt.realized_error <= rt.theoretical_bound);
}

TEST_CASE("known-bound mean validates its arguments") {
    auto d = share(two_point(0.0, 2.0, 0.9));  // E[q^2] = 3.6
    Query q = Query::identity(d, 0.0, 2.0);
    OracleFactory f = make_vstat_factory(d, OraclePolicy::HonestExact, 1);
    CHECK_THROWS(known_bound_mean(f, q, 1.0, 1.0 / 16.0));   // second moment above B^2
    CHECK_THROWS(known_bound_mean(f, q, 2.0, 0.5));          // eps above B/16
    CHECK_THROWS(known_bound_mean(f, q, 2.0, 0.0));
}

TEST_CASE("quantile search on the eight-point uniform") {
    auto d = share(uniform_grid(1.0, 8.0, 8));
    Query q = Query::identity(d);
    VstatOracle oracle(d, 32, OraclePolicy::HonestExact);
    QuantileResult r = quantile_search(oracle, q, 0.5, 0.25);
    CHECK(r.point == 6.0);
    CHECK(r.tail_at_point == doctest::Approx(0.375).epsilon(1e-14));
    CHECK(r.strict_tail_at_point == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(r.queries_used == 3);
}

TEST_CASE("quantile search satisfies its contract under every policy") {
    std::mt19937_64 gen(109);
    for (int trial = 0; trial < 100; ++trial) {
        auto d = random_dist(gen, 1, 64, -2.0, 2.0);
        Query q = Query::identity(d);
        double delta = 0.05 + 0.2 * uniform01(gen);
        double p = 2.0 * delta + (1.0 - 2.0 * delta) * uniform01(gen);
        auto n = static_cast<std::uint64_t>(std::ceil(4.0 * p / (delta * delta)));
        for (OraclePolicy policy : kAllPolicies) {
            VstatOracle oracle(d, n, policy, gen());
            QuantileResult r = quantile_search(oracle, q, p, delta);
            CHECK(r.tail_at_point >= p - delta - 1e-12);
            CHECK(r.strict_tail_at_point < p + 1e-12);
        }
    }
}

TEST_CASE("quantile search trace shows a sound bracket") {
    std::mt19937_64 gen(113);
    auto d = random_dist(gen, 16, 64, 0.0, 1.0);
    Query q = Query::identity(d);
    VstatOracle oracle(d, 128, OraclePolicy::AdversarialRandomSign, 5);
    SearchTrace trace;
    QuantileResult r = quantile_search(oracle, q, 0.5, 1.0 / 8.0, &trace);
    CHECK(trace.size() == r.queries_used);
    for (const SearchStep& step : trace) {
        CHECK(step.passed == (step.estimate >= 0.5 - 1.0 / 16.0));
        if (step.passed) CHECK(step.point <= r.point);
        if (!step.passed) CHECK(step.point > r.point);
    }
}

TEST_CASE("quantile search validates its arguments") {
    auto d = share(uniform_grid(0.0, 1.0, 4));
    Query q = Query::identity(d);
    VstatOracle weak(d, 10, OraclePolicy::HonestExact);
    CHECK_THROWS(quantile_search(weak, q, 0.5, 0.1));  // parameter below 4p/delta^2
    VstatOracle ok(d, 1000, OraclePolicy::HonestExact);
    CHECK_THROWS(quantile_search(ok, q, 0.1, 0.2));    // p < 2*delta
    CHECK_THROWS(quantile_search(ok, q, 1.5, 0.2));
}

TEST_CASE("tail quantile pins its parameters") {
    auto d = share(uniform_grid(0.0, 1.0, 16));
    Query q = Query::identity(d);
    VstatOracle oracle(d, 64, OraclePolicy::HonestExact);
    QuantileResult r = tail_quantile(oracle, q, 64);
    CHECK(r.tail_at_point >= 8.0 / 64.0 - 1e-12);
    CHECK(r.strict_tail_at_point < 16.0 / 64.0);

    CHECK_THROWS(tail_quantile(oracle, q, 128));  // oracle parameter must equal n
    VstatOracle small(d, 31, OraclePolicy::HonestExact);
    CHECK_THROWS(tail_quantile(small, q, 31));    // n below 32
}

TEST_CASE("grid quantile returns a lattice point that covers an on-grid atom") {
    auto d = share(two_point(0.0, 3 * 0.1, 0.5));
    Query q = Query::identity(d);
    VstatOracle oracle(d, 50, OraclePolicy::HonestExact);
    QuantileResult r = grid_quantile(oracle, q, 0.1, 0.5, 0.2);
    CHECK(r.point == 3 * 0.1);
    CHECK(r.tail_at_point == doctest::Approx(0.5));
}

TEST_CASE("grid quantile contract on random instances") {
    std::mt19937_64 gen(127);
    for (int trial = 0; trial < 100; ++trial) {
        auto d = random_dist(gen, 1, 64, -4.0, 4.0);
        Query q = Query::identity(d);
        double zeta = 0.05 + 0.5 * uniform01(gen);
        double delta = 0.05 + 0.15 * uniform01(gen);
        double p = 2.0 * delta + (1.0 - 2.0 * delta) * uniform01(gen);
        auto n = static_cast<std::uint64_t>(std::ceil(4.0 * p / (delta * delta)));
        for (OraclePolicy policy : kAllPolicies) {
            VstatOracle oracle(d, n, policy, gen());
            QuantileResult r = grid_quantile(oracle, q, zeta, p, delta);
            CHECK(r.tail_at_point >= p - delta - 1e-12);
            CHECK(exact_tail(q, r.point + zeta) < p + 1e-9);
            // the returned point is on the lattice
            double k = std::round(r.point / zeta);
            CHECK(r.point == doctest::Approx(k * zeta).epsilon(1e-12));
        }
    }
}

TEST_CASE("approximate median of a symmetric two-point distribution") {
    auto d = share(two_point(-1.0, 1.0, 0.5));
    Query q = Query::identity(d);
    VstatOracle oracle(d, 72, OraclePolicy::HonestExact);
    QuantileResult r = approximate_median(oracle, q);
    CHECK(r.point == 1.0);
    CHECK(r.tail_at_point >= 1.0 / 3.0);
    CHECK(r.strict_tail_at_point < 0.5);
}

TEST_CASE("every point with a third of the mass on both sides bounds the second moment") {
    std::mt19937_64 gen(131);
    for (int trial = 0; trial < 100; ++trial) {
        auto d = random_dist(gen, 1, 48, -6.0, 6.0);
        double variance = exact_moments(Query::identity(d)).variance;
        for (std::size_t j = 0; j < d->size(); ++j) {
            double a = d->support()[j];
            double ge = 0.0, le = 0.0, second = 0.0;
            for (std::size_t k = 0; k < d->size(); ++k) {
                if (d->support()[k] >= a) ge += d->weights()[k];
                if (d->support()[k] <= a) le += d->weights()[k];
                second += d->weights()[k] * (d->support()[k] - a) * (d->support()[k] - a);
            }
            if (ge < 1.0 / 3.0 || le < 1.0 / 3.0) continue;
            CHECK(second <= 4.0 * variance * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("nonnegative mean bound holds across policies and parameters") {
    std::mt19937_64 gen(137);
    for (int trial = 0; trial < 15; ++trial) {
        auto d = random_dist(gen, 1, 80, 0.0, 8.0);
        Query q = Query::identity(d, 0.0, 8.0);
        double B = 1.25 * std::sqrt(exact_moments(q).second_moment) + 0.1;
        for (std::uint64_t n : {32ULL, 256ULL}) {
            for (OraclePolicy policy : kAllPolicies) {
                EstimateReport r = nonneg_mean(make_vstat_factory(d, policy, gen()), q, n,
                                               0.05, B);
                CHECK(r.realized_error <= r.theoretical_bound + 1e-12);
                CHECK(r.oracle_parameter == n);
            }
        }
    }
}

TEST_CASE("nonnegative mean validates its arguments") {
    auto d = share(two_point(0.0, 1.0, 0.5));
    Query q = Query::identity(d, 0.0, 1.0);
    OracleFactory f = make_vstat_factory(d, OraclePolicy::HonestExact, 1);
    CHECK_THROWS(nonneg_mean(f, q, 31, 0.05, 1.0));   // n below 32
    CHECK_THROWS(nonneg_mean(f, q, 64, 0.0, 1.0));    // zeta must be positive
    CHECK_THROWS(nonneg_mean(f, q, 64, 0.05, 0.5));   // E[q^2] = 0.5 > 0.25

    auto neg = share(two_point(-1.0, 1.0, 0.5));
    CHECK_THROWS(nonneg_mean(make_vstat_factory(neg, OraclePolicy::HonestExact, 1),
                             Query::identity(neg), 64, 0.05, 2.0));
}

TEST_CASE("signed mean bound holds across policies and parameters") {
    std::mt19937_64 gen(139);
    for (int trial = 0; trial < 15; ++trial) {
        auto d = random_dist(gen, 2, 80, -4.0, 4.0);
        Query q = Query::identity(d);
        Moments m = exact_moments(q);
        double B = 1.5 * std::sqrt(m.second_moment);
        for (std::uint64_t n : {32ULL, 1024ULL}) {
            for (OraclePolicy policy : kAllPolicies) {
                EstimateReport r =
                    signed_mean(make_vstat_factory(d, policy, gen()), q, n, 0.02, B);
                CHECK(r.realized_error <= r.theoretical_bound + 1e-12);
                double nn = static_cast<double>(n);
                CHECK(r.theoretical_bound ==
                      doctest::Approx(8.0 * m.std_dev * std::log2(8.0 * nn) / std::sqrt(nn) +
                                      0.02));
            }
        }
    }
}

TEST_CASE("signed mean spends queries on one median search plus two halves") {
    std::mt19937_64 gen(149);
    auto d = random_dist(gen, 8, 32, -2.0, 2.0);
    Query q = Query::identity(d);
    double B = 1.5 * std::sqrt(exact_moments(q).second_moment);

    std::vector<OraclePtr> created;
    OracleFactory inner = make_vstat_factory(d, OraclePolicy::AdversarialUp, 3);
    OracleFactory counting = [&](std::uint64_t n) {
        OraclePtr o = inner(n);
        created.push_back(o);
        return o;
    };
    EstimateReport r = signed_mean(counting, q, 64, 0.05, B);
    REQUIRE(created.size() == 3);  // median oracle + one per half
    CHECK(created[0]->parameter() == 72);
    CHECK(created[1]->parameter() == 64);
    CHECK(created[2]->parameter() == 64);
    std::uint64_t total = 0;
    for (const auto& o : created) total += o->ledger().queries_asked;
    CHECK(r.queries_used == total);
}

TEST_CASE("relative accuracy mean picks the smallest adequate parameter") {
    auto relative_term = [](double n) { return 8.0 * std::log2(8.0 * n) / std::sqrt(n); };
    std::mt19937_64 gen(151);
    auto d = random_dist(gen, 4, 40, -3.0, 3.0);
    Query q = Query::identity(d);
    Moments m = exact_moments(q);
    double B = 1.5 * std::sqrt(m.second_moment);

    for (double eps : {0.9, 0.5}) {
        EstimateReport r = relative_accuracy_mean(
            make_vstat_factory(d, OraclePolicy::AdversarialDown, gen()), q, eps, 0.01, B);
        double n = static_cast<double>(r.oracle_parameter);
        CHECK(relative_term(n) <= eps);
        if (r.oracle_parameter > 32) CHECK(relative_term(n - 1.0) > eps);
        CHECK(r.theoretical_bound == doctest::Approx(eps * m.std_dev + 0.01));
        CHECK(r.realized_error <= r.theoretical_bound + 1e-12);
    }
}

TEST_CASE("vector mean stays within eps in l2 norm") {
    std::vector<DistPtr> coords;
    double sigma = std::sqrt(0.9 / 4.0);
    for (int i = 0; i < 4; ++i)
        coords.push_back(share(discretized_gaussian(0.3 * i - 0.45, sigma, sigma / 8.0,
                                                    8.0 * sigma)));
    for (OraclePolicy policy : kAllPolicies) {
        VectorOracleFactory factories = [&](std::size_t i, const DistPtr& dist) {
            return make_vstat_factory(dist, policy, mix_seed(157, i));
        };
        VectorEstimateReport r = vector_mean(coords, 0.5, 2.5, factories);
        CHECK(r.l2_error <= 0.5 + 1e-12);
        CHECK(r.theoretical_bound == 0.5);
        CHECK(r.estimate.size() == 4);
        CHECK(r.queries_used > 0);
    }
}

TEST_CASE("vector mean rejects an overdispersed product") {
    std::vector<DistPtr> coords;
    for (int i = 0; i < 3; ++i) coords.push_back(share(two_point(-1.0, 1.0, 0.5))); // var 1 each
    VectorOracleFactory factories = [&](std::size_t, const DistPtr& dist) {
        return make_vstat_factory(dist, OraclePolicy::HonestExact, 1);
    };
    CHECK_THROWS(vector_mean(coords, 0.25, 4.0, factories));
}

TEST_CASE("degenerate declared ranges short-circuit to the exact constant") {
    auto d = share(FiniteDistribution::point_mass(3.0));
    Query q = Query::identity(d);  // declared range [3, 3]
    VstatOracle oracle(d, 64, OraclePolicy::AdversarialUp);
    EstimateReport r1 = naive_mean(oracle, q);
    CHECK(r1.value == 3.0);
    CHECK(r1.queries_used == 0);

    EstimateReport r2 = signed_mean(make_vstat_factory(d, OraclePolicy::AdversarialUp, 1), q,
                                    64, 0.1, 4.0);
    CHECK(r2.value == 3.0);
    CHECK(r2.realized_error == 0.0);
    CHECK(r2.queries_used == 0);
}
