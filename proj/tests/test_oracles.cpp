#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sqmean/distribution.hpp"
#include "sqmean/generators.hpp"
#include "sqmean/oracles.hpp"
#include "sqmean/rng.hpp"

using namespace sqmean;

namespace {

DistPtr share(FiniteDistribution d) {
    return std::make_shared<FiniteDistribution>(std::move(d));
}

DistPtr random_dist(std::mt19937_64& gen, std::size_t max_points, double lo, double hi) {
    std::size_t count = 1 + gen() % max_points;
    std::vector<double> support(count), weights(count);
    for (std::size_t i = 0; i < count; ++i) {
        support[i] = lo + (hi - lo) * uniform01(gen);
        weights[i] = 0.05 + uniform01(gen);
    }
    return std::make_shared<FiniteDistribution>(std::move(support), std::move(weights));
}

Query random_unit_query(const DistPtr& d, std::mt19937_64& gen) {
    std::vector<double> v(d->size());
    for (double& x : v) x = uniform01(gen);
    return Query(d, std::move(v), 0.0, 1.0);
}

}  // namespace

TEST_CASE("tolerance formula") {
    CHECK(vstat_tolerance(0.0, 100) == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(vstat_tolerance(0.5, 100) == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(vstat_tolerance(1.0, 16) == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK_THROWS(vstat_tolerance(0.5, 0));
    CHECK_THROWS(vstat_tolerance(1.5, 16));
}

TEST_CASE("policy names round trip") {
    for (OraclePolicy p : {OraclePolicy::HonestExact, OraclePolicy::AdversarialUp,
                           OraclePolicy::AdversarialDown, OraclePolicy::AdversarialRandomSign})
        CHECK(policy_from_name(policy_name(p)) == p);
    CHECK_THROWS(policy_from_name("made-up"));
}

TEST_CASE("honest oracle answers exactly") {
    auto d = share(two_point(0.0, 1.0, 0.5));
    VstatOracle oracle(d, 100, OraclePolicy::HonestExact);
    CHECK(oracle.answer(Query::identity(d)) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(oracle.ledger().queries_asked == 1);
}

TEST_CASE("adversarial-up saturates the tolerance") {
    auto half = share(two_point(0.0, 1.0, 0.5));
    VstatOracle a(half, 100, OraclePolicy::AdversarialUp);
    CHECK(a.answer(Query::identity(half)) == doctest::Approx(0.55).epsilon(1e-14));

    // small p: the 1/n floor dominates
    auto rare = share(two_point(0.0, 1.0, 0.01));
    VstatOracle b(rare, 100, OraclePolicy::AdversarialUp);
    CHECK(b.answer(Query::identity(rare)) == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("adversarial-down clamps at zero") {
    auto rare = share(two_point(0.0, 1.0, 0.01));
    VstatOracle oracle(rare, 16, OraclePolicy::AdversarialDown);  // tol 1/16 > p
    CHECK(oracle.answer(Query::identity(rare)) == 0.0);
}

TEST_CASE("random-sign lands exactly on one tolerance edge") {
    auto d = share(two_point(0.0, 1.0, 0.4));
    Query q = Query::identity(d);
    double tol = vstat_tolerance(0.4, 50);
    VstatOracle oracle(d, 50, OraclePolicy::AdversarialRandomSign, 99);
    bool saw_up = false, saw_down = false;
    for (int i = 0; i < 64; ++i) {
        double v = oracle.answer(q);
        bool up = std::abs(v - (0.4 + tol)) < 1e-14;
        bool down = std::abs(v - (0.4 - tol)) < 1e-14;
        CHECK((up || down));
        saw_up = saw_up || up;
        saw_down = saw_down || down;
    }
    CHECK(saw_up);
    CHECK(saw_down);
}

TEST_CASE("same seed, same answer sequence") {
    std::mt19937_64 gen(17);
    auto d = random_dist(gen, 64, 0.0, 1.0);
    VstatOracle a(d, 200, OraclePolicy::AdversarialRandomSign, 31);
    VstatOracle b(d, 200, OraclePolicy::AdversarialRandomSign, 31);
    for (int i = 0; i < 25; ++i) {
        Query q = random_unit_query(d, gen);
        CHECK(a.answer(q) == b.answer(q));
    }
    CHECK(a.ledger().queries_asked == 25);
}

TEST_CASE("every policy honors the tolerance contract") {
    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 100; ++trial) {
        auto d = random_dist(gen, 100, -3.0, 3.0);
        std::uint64_t n = 2 + gen() % 5000;
        for (OraclePolicy policy : {OraclePolicy::HonestExact, OraclePolicy::AdversarialUp,
                                    OraclePolicy::AdversarialDown,
                                    OraclePolicy::AdversarialRandomSign}) {
            VstatOracle oracle(d, n, policy, gen());
            Query q = random_unit_query(d, gen);
            double p = exact_moments(q).mean;
            double v = oracle.answer(q);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(std::abs(v - p) <= vstat_tolerance(p, n) + 1e-12);
        }
    }
}

TEST_CASE("oracle rejects malformed queries") {
    auto d = share(two_point(0.0, 1.0, 0.5));
    VstatOracle oracle(d, 100, OraclePolicy::HonestExact);
    CHECK_THROWS(oracle.answer(Query(d, {0.0, 1.5}, 0.0, 2.0)));  // not [0,1]-valued

    auto other = share(two_point(0.0, 1.0, 0.25));
    CHECK_THROWS(oracle.answer(Query::identity(other)));  // bound to a different dist
}

TEST_CASE("flat-tolerance oracle") {
    auto d = share(two_point(0.0, 1.0, 0.5));
    Query q = Query::identity(d);

    StatOracle a(d, 0.01, OraclePolicy::AdversarialUp);
    CHECK(a.parameter() == 100);
    CHECK(a.answer(q) == doctest::Approx(0.51).epsilon(1e-14));  // flat, not sqrt(p(1-p)/n)

    StatOracle b = StatOracle::with_parameter(d, 100, OraclePolicy::AdversarialUp);
    CHECK(b.tau() == doctest::Approx(0.01).epsilon(1e-15));
    CHECK_THROWS(StatOracle::with_parameter(d, 1, OraclePolicy::HonestExact));
    CHECK_THROWS(StatOracle(d, 1.5, OraclePolicy::HonestExact));

    // flat tau = 1/n always fits inside the parameter-n tolerance
    std::mt19937_64 gen(29);
    for (int i = 0; i < 50; ++i) {
        auto dist = random_dist(gen, 50, 0.0, 1.0);
        StatOracle oracle = StatOracle::with_parameter(dist, 64, OraclePolicy::AdversarialUp,
                                                       gen());
        Query qq = random_unit_query(dist, gen);
        double p = exact_moments(qq).mean;
        CHECK(std::abs(oracle.answer(qq) - p) <= vstat_tolerance(p, 64) + 1e-12);
    }
}

TEST_CASE("one-bit oracle spends one sample per bit") {
    auto d = share(two_point(0.0, 1.0, 0.3));
    CommOracle oracle(d, 7);
    Query q = Query::identity(d);
    int ones = 0;
    for (int i = 0; i < 100000; ++i) ones += oracle.answer(q);
    CHECK(oracle.ledger().bits_consumed == 100000);
    CHECK(oracle.ledger().samples_drawn == 100000);
    CHECK(std::abs(ones / 1e5 - 0.3) < 0.01);

    CHECK_THROWS(oracle.answer(Query(d, {0.0, 0.5}, 0.0, 1.0)));  // not boolean
}

TEST_CASE("threshold bit frequency matches the exact tail") {
    auto d = share(two_point(0.0, 1.0, 0.3));
    Query q(d, {0.2, 0.9}, 0.0, 1.0);
    CommOracle oracle(d, 11);
    int always = 0, above_half = 0;
    for (int i = 0; i < 20000; ++i) {
        always += oracle.threshold_bit(q, 0.0);
        above_half += oracle.threshold_bit(q, 0.5);
    }
    CHECK(always == 20000);
    CHECK(std::abs(above_half / 2e4 - 0.3) < 0.02);  // only the 0.9-point passes
}

TEST_CASE("randomized rounding bit is unbiased") {
    auto d = share(two_point(0.0, 1.0, 0.3));
    Query q(d, {0.2, 0.9}, 0.0, 1.0);  // E[q] = 0.41
    CommOracle oracle(d, 13);
    std::mt19937_64 gen(19);
    double sum = 0.0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) sum += randomized_rounding_bit(oracle, q, gen);
    CHECK(std::abs(sum / trials - 0.41) < 4.0 / std::sqrt(trials));
}

TEST_CASE("simulation plan constants") {
    CommSimPlan plan = comm_sim_plan(100, 20, 0.1);
    CHECK(plan.groups == 18);  // ceil(3 * ln(400))
    CHECK(plan.bits_per_group == 800);
    CHECK_THROWS(comm_sim_plan(0, 20, 0.1));
    CHECK_THROWS(comm_sim_plan(100, 20, 1.5));
}

TEST_CASE("sampled answers respect the target tolerance") {
    std::mt19937_64 gen(37);
    auto d = random_dist(gen, 64, 0.0, 2.0);
    CommOracle comm(d, 41);
    std::mt19937_64 rounding(43);
    for (int i = 0; i < 20; ++i) {
        Query q = random_unit_query(d, gen);
        double p = exact_moments(q).mean;
        double v = vstat_via_comm(comm, q, 100, 20, 0.1, rounding);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        // per-answer failure odds are ~1e-7 at these sizes
        CHECK(std::abs(v - p) <= vstat_tolerance(p, 100) + 1e-12);
    }
}

TEST_CASE("sampling adapter keeps an exact bit ledger") {
    auto d = share(two_point(0.0, 1.0, 0.5));
    CommVstatOracle oracle(d, 100, 20, 0.1, 53);
    Query q = Query::identity(d);
    oracle.answer(q);
    oracle.answer(q);
    CHECK(oracle.parameter() == 100);
    CHECK(oracle.ledger().queries_asked == 2);
    CHECK(oracle.ledger().bits_consumed == 2 * 18 * 800);
    CHECK(oracle.ledger().samples_drawn == oracle.ledger().bits_consumed);

    CommVstatOracle twin_a(d, 100, 20, 0.1, 53);
    CommVstatOracle twin_b(d, 100, 20, 0.1, 53);
    CHECK(twin_a.answer(q) == twin_b.answer(q));
    CHECK(twin_a.answer(q) == twin_b.answer(q));
}

TEST_CASE("recording oracle certifies identical query sequences") {
    std::mt19937_64 gen(61);
    auto d = random_dist(gen, 32, 0.0, 1.0);
    auto log_a = std::make_shared<std::vector<std::uint64_t>>();
    auto log_b = std::make_shared<std::vector<std::uint64_t>>();
    RecordingOracle a(std::make_shared<VstatOracle>(d, 64, OraclePolicy::HonestExact), log_a);
    RecordingOracle b(std::make_shared<VstatOracle>(d, 64, OraclePolicy::AdversarialUp), log_b);

    Query q1 = random_unit_query(d, gen);
    Query q2 = random_unit_query(d, gen);
    a.answer(q1);
    a.answer(q2);
    b.answer(q1);
    b.answer(q2);
    CHECK(log_a->size() == 2);
    CHECK(*log_a == *log_b);              // same queries, same fingerprints
    CHECK((*log_a)[0] != (*log_a)[1]);    // different queries, different fingerprints
    CHECK(a.ledger().queries_asked == 2);
}

TEST_CASE("factories hand out deterministic independent streams") {
    auto d = share(two_point(0.0, 1.0, 0.5));
    Query q = Query::identity(d);

    OracleFactory f1 = make_vstat_factory(d, OraclePolicy::AdversarialRandomSign, 71);
    OracleFactory f2 = make_vstat_factory(d, OraclePolicy::AdversarialRandomSign, 71);
    OraclePtr a1 = f1(100), b1 = f1(100);
    OraclePtr a2 = f2(100), b2 = f2(100);
    for (int i = 0; i < 16; ++i) {
        CHECK(a1->answer(q) == a2->answer(q));  // same factory seed, same creation order
        CHECK(b1->answer(q) == b2->answer(q));
    }
    CHECK(a1->parameter() == 100);

    OracleFactory stat = make_stat_factory(d, OraclePolicy::AdversarialUp, 73);
    CHECK(stat(50)->answer(q) == doctest::Approx(0.52).epsilon(1e-14));

    OracleFactory comm = make_comm_factory(d, 20, 0.1, 79);
    OraclePtr c = comm(100);
    c->answer(q);
    CHECK(c->ledger().bits_consumed == 18 * 800);
}
