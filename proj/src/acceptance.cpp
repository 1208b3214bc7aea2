#include "sqmean/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

#include "sqmean/distribution.hpp"
#include "sqmean/estimators.hpp"
#include "sqmean/experiment.hpp"
#include "sqmean/generators.hpp"
#include "sqmean/oracles.hpp"
#include "sqmean/rng.hpp"

namespace sqmean {

namespace {

constexpr OraclePolicy kPolicies[] = {
    OraclePolicy::HonestExact,
    OraclePolicy::AdversarialUp,
    OraclePolicy::AdversarialDown,
    OraclePolicy::AdversarialRandomSign,
};

// Slack for compensated-sum rounding when comparing realized errors against
// analytically exact bounds. The guarantees themselves carry no tolerance.
constexpr double kFpSlack = 1e-12;

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
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

std::uint64_t ceil_log2(std::uint64_t x) {
    std::uint64_t r = 0;
    while ((1ULL << r) < x) ++r;
    return r;
}

CriterionResult quantile_contract(std::uint64_t seed) {
    std::mt19937_64 gen(mix_seed(seed, 1));
    std::uint64_t runs = 0, violations = 0, worst_over_budget = 0;
    double worst_tail_slack = 1.0;
    for (int i = 0; i < 500; ++i) {
        DistPtr dist = random_dist(gen, 1, 128, 0.0, 1.0);
        Query q = Query::identity(dist);
        double delta = 0.02 + 0.28 * uniform01(gen);
        double p = 2.0 * delta + (1.0 - 2.0 * delta) * uniform01(gen);
        auto n = static_cast<std::uint64_t>(std::ceil(4.0 * p / (delta * delta) - 1e-9));
        for (OraclePolicy policy : kPolicies) {
            VstatOracle oracle(dist, n, policy, gen());
            QuantileResult r = quantile_search(oracle, q, p, delta);
            ++runs;
            bool lower_ok = r.tail_at_point >= p - delta - kFpSlack;
            bool upper_ok = r.strict_tail_at_point < p + kFpSlack;
            if (!lower_ok || !upper_ok) ++violations;
            worst_tail_slack = std::min(worst_tail_slack, r.tail_at_point - (p - delta));
            std::uint64_t budget = ceil_log2(dist->size()) + 1;
            if (r.queries_used > budget)
                worst_over_budget = std::max(worst_over_budget, r.queries_used - budget);
        }
    }
    CriterionResult c;
    c.name = "quantile-contract";
    c.passed = violations == 0 && worst_over_budget == 0;
    c.details = fmt("%llu searches, %llu contract violations, min tail slack %.3g, "
                    "query budget exceeded by %llu",
                    (unsigned long long)runs, (unsigned long long)violations, worst_tail_slack,
                    (unsigned long long)worst_over_budget);
    return c;
}

CriterionResult dyadic_bound(std::uint64_t seed) {
    std::mt19937_64 gen(mix_seed(seed, 2));
    const std::uint64_t ns[] = {16, 64, 256, 1024, 4096};
    std::uint64_t runs = 0, violations = 0, query_mismatches = 0;
    double worst_ratio = 0.0;
    std::vector<DistPtr> dists;
    for (int i = 0; i < 100; ++i) dists.push_back(random_dist(gen, 1, 128, 0.0, 1.0));
    for (const DistPtr& dist : dists) {
        Query q = Query::identity(dist, 0.0, 1.0);
        double s = std::sqrt(exact_moments(q).second_moment);
        for (std::uint64_t n : ns) {
            double nn = static_cast<double>(n);
            double bound = 4.0 / nn + 2.0 * s * std::log2(nn) / std::sqrt(nn);
            for (OraclePolicy policy : kPolicies) {
                VstatOracle oracle(dist, n, policy, gen());
                EstimateReport r = dyadic_mean(oracle, q);
                ++runs;
                if (r.realized_error > bound + kFpSlack) ++violations;
                if (bound > 0.0) worst_ratio = std::max(worst_ratio, r.realized_error / bound);
                auto levels = static_cast<std::uint64_t>(std::log2(nn));
                if (r.queries_used != levels) ++query_mismatches;
            }
        }
    }

    // Same query sequence no matter how the oracle answers.
    std::uint64_t adaptivity_breaks = 0;
    for (int i = 0; i < 10; ++i) {
        const DistPtr& dist = dists[static_cast<std::size_t>(i)];
        Query q = Query::identity(dist, 0.0, 1.0);
        auto log_a = std::make_shared<std::vector<std::uint64_t>>();
        auto log_b = std::make_shared<std::vector<std::uint64_t>>();
        RecordingOracle a(std::make_shared<VstatOracle>(dist, 256, OraclePolicy::HonestExact, 7),
                          log_a);
        RecordingOracle b(std::make_shared<VstatOracle>(dist, 256, OraclePolicy::AdversarialUp, 7),
                          log_b);
        dyadic_mean(a, q);
        dyadic_mean(b, q);
        if (*log_a != *log_b) ++adaptivity_breaks;
    }

    CriterionResult c;
    c.name = "dyadic-bound";
    c.passed = violations == 0 && query_mismatches == 0 && adaptivity_breaks == 0;
    c.details = fmt("%llu runs, %llu bound violations (worst error/bound %.3f), "
                    "%llu query-count mismatches, %llu adaptive query sequences",
                    (unsigned long long)runs, (unsigned long long)violations, worst_ratio,
                    (unsigned long long)query_mismatches, (unsigned long long)adaptivity_breaks);
    return c;
}

CriterionResult known_bound(std::uint64_t seed) {
    std::mt19937_64 gen(mix_seed(seed, 3));
    const double B = 1.0;
    const double eps_grid[] = {B / 16.0, B / 32.0};
    std::uint64_t runs = 0, violations = 0, over_budget = 0, parameter_mismatches = 0;
    double worst_ratio = 0.0;
    for (double eps : eps_grid) {
        double L = std::log2(B / eps);
        auto budget = static_cast<std::uint64_t>(3.0 * L + 1e-9);
        auto want_n = static_cast<std::uint64_t>(std::ceil(std::pow(8.0 * B * L / eps, 2.0)));
        for (int i = 0; i < 50; ++i) {
            DistPtr dist = random_dist(gen, 1, 128, 0.0, 1.0);
            Query q = Query::identity(dist, 0.0, 1.0);
            for (OraclePolicy policy : kPolicies) {
                EstimateReport r = known_bound_mean(make_vstat_factory(dist, policy, gen()), q,
                                                    B, eps);
                ++runs;
                if (r.realized_error > eps + kFpSlack) ++violations;
                worst_ratio = std::max(worst_ratio, r.realized_error / eps);
                if (r.queries_used > budget) ++over_budget;
                if (r.oracle_parameter != want_n) ++parameter_mismatches;
            }
        }
    }
    CriterionResult c;
    c.name = "known-bound-mean";
    c.passed = violations == 0 && over_budget == 0 && parameter_mismatches == 0;
    c.details = fmt("%llu runs, %llu errors above eps (worst error/eps %.3f), "
                    "%llu over query budget, %llu parameter mismatches",
                    (unsigned long long)runs, (unsigned long long)violations, worst_ratio,
                    (unsigned long long)over_budget, (unsigned long long)parameter_mismatches);
    return c;
}

CriterionResult signed_bound(std::uint64_t seed) {
    std::mt19937_64 gen(mix_seed(seed, 4));
    const double zeta = 0.01;
    const std::uint64_t ns[] = {64, 1024};
    std::uint64_t runs = 0, violations = 0, over_budget = 0;
    double worst_ratio = 0.0;
    for (int i = 0; i < 100; ++i) {
        DistPtr dist = random_dist(gen, 2, 128, -5.0, 5.0);
        Query q = Query::identity(dist);
        Moments m = exact_moments(q);
        double B = 1.5 * std::sqrt(m.second_moment);
        for (std::uint64_t n : ns) {
            double nn = static_cast<double>(n);
            double bound = 8.0 * m.std_dev * std::log2(8.0 * nn) / std::sqrt(nn) + zeta;
            double budget = 3.0 * std::log2(4.0 * nn * B / (zeta * zeta)) + 4.0;
            for (OraclePolicy policy : kPolicies) {
                EstimateReport r =
                    signed_mean(make_vstat_factory(dist, policy, gen()), q, n, zeta, B);
                ++runs;
                if (r.realized_error > bound + kFpSlack) ++violations;
                worst_ratio = std::max(worst_ratio, r.realized_error / bound);
                if (static_cast<double>(r.queries_used) > budget) ++over_budget;
            }
        }
    }
    CriterionResult c;
    c.name = "signed-mean-bound";
    c.passed = violations == 0 && over_budget == 0;
    c.details = fmt("%llu runs, %llu bound violations (worst error/bound %.3f), "
                    "%llu over query budget",
                    (unsigned long long)runs, (unsigned long long)violations, worst_ratio,
                    (unsigned long long)over_budget);
    return c;
}

CriterionResult median_shift(std::uint64_t seed) {
    std::mt19937_64 gen(mix_seed(seed, 5));
    std::uint64_t dists = 0, points = 0, violations = 0;
    double worst_ratio = 0.0;
    for (int i = 0; i < 1000; ++i) {
        DistPtr dist = random_dist(gen, 1, 64, -10.0, 10.0);
        ++dists;
        Query q = Query::identity(dist);
        double variance = exact_moments(q).variance;
        const auto& sup = dist->support();
        const auto& w = dist->weights();
        for (std::size_t j = 0; j < sup.size(); ++j) {
            double a = sup[j];
            CompensatedSum ge, le, second;
            for (std::size_t k = 0; k < sup.size(); ++k) {
                if (sup[k] >= a) ge.add(w[k]);
                if (sup[k] <= a) le.add(w[k]);
                double d = sup[k] - a;
                second.add(w[k] * d * d);
            }
            if (ge.value() < 1.0 / 3.0 || le.value() < 1.0 / 3.0) continue;
            ++points;
            double lhs = second.value();
            double rhs = 4.0 * variance;
            if (lhs > rhs * (1.0 + 1e-9)) ++violations;
            if (rhs > 0.0) worst_ratio = std::max(worst_ratio, lhs / rhs);
        }
    }
    CriterionResult c;
    c.name = "median-shift";
    c.passed = violations == 0;
    c.details = fmt("%llu distributions, %llu qualifying points, %llu violations, "
                    "worst moment/4var %.4f",
                    (unsigned long long)dists, (unsigned long long)points,
                    (unsigned long long)violations, worst_ratio);
    return c;
}

CriterionResult vector_bound(std::uint64_t seed) {
    const std::size_t d = 32;
    const double eps = 0.25;
    const double B = 4.0;
    double sigma = std::sqrt(0.96 / static_cast<double>(d));
    std::vector<DistPtr> coords;
    for (std::size_t i = 0; i < d; ++i) {
        double mean = -0.6 + 1.2 * static_cast<double>(i) / static_cast<double>(d - 1);
        coords.push_back(std::make_shared<FiniteDistribution>(
            discretized_gaussian(mean, sigma, sigma / 8.0, 8.0 * sigma)));
    }
    double budget = 16.0 * static_cast<double>(d) * std::log2(static_cast<double>(d) * B / eps);

    std::uint64_t runs = 0, violations = 0, over_budget = 0;
    double worst_err = 0.0;
    std::uint64_t worst_queries = 0;
    for (OraclePolicy policy : kPolicies) {
        VectorOracleFactory factories = [&](std::size_t i, const DistPtr& dist) {
            return make_vstat_factory(dist, policy, mix_seed(seed, 600 + i));
        };
        VectorEstimateReport r = vector_mean(coords, eps, B, factories);
        ++runs;
        if (r.l2_error > eps + kFpSlack) ++violations;
        worst_err = std::max(worst_err, r.l2_error);
        if (static_cast<double>(r.queries_used) > budget) ++over_budget;
        worst_queries = std::max(worst_queries, r.queries_used);
    }
    CriterionResult c;
    c.name = "vector-mean";
    c.passed = violations == 0 && over_budget == 0;
    c.details = fmt("%llu policies, worst l2 error %.4f (eps %.2f), worst queries %llu "
                    "(budget %.0f, constant 16)",
                    (unsigned long long)runs, worst_err, eps, (unsigned long long)worst_queries,
                    budget);
    return c;
}

CriterionResult comm_simulation(std::uint64_t seed) {
    std::mt19937_64 gen(mix_seed(seed, 7));
    const std::uint64_t n = 100, q_total = 20;
    const double delta = 0.1;
    DistPtr dist = random_dist(gen, 64, 64, 0.0, 3.0);

    std::vector<Query> queries;
    std::vector<double> exact;
    for (std::uint64_t j = 0; j < q_total; ++j) {
        std::vector<double> v(dist->size());
        for (double& x : v) x = uniform01(gen);
        queries.emplace_back(dist, std::move(v), 0.0, 1.0);
        exact.push_back(exact_moments(queries.back()).mean);
    }

    CommSimPlan plan = comm_sim_plan(n, q_total, delta);
    std::uint64_t rm = plan.groups * plan.bits_per_group;
    double rm_cap = 64.0 * static_cast<double>(n) * std::log(2.0 * q_total / delta);

    std::uint64_t bad_runs = 0, bit_mismatches = 0;
    double worst_excess = 0.0;
    const int total_runs = 200;
    for (int k = 0; k < total_runs; ++k) {
        CommVstatOracle oracle(dist, n, q_total, delta, mix_seed(seed, 700 + k));
        bool violated = false;
        for (std::uint64_t j = 0; j < q_total; ++j) {
            double v = oracle.answer(queries[j]);
            double tol = vstat_tolerance(exact[j], n);
            double excess = std::abs(v - exact[j]) - tol;
            worst_excess = std::max(worst_excess, excess);
            if (excess > kFpSlack) violated = true;
        }
        if (violated) ++bad_runs;
        if (oracle.ledger().bits_consumed != rm * q_total) ++bit_mismatches;
    }
    double fraction = static_cast<double>(bad_runs) / total_runs;

    CriterionResult c;
    c.name = "comm-simulation";
    c.passed = fraction <= 0.15 && bit_mismatches == 0 && static_cast<double>(rm) <= rm_cap;
    c.details = fmt("%d runs, violation fraction %.3f (cap 0.15), worst tolerance excess %.3g, "
                    "%llu bit-ledger mismatches, r*m=%llu (cap %.0f)",
                    total_runs, fraction, worst_excess, (unsigned long long)bit_mismatches,
                    (unsigned long long)rm, rm_cap);
    return c;
}

CriterionResult heavy_tail_comparison(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.distribution = {{"kind", "point-mass"}, {"value", 5000.0}};
    cfg.query = {{"kind", "identity"}, {"lo", 0.0}, {"hi", 10000.0}};
    cfg.estimator_params = {{"name", "signed_mean"}, {"n", 10000}, {"zeta", 0.1}, {"B", 7500.0}};
    cfg.estimator_name = "signed_mean";
    cfg.policy = "adversarial-up";
    cfg.seed = seed;
    CompareReport rep = compare_naive(cfg);

    bool naive_ok = rep.naive_error >= 10000.0 / (2.0 * 10000.0);
    bool est_ok = rep.estimator_error <= 0.1;
    bool ratio_ok = rep.defined && rep.ratio >= 500.0;
    CriterionResult c;
    c.name = "heavy-tail-comparison";
    c.passed = naive_ok && est_ok && ratio_ok;
    c.details = fmt("naive error %.4g (need >= 0.5), signed error %.4g (need <= 0.1), "
                    "ratio %.4g (need >= 500)",
                    rep.naive_error, rep.estimator_error, rep.ratio);
    return c;
}

CriterionResult sweep_determinism(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.distribution = {{"kind", "discretized-lognormal"},
                        {"mu", 0.0},
                        {"sigma", 0.8},
                        {"step", 0.05},
                        {"cap", 40.0}};
    cfg.query = {{"kind", "identity"}};
    cfg.estimator_params = {{"name", "signed_mean"}, {"n", 64}, {"zeta", 0.02}, {"B", 6.0}};
    cfg.estimator_name = "signed_mean";
    cfg.sweep_n = {64, 256};
    cfg.sweep_policy = {"honest-exact", "adversarial-up", "adversarial-random-sign"};
    cfg.trials = 3;
    cfg.seed = seed;

    std::string csv_a = emit_results(run_experiment(cfg), "csv");
    std::string csv_b = emit_results(run_experiment(cfg), "csv");
    std::string json_a = emit_results(run_experiment(cfg), "json");

    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path();
    fs::path file_a = dir / "sqmean_sweep_a.csv";
    fs::path file_b = dir / "sqmean_sweep_b.csv";
    write_results(run_experiment(cfg), "csv", file_a.string());
    write_results(run_experiment(cfg), "csv", file_b.string());
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    bool files_equal = slurp(file_a) == slurp(file_b) && !slurp(file_a).empty();
    fs::remove(file_a);
    fs::remove(file_b);

    bool rows_equal = csv_a == csv_b;
    bool json_round_trip =
        emit_results(rows_from_json(nlohmann::json::parse(json_a)), "json") == json_a;

    CriterionResult c;
    c.name = "sweep-determinism";
    c.passed = rows_equal && files_equal && json_round_trip;
    c.details = fmt("csv reruns %s, files %s, json round-trip %s (%zu bytes)",
                    rows_equal ? "identical" : "DIFFER", files_equal ? "identical" : "DIFFER",
                    json_round_trip ? "stable" : "UNSTABLE", csv_a.size());
    return c;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(std::uint64_t seed) {
    return {
        quantile_contract(seed),    dyadic_bound(seed),    known_bound(seed),
        signed_bound(seed),         median_shift(seed),    vector_bound(seed),
        comm_simulation(seed),      heavy_tail_comparison(seed),
        sweep_determinism(seed),
    };
}

}  // namespace sqmean
