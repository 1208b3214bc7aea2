// Measures how the one-bit simulation's group sizes trade bits for reliability.
//
// The adapter answers a parameter-n query from r groups of m randomized
// rounding bits (median of group means) with r = ceil(c_r * ln(2q/delta)) and
// m = c_m * n. This sweeps candidate (c_m, c_r) pairs and Monte Carlo
// estimates the per-answer violation probability on stress expectations:
// p at the 1/n tolerance knee, far below it, and at the variance peak.
// The sweep locates the cliff where cheap plans start missing the tolerance.
// The shipped constants sit well inside the safe region on purpose: with
// m = 8n each group mean lands inside the tolerance with probability above
// 0.84, so the median of ceil(3 ln(2q/delta)) groups fails about once in 1e8
// answers, and the total r*m stays under the 64 n ln(2q/delta) bit budget
// the verification suite pins.

#include <cmath>
#include <cstdio>
#include <vector>

#include <CLI11.hpp>

#include "sqmean/distribution.hpp"
#include "sqmean/generators.hpp"
#include "sqmean/oracles.hpp"
#include "sqmean/rng.hpp"

using namespace sqmean;

int main(int argc, char** argv) {
    CLI::App app{"calibrate one-bit simulation group sizes"};
    std::uint64_t n = 100, q_total = 20, runs = 400, seed = 1;
    double delta = 0.1;
    app.add_option("--n", n, "accuracy parameter the simulation must honor");
    app.add_option("--q-total", q_total, "query budget the failure budget is split over");
    app.add_option("--delta", delta, "total failure budget");
    app.add_option("--runs", runs, "Monte Carlo replicates per stress point");
    app.add_option("--seed", seed, "base seed");
    CLI11_PARSE(app, argc, argv);

    const double per_answer = delta / static_cast<double>(q_total);
    std::vector<double> stress = {0.2 / static_cast<double>(n), 1.0 / static_cast<double>(n),
                                  5.0 / static_cast<double>(n), 0.5, 0.9};

    std::printf("n=%llu q_total=%llu delta=%g  per-answer budget %.4g, %llu runs/point\n\n",
                static_cast<unsigned long long>(n), static_cast<unsigned long long>(q_total),
                delta, per_answer, static_cast<unsigned long long>(runs));
    std::printf("%6s %6s %8s %10s %14s %18s\n", "c_m", "c_r", "groups", "bits/grp",
                "bits/answer", "worst violation");

    for (std::uint64_t c_m : {2ULL, 4ULL, 8ULL, 16ULL}) {
        for (double c_r : {1.0, 2.0, 3.0, 4.0}) {
            CommSimPlan plan;
            plan.groups = static_cast<std::uint64_t>(std::ceil(
                c_r * std::log(2.0 * static_cast<double>(q_total) / delta)));
            plan.bits_per_group = c_m * n;

            double worst = 0.0;
            std::uint64_t stream = 0;
            for (double p : stress) {
                auto d = std::make_shared<FiniteDistribution>(two_point(0.0, 1.0, p));
                Query q = Query::identity(d, 0.0, 1.0);
                double tol = vstat_tolerance(p, n);
                std::uint64_t bad = 0;
                for (std::uint64_t k = 0; k < runs; ++k) {
                    std::uint64_t run_seed = mix_seed(seed, stream++);
                    CommOracle comm(d, mix_seed(run_seed, 0));
                    std::mt19937_64 gen(mix_seed(run_seed, 1));
                    double v = vstat_via_comm_plan(comm, q, plan, gen);
                    if (std::abs(v - p) > tol) ++bad;
                }
                worst = std::max(worst, static_cast<double>(bad) / static_cast<double>(runs));
            }

            std::printf("%6llu %6.1f %8llu %10llu %14llu %12.4f  %s\n",
                        static_cast<unsigned long long>(c_m), c_r,
                        static_cast<unsigned long long>(plan.groups),
                        static_cast<unsigned long long>(plan.bits_per_group),
                        static_cast<unsigned long long>(plan.groups * plan.bits_per_group),
                        worst, worst <= per_answer ? "ok" : "over budget");
        }
    }

    CommSimPlan frozen = comm_sim_plan(n, q_total, delta);
    std::printf("\nshipped plan for these inputs: r=%llu m=%llu (%llu bits per answer)\n",
                static_cast<unsigned long long>(frozen.groups),
                static_cast<unsigned long long>(frozen.bits_per_group),
                static_cast<unsigned long long>(frozen.groups * frozen.bits_per_group));
    return 0;
}
