// Python bindings for the estimation core. Distributions are shared with the
// C++ side; experiment configs cross as JSON text so the python layer can
// hand over plain dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqmean/acceptance.hpp"
#include "sqmean/distribution.hpp"
#include "sqmean/estimators.hpp"
#include "sqmean/experiment.hpp"
#include "sqmean/generators.hpp"
#include "sqmean/oracles.hpp"
#include "sqmean/rng.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace sqmean;

namespace {

using SharedDist = std::shared_ptr<FiniteDistribution>;

// A callable that builds oracles on demand; estimators that choose their own
// accuracy parameter take one of these instead of a finished oracle.
struct FactoryHandle {
    OracleFactory fn;
};

SharedDist share_dist(FiniteDistribution d) {
    return std::make_shared<FiniteDistribution>(std::move(d));
}

}  // namespace

PYBIND11_MODULE(_sqmean, m) {
    m.doc() = "mean estimation under restricted oracle access";

    py::class_<FiniteDistribution, SharedDist>(m, "Distribution",
            "probability distribution with finite support; weights renormalize to 1")
        .def(py::init<std::vector<double>, std::vector<double>>(), "support"_a, "weights"_a)
        .def_static("point_mass",
                    [](double x) { return share_dist(FiniteDistribution::point_mass(x)); },
                    "x"_a)
        .def("__len__", &FiniteDistribution::size)
        .def_property_readonly("support", &FiniteDistribution::support)
        .def_property_readonly("weights", &FiniteDistribution::weights)
        .def_property_readonly("min_value", &FiniteDistribution::min_value)
        .def_property_readonly("max_value", &FiniteDistribution::max_value);

    py::class_<Query>(m, "Query",
            "real-valued function on a distribution's support with a declared range")
        .def(py::init<DistPtr, std::vector<double>, double, double>(), "dist"_a, "values"_a,
             "declared_lo"_a, "declared_hi"_a)
        .def_static("identity", [](SharedDist d) { return Query::identity(std::move(d)); },
                    "dist"_a)
        .def_static("identity",
                    [](SharedDist d, double lo, double hi) {
                        return Query::identity(std::move(d), lo, hi);
                    },
                    "dist"_a, "declared_lo"_a, "declared_hi"_a)
        .def("with_values", &Query::with_values, "values"_a, "declared_lo"_a, "declared_hi"_a)
        .def_property_readonly("values", &Query::values)
        .def_property_readonly("declared_lo", &Query::declared_lo)
        .def_property_readonly("declared_hi", &Query::declared_hi)
        .def_property_readonly("boolean_valued", &Query::boolean_valued);

    py::class_<Moments>(m, "Moments")
        .def_readonly("mean", &Moments::mean)
        .def_readonly("second_moment", &Moments::second_moment)
        .def_readonly("variance", &Moments::variance)
        .def_readonly("std_dev", &Moments::std_dev);

    m.def("exact_moments", &exact_moments, "query"_a,
          "exact mean/second moment/variance via compensated summation");
    m.def("exact_tail", &exact_tail, "query"_a, "t"_a, "strict"_a = false,
          "exact Pr[q >= t], or Pr[q > t] when strict");
    m.def("clamp", &clamp, "z"_a, "a"_a);
    m.def("residual", &residual, "z"_a, "a"_a);
    m.def("discretize_round_down", &discretize_round_down, "query"_a, "step"_a, "cap"_a);
    m.def("splitmix64", &splitmix64, "x"_a);
    m.def("mix_seed", &mix_seed, "base"_a, "index"_a);

    py::class_<BudgetLedger>(m, "BudgetLedger")
        .def_readonly("queries_asked", &BudgetLedger::queries_asked)
        .def_readonly("bits_consumed", &BudgetLedger::bits_consumed)
        .def_readonly("samples_drawn", &BudgetLedger::samples_drawn);

    py::class_<SqOracle, OraclePtr>(m, "Oracle",
            "answers [0,1]-valued queries within the tolerance of its parameter")
        .def("answer", &SqOracle::answer, "query"_a)
        .def_property_readonly("parameter", &SqOracle::parameter)
        .def_property_readonly("ledger", &SqOracle::ledger,
                               py::return_value_policy::copy);

    m.def("vstat_oracle",
          [](SharedDist d, std::uint64_t n, const std::string& policy,
             std::uint64_t seed) -> OraclePtr {
              return std::make_shared<VstatOracle>(std::move(d), n, policy_from_name(policy),
                                                   seed);
          },
          "dist"_a, "n"_a, "policy"_a = "honest-exact", "seed"_a = 0,
          "tolerance max(1/n, sqrt(p(1-p)/n))");
    m.def("stat_oracle",
          [](SharedDist d, double tau, const std::string& policy,
             std::uint64_t seed) -> OraclePtr {
              return std::make_shared<StatOracle>(std::move(d), tau, policy_from_name(policy),
                                                  seed);
          },
          "dist"_a, "tau"_a, "policy"_a = "honest-exact", "seed"_a = 0,
          "flat tolerance tau, presented as the equivalent n = round(1/tau)");
    m.def("comm_vstat_oracle",
          [](SharedDist d, std::uint64_t n, std::uint64_t q_total, double delta,
             std::uint64_t seed) -> OraclePtr {
              return std::make_shared<CommVstatOracle>(std::move(d), n, q_total, delta, seed);
          },
          "dist"_a, "n"_a, "q_total"_a = 100, "delta"_a = 0.05, "seed"_a = 0,
          "every answer assembled from one-bit samples; see ledger.bits_consumed");

    py::class_<FactoryHandle>(m, "OracleFactory",
            "builds oracles on demand for estimators that pick their own parameter");
    m.def("vstat_factory",
          [](SharedDist d, const std::string& policy, std::uint64_t seed) {
              return FactoryHandle{make_vstat_factory(std::move(d), policy_from_name(policy),
                                                      seed)};
          },
          "dist"_a, "policy"_a = "honest-exact", "seed"_a = 0);
    m.def("stat_factory",
          [](SharedDist d, const std::string& policy, std::uint64_t seed) {
              return FactoryHandle{make_stat_factory(std::move(d), policy_from_name(policy),
                                                     seed)};
          },
          "dist"_a, "policy"_a = "honest-exact", "seed"_a = 0);
    m.def("comm_factory",
          [](SharedDist d, std::uint64_t q_total, double delta, std::uint64_t seed) {
              return FactoryHandle{make_comm_factory(std::move(d), q_total, delta, seed)};
          },
          "dist"_a, "q_total"_a = 100, "delta"_a = 0.05, "seed"_a = 0);

    py::class_<EstimateReport>(m, "EstimateReport")
        .def_readonly("value", &EstimateReport::value)
        .def_readonly("true_value", &EstimateReport::true_value)
        .def_readonly("realized_error", &EstimateReport::realized_error)
        .def_readonly("theoretical_bound", &EstimateReport::theoretical_bound)
        .def_readonly("queries_used", &EstimateReport::queries_used)
        .def_readonly("oracle_parameter", &EstimateReport::oracle_parameter)
        .def_readonly("notes", &EstimateReport::notes);

    py::class_<QuantileResult>(m, "QuantileResult")
        .def_readonly("point", &QuantileResult::point)
        .def_readonly("tail_at_point", &QuantileResult::tail_at_point)
        .def_readonly("strict_tail_at_point", &QuantileResult::strict_tail_at_point)
        .def_readonly("queries_used", &QuantileResult::queries_used);

    py::class_<VectorEstimateReport>(m, "VectorEstimateReport")
        .def_readonly("estimate", &VectorEstimateReport::estimate)
        .def_readonly("true_mean", &VectorEstimateReport::true_mean)
        .def_readonly("l2_error", &VectorEstimateReport::l2_error)
        .def_readonly("theoretical_bound", &VectorEstimateReport::theoretical_bound)
        .def_readonly("queries_used", &VectorEstimateReport::queries_used)
        .def_readonly("oracle_parameter", &VectorEstimateReport::oracle_parameter);

    m.def("naive_mean",
          [](const OraclePtr& o, const Query& q) { return naive_mean(*o, q); },
          "oracle"_a, "query"_a, "single-query estimate through the declared range");
    m.def("dyadic_mean",
          [](const OraclePtr& o, const Query& q, std::uint64_t levels) {
              return dyadic_mean(*o, q, levels);
          },
          "oracle"_a, "query"_a, "levels"_a = 0,
          "one query per dyadic scale of a nonnegative query");
    m.def("known_bound_mean",
          [](const FactoryHandle& f, const Query& q, double B, double eps) {
              return known_bound_mean(f.fn, q, B, eps);
          },
          "factory"_a, "query"_a, "B"_a, "eps"_a,
          "mean to within eps given E[q^2] <= B^2, eps <= B/16");
    m.def("nonneg_mean",
          [](const FactoryHandle& f, const Query& q, std::uint64_t n, double zeta, double B) {
              return nonneg_mean(f.fn, q, n, zeta, B);
          },
          "factory"_a, "query"_a, "n"_a, "zeta"_a, "B"_a);
    m.def("signed_mean",
          [](const FactoryHandle& f, const Query& q, std::uint64_t n, double zeta, double B) {
              return signed_mean(f.fn, q, n, zeta, B);
          },
          "factory"_a, "query"_a, "n"_a, "zeta"_a, "B"_a,
          "median recentering plus two nonnegative halves");
    m.def("relative_accuracy_mean",
          [](const FactoryHandle& f, const Query& q, double eps, double zeta, double B) {
              return relative_accuracy_mean(f.fn, q, eps, zeta, B);
          },
          "factory"_a, "query"_a, "eps"_a, "zeta"_a, "B"_a,
          "error at most eps * std_dev + zeta");
    m.def("quantile_search",
          [](const OraclePtr& o, const Query& q, double p, double delta) {
              return quantile_search(*o, q, p, delta);
          },
          "oracle"_a, "query"_a, "p"_a, "delta"_a,
          "largest value with Pr[q >= a] >= p - delta and Pr[q > a] < p");
    m.def("tail_quantile",
          [](const OraclePtr& o, const Query& q, std::uint64_t n) {
              return tail_quantile(*o, q, n);
          },
          "oracle"_a, "query"_a, "n"_a);
    m.def("grid_quantile",
          [](const OraclePtr& o, const Query& q, double zeta, double p, double delta) {
              return grid_quantile(*o, q, zeta, p, delta);
          },
          "oracle"_a, "query"_a, "zeta"_a, "p"_a, "delta"_a);
    m.def("approximate_median",
          [](const OraclePtr& o, const Query& q) { return approximate_median(*o, q); },
          "oracle"_a, "query"_a);
    m.def("vector_mean",
          [](const std::vector<SharedDist>& coords, double eps, double B,
             const std::string& policy, std::uint64_t seed) {
              std::vector<DistPtr> cs(coords.begin(), coords.end());
              OraclePolicy pol = policy_from_name(policy);
              VectorOracleFactory per_coord = [pol, seed](std::size_t i, const DistPtr& d) {
                  return make_vstat_factory(d, pol, mix_seed(seed, i));
              };
              return vector_mean(cs, eps, B, per_coord);
          },
          "coords"_a, "eps"_a, "B"_a, "policy"_a = "honest-exact", "seed"_a = 0,
          "coordinate-wise mean of a product distribution, l2 error at most eps");

    m.def("uniform_grid",
          [](double lo, double hi, std::size_t count) {
              return share_dist(uniform_grid(lo, hi, count));
          },
          "lo"_a, "hi"_a, "count"_a);
    m.def("two_point",
          [](double lo, double hi, double p_hi) { return share_dist(two_point(lo, hi, p_hi)); },
          "lo"_a, "hi"_a, "p_hi"_a);
    m.def("discretized_gaussian",
          [](double mean, double sigma, double step, double cap) {
              return share_dist(discretized_gaussian(mean, sigma, step, cap));
          },
          "mean"_a, "sigma"_a, "step"_a, "cap"_a);
    m.def("discretized_lognormal",
          [](double mu, double sigma, double step, double cap) {
              return share_dist(discretized_lognormal(mu, sigma, step, cap));
          },
          "mu"_a, "sigma"_a, "step"_a, "cap"_a);
    m.def("discretized_pareto",
          [](double alpha, double x_min, double step, double cap) {
              return share_dist(discretized_pareto(alpha, x_min, step, cap));
          },
          "alpha"_a, "x_min"_a, "step"_a, "cap"_a);
    m.def("load_distribution",
          [](const std::string& path) { return share_dist(load_distribution(path)); },
          "path"_a, "text file with one 'value weight' pair per line");
    m.def("generate_distribution",
          [](const std::string& spec_json) {
              return share_dist(generate_distribution(nlohmann::json::parse(spec_json)));
          },
          "spec_json"_a, "JSON {'kind': ...} dispatch, same kinds as the config schema");

    m.def("run_experiment",
          [](const std::string& config_json, bool collect_timing) {
              ExperimentConfig c =
                  ExperimentConfig::from_json(nlohmann::json::parse(config_json));
              return emit_results(run_experiment(c, collect_timing), "json");
          },
          "config_json"_a, "collect_timing"_a = false,
          "runs a config (JSON text) and returns the result rows as JSON text");
    m.def("compare_naive",
          [](const std::string& config_json) {
              CompareReport rep = compare_naive(
                  ExperimentConfig::from_json(nlohmann::json::parse(config_json)));
              py::dict out;
              out["naive_error"] = rep.naive_error;
              out["estimator_error"] = rep.estimator_error;
              out["ratio"] = rep.ratio;
              out["defined"] = rep.defined;
              out["rows_json"] = emit_results(rep.rows, "json");
              return out;
          },
          "config_json"_a, "naive mean versus the configured estimator");
    m.def("run_acceptance",
          [](std::uint64_t seed) {
              py::list out;
              for (const auto& r : sqmean::run_acceptance(seed))
                  out.append(py::make_tuple(r.name, r.passed, r.details));
              return out;
          },
          "seed"_a = kAcceptanceSeed,
          "runs every verification suite; returns (name, passed, details) tuples");
}
