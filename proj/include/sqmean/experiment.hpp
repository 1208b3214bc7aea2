#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqmean/distribution.hpp"
#include "sqmean/estimators.hpp"

namespace sqmean {

// One estimator run under one oracle configuration. For quantile searches
// realized_error is the magnitude of any contract violation (0 when the
// returned point satisfies both tail conditions) and theoretical_bound is 0,
// so "realized <= bound" reads the same for every estimator.
struct ResultRow {
    std::uint64_t trial = 0;
    std::string estimator;
    std::string policy;
    std::uint64_t n = 0;
    double realized_error = 0.0;
    double theoretical_bound = 0.0;
    std::uint64_t queries = 0;
    std::uint64_t bits = 0;
    double wall_time_ms = 0.0;
};

// Parsed experiment description. The JSON layout:
//
//   {
//     "distribution": {"kind": "discretized-lognormal", "mu": 0, "sigma": 1,
//                      "step": 0.01, "cap": 50},
//     "query":        {"kind": "identity"},
//     "estimator":    {"name": "signed_mean", "n": 1024, "zeta": 0.01, "B": 3},
//     "oracle":       {"model": "vstat", "policy": "adversarial-up"},
//     "trials": 5,
//     "seed": 42,
//     "sweep":        {"n": [64, 256], "policy": ["honest-exact"], "eps": []}
//   }
//
// query kinds: identity, affine (scale, shift), absolute, file (path); an
// optional "lo"/"hi" pair overrides the declared range. oracle models:
// vstat, stat, comm-sim (q_total, delta). The sweep block is optional; each
// present list replaces the corresponding single value, and cells run in
// policy-major, then n, then eps order.
struct ExperimentConfig {
    nlohmann::json distribution;
    nlohmann::json query;
    std::string estimator_name;
    nlohmann::json estimator_params;
    std::string oracle_model = "vstat";
    std::string policy = "honest-exact";
    std::uint64_t comm_q_total = 100;
    double comm_delta = 0.05;
    std::uint64_t trials = 1;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> sweep_n;
    std::vector<std::string> sweep_policy;
    std::vector<double> sweep_eps;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path);
};

// Validates the whole configuration, including estimator preconditions
// against the exact moments of the generated instance, and throws before
// any trial runs if something is off.
void validate_config(const ExperimentConfig& config);

// A result row plus the estimate itself, for report-style output. Quantile
// searches put the returned point in value and describe the exact tails in
// detail; vector runs report the l2 error and dimension there instead.
struct TrialReport {
    ResultRow row;
    double value = 0.0;
    double true_value = 0.0;
    std::string detail;
};

// Runs trials x sweep cells deterministically: per-run seeds come from the
// config seed through a fixed mixing step, so equal (config, seed) pairs
// produce identical rows. Wall time is only measured when requested; it is
// left at 0 otherwise so emitted files stay byte-for-byte reproducible.
std::vector<TrialReport> run_trials(const ExperimentConfig& config,
                                    bool collect_timing = false);
std::vector<ResultRow> run_experiment(const ExperimentConfig& config,
                                      bool collect_timing = false);

struct CompareReport {
    std::vector<ResultRow> rows;  // paired per trial: naive row, then the other
    double naive_error = 0.0;
    double estimator_error = 0.0;
    double ratio = 0.0;  // +inf when the estimator is exact and naive is not
    bool defined = true; // false when both errors are 0
};

// naive_mean versus the configured estimator on the same instance and seeds.
CompareReport compare_naive(const ExperimentConfig& config);

// format "csv": pinned header trial,estimator,policy,n,realized_error,
// theoretical_bound,queries,bits,wall_time_ms with floats at 17 significant
// digits. format "json": an array of objects with those keys.
std::string emit_results(const std::vector<ResultRow>& rows, const std::string& format);
void write_results(const std::vector<ResultRow>& rows, const std::string& format,
                   const std::string& path);
std::vector<ResultRow> rows_from_json(const nlohmann::json& j);

// Query construction shared by the runner and the bindings.
Query build_query(DistPtr dist, const nlohmann::json& spec);

}  // namespace sqmean
