#include "sqmean/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "sqmean/generators.hpp"
#include "sqmean/oracles.hpp"
#include "sqmean/rng.hpp"

namespace sqmean {

namespace {

void fail(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

double need_number(const nlohmann::json& j, const char* key, const char* ctx) {
    if (!j.contains(key) || !j[key].is_number())
        fail(std::string(ctx) + " requires numeric field '" + key + "'");
    return j[key].get<double>();
}

double number_or(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) fail(std::string("field '") + key + "' must be numeric");
    return j[key].get<double>();
}

std::uint64_t need_uint(const nlohmann::json& j, const char* key, const char* ctx) {
    double v = need_number(j, key, ctx);
    if (v < 0 || v != std::floor(v)) fail(std::string(ctx) + ": '" + key + "' must be a nonnegative integer");
    return static_cast<std::uint64_t>(v);
}

bool is_vector_estimator(const std::string& name) { return name == "vector_mean"; }

// Per-coordinate marginals for vector experiments: equal variances summing
// to total_variance, means evenly spaced across [mean_lo, mean_hi].
std::vector<DistPtr> build_coordinates(const nlohmann::json& spec) {
    if (!spec.is_object() || spec.value("kind", "") != std::string("gaussian-product"))
        fail("vector_mean requires distribution kind 'gaussian-product'");
    auto d = static_cast<std::size_t>(need_number(spec, "d", "gaussian-product"));
    if (d < 1) fail("gaussian-product: d must be at least 1");
    double total_variance = number_or(spec, "total_variance", 1.0);
    double mean_lo = number_or(spec, "mean_lo", 0.0);
    double mean_hi = number_or(spec, "mean_hi", 0.0);
    double cap_sigmas = number_or(spec, "cap_sigmas", 8.0);
    double steps_per_sigma = number_or(spec, "steps_per_sigma", 8.0);
    double sigma = std::sqrt(total_variance / static_cast<double>(d));
    std::vector<DistPtr> coords;
    for (std::size_t i = 0; i < d; ++i) {
        double frac = d == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(d - 1);
        double mean = mean_lo + (mean_hi - mean_lo) * frac;
        coords.push_back(std::make_shared<FiniteDistribution>(
            discretized_gaussian(mean, sigma, sigma / steps_per_sigma, cap_sigmas * sigma)));
    }
    return coords;
}

struct Instance {
    DistPtr dist;                  // scalar estimators
    std::vector<DistPtr> coords;   // vector_mean
    std::unique_ptr<Query> query;  // scalar estimators
};

Instance build_instance(const ExperimentConfig& config) {
    Instance inst;
    if (is_vector_estimator(config.estimator_name)) {
        inst.coords = build_coordinates(config.distribution);
    } else {
        inst.dist = std::make_shared<FiniteDistribution>(
            generate_distribution(config.distribution));
        inst.query = std::make_unique<Query>(build_query(inst.dist, config.query));
    }
    return inst;
}

struct Params {
    std::uint64_t n = 0;
    double zeta = 0.0;
    double B = 0.0;
    double eps = 0.0;
    double p = 0.0;
    double delta = 0.0;
};

Params read_params(const std::string& name, const nlohmann::json& j) {
    Params p;
    const char* ctx = name.c_str();
    bool needs_n = name == "naive_mean" || name == "dyadic_mean" || name == "tail_quantile" ||
                   name == "nonneg_mean" || name == "signed_mean";
    bool needs_zeta = name == "grid_quantile" || name == "nonneg_mean" ||
                      name == "signed_mean" || name == "relative_accuracy_mean";
    bool needs_B = name == "known_bound_mean" || name == "nonneg_mean" ||
                   name == "signed_mean" || name == "relative_accuracy_mean" ||
                   name == "vector_mean";
    bool needs_eps = name == "known_bound_mean" || name == "relative_accuracy_mean" ||
                     name == "vector_mean";
    bool needs_pd = name == "quantile_search" || name == "grid_quantile";
    if (needs_n) p.n = need_uint(j, "n", ctx);
    if (needs_zeta) p.zeta = need_number(j, "zeta", ctx);
    if (needs_B) p.B = need_number(j, "B", ctx);
    if (needs_eps) p.eps = need_number(j, "eps", ctx);
    if (needs_pd) {
        p.p = need_number(j, "p", ctx);
        p.delta = need_number(j, "delta", ctx);
    }
    return p;
}

std::uint64_t quantile_parameter(double p, double delta) {
    double needed = 4.0 * p / (delta * delta);
    if (needed < 1.0) needed = 1.0;
    if (needed > 9.0e18) fail("quantile parameters demand an impossible oracle");
    return static_cast<std::uint64_t>(std::ceil(needed - 1e-9));
}

struct OracleSetup {
    std::string model;
    OraclePolicy policy = OraclePolicy::HonestExact;
    std::uint64_t q_total = 0;
    double comm_delta = 0.0;
};

OraclePtr make_oracle(const OracleSetup& s, const DistPtr& dist, std::uint64_t n,
                      std::uint64_t seed) {
    if (s.model == "vstat") return std::make_shared<VstatOracle>(dist, n, s.policy, seed);
    if (s.model == "stat")
        return std::make_shared<StatOracle>(StatOracle::with_parameter(dist, n, s.policy, seed));
    if (s.model == "comm-sim")
        return std::make_shared<CommVstatOracle>(dist, n, s.q_total, s.comm_delta, seed);
    fail("unknown oracle model: " + s.model);
    return nullptr;
}

OracleFactory make_factory(const OracleSetup& s, const DistPtr& dist, std::uint64_t seed) {
    if (s.model == "vstat") return make_vstat_factory(dist, s.policy, seed);
    if (s.model == "stat") return make_stat_factory(dist, s.policy, seed);
    if (s.model == "comm-sim") return make_comm_factory(dist, s.q_total, s.comm_delta, seed);
    fail("unknown oracle model: " + s.model);
    return nullptr;
}

// Wraps a factory so the runner can read ledgers after the estimator is done.
OracleFactory logging_factory(OracleFactory inner,
                              std::shared_ptr<std::vector<OraclePtr>> registry) {
    return [inner = std::move(inner), registry](std::uint64_t n) -> OraclePtr {
        OraclePtr o = inner(n);
        registry->push_back(o);
        return o;
    };
}

double quantile_violation(const QuantileResult& r, double p, double delta) {
    double slack = 0.0;
    slack += std::max(0.0, (p - delta) - r.tail_at_point);
    if (r.strict_tail_at_point >= p) slack += std::max(r.strict_tail_at_point - p, 1e-300);
    return slack;
}

struct CellOutcome {
    double realized = 0.0;
    double bound = 0.0;
    std::uint64_t queries = 0;
    std::uint64_t bits = 0;
    std::uint64_t parameter = 0;
    double value = 0.0;
    double true_value = 0.0;
    std::string detail;
};

CellOutcome run_cell(const ExperimentConfig& config, const Instance& inst,
                     const OracleSetup& setup, const Params& prm, double eps_override,
                     std::uint64_t run_seed) {
    const std::string& name = config.estimator_name;
    double eps = eps_override > 0.0 ? eps_override : prm.eps;
    CellOutcome out;

    auto finish_report = [&](const EstimateReport& r, const BudgetLedger& led) {
        out.realized = r.realized_error;
        out.bound = r.theoretical_bound;
        out.queries = r.queries_used;
        out.bits = led.bits_consumed;
        out.parameter = r.oracle_parameter;
        out.value = r.value;
        out.true_value = r.true_value;
        out.detail = r.notes;
    };
    auto finish_quantile = [&](const QuantileResult& r, const BudgetLedger& led, double p,
                               double delta, std::uint64_t parameter) {
        out.realized = quantile_violation(r, p, delta);
        out.bound = 0.0;
        out.queries = r.queries_used;
        out.bits = led.bits_consumed;
        out.parameter = parameter;
        out.value = r.point;
        char buf[160];
        std::snprintf(buf, sizeof buf, "tail %.6g strict %.6g (target p %.6g delta %.6g)",
                      r.tail_at_point, r.strict_tail_at_point, p, delta);
        out.detail = buf;
    };

    if (name == "vector_mean") {
        auto registry = std::make_shared<std::vector<OraclePtr>>();
        VectorOracleFactory per_coord = [&](std::size_t i, const DistPtr& d) {
            return logging_factory(make_factory(setup, d, mix_seed(run_seed, i)), registry);
        };
        VectorEstimateReport r = vector_mean(inst.coords, eps, prm.B, per_coord);
        out.realized = r.l2_error;
        out.bound = r.theoretical_bound;
        out.queries = r.queries_used;
        out.parameter = r.oracle_parameter;
        for (const auto& o : *registry) out.bits += o->ledger().bits_consumed;
        char buf[64];
        std::snprintf(buf, sizeof buf, "l2 error over %zu coordinates", r.estimate.size());
        out.detail = buf;
        return out;
    }

    const Query& q = *inst.query;
    if (name == "naive_mean" || name == "dyadic_mean") {
        OraclePtr o = make_oracle(setup, inst.dist, prm.n, run_seed);
        EstimateReport r = name == "naive_mean" ? naive_mean(*o, q) : dyadic_mean(*o, q);
        finish_report(r, o->ledger());
        return out;
    }
    if (name == "quantile_search" || name == "grid_quantile" || name == "tail_quantile" ||
        name == "approximate_median") {
        double p = prm.p, delta = prm.delta;
        std::uint64_t n;
        if (name == "tail_quantile") {
            n = prm.n;
            p = 16.0 / static_cast<double>(n);
            delta = 8.0 / static_cast<double>(n);
        } else if (name == "approximate_median") {
            p = 0.5;
            delta = 1.0 / 6.0;
            n = 72;
        } else {
            n = quantile_parameter(p, delta);
        }
        OraclePtr o = make_oracle(setup, inst.dist, n, run_seed);
        QuantileResult r;
        if (name == "quantile_search") r = quantile_search(*o, q, p, delta);
        else if (name == "grid_quantile") r = grid_quantile(*o, q, prm.zeta, p, delta);
        else if (name == "tail_quantile") r = tail_quantile(*o, q, n);
        else r = approximate_median(*o, q);
        finish_quantile(r, o->ledger(), p, delta, n);
        return out;
    }

    auto registry = std::make_shared<std::vector<OraclePtr>>();
    OracleFactory factory = logging_factory(make_factory(setup, inst.dist, run_seed), registry);
    EstimateReport r;
    if (name == "known_bound_mean") r = known_bound_mean(factory, q, prm.B, eps);
    else if (name == "nonneg_mean") r = nonneg_mean(factory, q, prm.n, prm.zeta, prm.B);
    else if (name == "signed_mean") r = signed_mean(factory, q, prm.n, prm.zeta, prm.B);
    else if (name == "relative_accuracy_mean")
        r = relative_accuracy_mean(factory, q, eps, prm.zeta, prm.B);
    else fail("unknown estimator: " + name);
    BudgetLedger total;
    for (const auto& o : *registry) total.bits_consumed += o->ledger().bits_consumed;
    finish_report(r, total);
    return out;
}

}  // namespace

Query build_query(DistPtr dist, const nlohmann::json& spec) {
    std::string kind = spec.is_object() ? spec.value("kind", "identity") : "identity";
    std::vector<double> values;
    if (kind == "identity") {
        values = dist->support();
    } else if (kind == "affine") {
        double scale = number_or(spec, "scale", 1.0);
        double shift = number_or(spec, "shift", 0.0);
        for (double x : dist->support()) values.push_back(scale * x + shift);
    } else if (kind == "absolute") {
        for (double x : dist->support()) values.push_back(std::abs(x));
    } else if (kind == "file") {
        if (!spec.contains("path") || !spec["path"].is_string())
            fail("query kind 'file' requires a 'path' string");
        std::ifstream in(spec["path"].get<std::string>());
        if (!in) throw std::runtime_error("cannot open query file");
        double v;
        while (in >> v) values.push_back(v);
        if (values.size() != dist->size())
            fail("query file must hold exactly one value per support point");
    } else {
        fail("unknown query kind: " + kind);
    }
    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    lo = number_or(spec, "lo", lo);
    hi = number_or(spec, "hi", hi);
    return Query(std::move(dist), std::move(values), lo, hi);
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail("top level must be an object");
    ExperimentConfig c;
    if (!j.contains("distribution")) fail("missing 'distribution'");
    c.distribution = j["distribution"];
    c.query = j.value("query", nlohmann::json::object());
    if (!j.contains("estimator") || !j["estimator"].is_object() ||
        !j["estimator"].contains("name"))
        fail("missing 'estimator' object with a 'name'");
    c.estimator_params = j["estimator"];
    c.estimator_name = c.estimator_params["name"].get<std::string>();
    nlohmann::json oracle = j.value("oracle", nlohmann::json::object());
    c.oracle_model = oracle.value("model", "vstat");
    c.policy = oracle.value("policy", "honest-exact");
    c.comm_q_total = static_cast<std::uint64_t>(number_or(oracle, "q_total", 100.0));
    c.comm_delta = number_or(oracle, "delta", 0.05);
    c.trials = j.contains("trials") ? need_uint(j, "trials", "config") : 1;
    c.seed = j.contains("seed") ? need_uint(j, "seed", "config") : 0;
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        if (s.contains("n"))
            for (const auto& v : s["n"]) c.sweep_n.push_back(v.get<std::uint64_t>());
        if (s.contains("policy"))
            for (const auto& v : s["policy"]) c.sweep_policy.push_back(v.get<std::string>());
        if (s.contains("eps"))
            for (const auto& v : s["eps"]) c.sweep_eps.push_back(v.get<double>());
    }
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

void validate_config(const ExperimentConfig& config) {
    if (config.trials < 1) fail("trials must be at least 1");
    if (config.oracle_model != "vstat" && config.oracle_model != "stat" &&
        config.oracle_model != "comm-sim")
        fail("unknown oracle model: " + config.oracle_model);
    policy_from_name(config.policy);
    for (const auto& p : config.sweep_policy) policy_from_name(p);
    if (config.oracle_model == "comm-sim") {
        if (config.comm_q_total < 1) fail("comm-sim: q_total must be at least 1");
        if (config.comm_delta <= 0.0 || config.comm_delta >= 1.0)
            fail("comm-sim: delta must lie in (0, 1)");
    }

    Instance inst = build_instance(config);
    Params prm = read_params(config.estimator_name, config.estimator_params);
    const std::string& name = config.estimator_name;

    std::vector<double> eps_values =
        config.sweep_eps.empty() ? std::vector<double>{prm.eps} : config.sweep_eps;
    std::vector<std::uint64_t> n_values =
        config.sweep_n.empty() ? std::vector<std::uint64_t>{prm.n} : config.sweep_n;

    // Estimator preconditions, checked against exact moments up front.
    if (name == "vector_mean") {
        double total_var = 0.0, total_second = 0.0;
        for (const auto& d : inst.coords) {
            Moments m = exact_moments(Query::identity(d));
            total_var += m.variance;
            total_second += m.second_moment;
        }
        if (total_var > 1.0 + 1e-9) fail("vector_mean: total variance must be at most 1");
        if (total_second > prm.B * prm.B * (1.0 + 1e-12))
            fail("vector_mean: total second moment exceeds B^2");
        for (double e : eps_values)
            if (e <= 0.0 || prm.B <= e) fail("vector_mean: need 0 < eps < B");
        return;
    }

    Moments m = exact_moments(*inst.query);
    auto check_nonneg = [&]() {
        if (*std::min_element(inst.query->values().begin(), inst.query->values().end()) < 0.0)
            fail(name + ": query values must be nonnegative");
    };
    auto check_B = [&]() {
        if (prm.B <= 0.0) fail(name + ": B must be positive");
        if (m.second_moment > prm.B * prm.B * (1.0 + 1e-12))
            fail(name + ": E[q^2] exceeds B^2");
    };
    if (name == "naive_mean" || name == "dyadic_mean") {
        for (auto n : n_values)
            if (n < (name == "naive_mean" ? 1u : 2u)) fail(name + ": oracle parameter too small");
        if (name == "dyadic_mean") check_nonneg();
    } else if (name == "known_bound_mean") {
        check_nonneg();
        check_B();
        for (double e : eps_values)
            if (e <= 0.0 || e > prm.B / 16.0) fail("known_bound_mean: eps must lie in (0, B/16]");
    } else if (name == "quantile_search" || name == "grid_quantile") {
        if (prm.delta <= 0.0 || prm.p < 2.0 * prm.delta || prm.p > 1.0)
            fail(name + ": need 1 >= p >= 2*delta > 0");
        if (name == "grid_quantile" && prm.zeta <= 0.0) fail("grid_quantile: zeta must be positive");
    } else if (name == "tail_quantile") {
        for (auto n : n_values)
            if (n < 32) fail("tail_quantile: n must be at least 32");
    } else if (name == "approximate_median") {
        // no parameters
    } else if (name == "nonneg_mean" || name == "signed_mean") {
        if (name == "nonneg_mean") check_nonneg();
        check_B();
        if (prm.zeta <= 0.0) fail(name + ": zeta must be positive");
        for (auto n : n_values)
            if (n < 32) fail(name + ": n must be at least 32");
    } else if (name == "relative_accuracy_mean") {
        check_B();
        if (prm.zeta <= 0.0 || prm.B <= prm.zeta)
            fail("relative_accuracy_mean: need B > zeta > 0");
        for (double e : eps_values)
            if (e <= 0.0 || e >= 1.0) fail("relative_accuracy_mean: eps must lie in (0, 1)");
    } else {
        fail("unknown estimator: " + name);
    }
}

std::vector<TrialReport> run_trials(const ExperimentConfig& config, bool collect_timing) {
    validate_config(config);
    Instance inst = build_instance(config);
    Params prm = read_params(config.estimator_name, config.estimator_params);

    std::vector<std::string> policies =
        config.sweep_policy.empty() ? std::vector<std::string>{config.policy}
                                    : config.sweep_policy;
    std::vector<std::uint64_t> n_values =
        config.sweep_n.empty() ? std::vector<std::uint64_t>{prm.n} : config.sweep_n;
    std::vector<double> eps_values =
        config.sweep_eps.empty() ? std::vector<double>{0.0} : config.sweep_eps;

    std::vector<TrialReport> reports;
    std::uint64_t counter = 0;
    for (const auto& policy : policies) {
        OracleSetup setup;
        setup.model = config.oracle_model;
        setup.policy = policy_from_name(policy);
        setup.q_total = config.comm_q_total;
        setup.comm_delta = config.comm_delta;
        for (auto n : n_values) {
            Params cell = prm;
            cell.n = n;
            for (double eps : eps_values) {
                for (std::uint64_t trial = 0; trial < config.trials; ++trial) {
                    std::uint64_t run_seed = mix_seed(config.seed, counter++);
                    auto started = std::chrono::steady_clock::now();
                    CellOutcome o = run_cell(config, inst, setup, cell, eps, run_seed);
                    TrialReport rep;
                    rep.row.trial = trial;
                    rep.row.estimator = config.estimator_name;
                    rep.row.policy = config.oracle_model == "comm-sim" ? "sampled" : policy;
                    rep.row.n = o.parameter;
                    rep.row.realized_error = o.realized;
                    rep.row.theoretical_bound = o.bound;
                    rep.row.queries = o.queries;
                    rep.row.bits = o.bits;
                    if (collect_timing) {
                        auto stopped = std::chrono::steady_clock::now();
                        rep.row.wall_time_ms =
                            std::chrono::duration<double, std::milli>(stopped - started).count();
                    }
                    rep.value = o.value;
                    rep.true_value = o.true_value;
                    rep.detail = std::move(o.detail);
                    reports.push_back(std::move(rep));
                }
            }
        }
    }
    return reports;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config, bool collect_timing) {
    std::vector<TrialReport> reports = run_trials(config, collect_timing);
    std::vector<ResultRow> rows;
    rows.reserve(reports.size());
    for (auto& r : reports) rows.push_back(std::move(r.row));
    return rows;
}

CompareReport compare_naive(const ExperimentConfig& config) {
    if (config.estimator_name == "naive_mean")
        fail("compare: pick an estimator other than naive_mean");
    if (is_vector_estimator(config.estimator_name))
        fail("compare: scalar estimators only");

    ExperimentConfig naive = config;
    naive.estimator_name = "naive_mean";
    naive.estimator_params = nlohmann::json{{"name", "naive_mean"},
                                            {"n", config.estimator_params.value("n", 0)}};
    if (!config.sweep_n.empty()) naive.sweep_n = config.sweep_n;

    std::vector<ResultRow> a = run_experiment(naive);
    std::vector<ResultRow> b = run_experiment(config);
    if (a.size() != b.size()) fail("compare: sweep shapes disagree");

    CompareReport rep;
    double na = 0.0, eb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        rep.rows.push_back(a[i]);
        rep.rows.push_back(b[i]);
        na += a[i].realized_error;
        eb += b[i].realized_error;
    }
    rep.naive_error = na / static_cast<double>(a.size());
    rep.estimator_error = eb / static_cast<double>(b.size());
    if (rep.estimator_error > 0.0) {
        rep.ratio = rep.naive_error / rep.estimator_error;
    } else if (rep.naive_error > 0.0) {
        rep.ratio = std::numeric_limits<double>::infinity();
    } else {
        rep.ratio = std::numeric_limits<double>::quiet_NaN();
        rep.defined = false;
    }
    return rep;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string emit_results(const std::vector<ResultRow>& rows, const std::string& format) {
    if (format == "csv") {
        std::string out =
            "trial,estimator,policy,n,realized_error,theoretical_bound,queries,bits,"
            "wall_time_ms\n";
        for (const auto& r : rows) {
            out += std::to_string(r.trial) + ',' + r.estimator + ',' + r.policy + ',' +
                   std::to_string(r.n) + ',' + fmt17(r.realized_error) + ',' +
                   fmt17(r.theoretical_bound) + ',' + std::to_string(r.queries) + ',' +
                   std::to_string(r.bits) + ',' + fmt17(r.wall_time_ms) + '\n';
        }
        return out;
    }
    if (format == "json") {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : rows) {
            arr.push_back({{"trial", r.trial},
                           {"estimator", r.estimator},
                           {"policy", r.policy},
                           {"n", r.n},
                           {"realized_error", r.realized_error},
                           {"theoretical_bound", r.theoretical_bound},
                           {"queries", r.queries},
                           {"bits", r.bits},
                           {"wall_time_ms", r.wall_time_ms}});
        }
        return arr.dump(2) + "\n";
    }
    throw std::invalid_argument("emit_results: format must be 'csv' or 'json'");
}

void write_results(const std::vector<ResultRow>& rows, const std::string& format,
                   const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << emit_results(rows, format);
}

std::vector<ResultRow> rows_from_json(const nlohmann::json& j) {
    std::vector<ResultRow> rows;
    for (const auto& e : j) {
        ResultRow r;
        r.trial = e.at("trial").get<std::uint64_t>();
        r.estimator = e.at("estimator").get<std::string>();
        r.policy = e.at("policy").get<std::string>();
        r.n = e.at("n").get<std::uint64_t>();
        r.realized_error = e.at("realized_error").get<double>();
        r.theoretical_bound = e.at("theoretical_bound").get<double>();
        r.queries = e.at("queries").get<std::uint64_t>();
        r.bits = e.at("bits").get<std::uint64_t>();
        r.wall_time_ms = e.at("wall_time_ms").get<double>();
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace sqmean
