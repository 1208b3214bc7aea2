// Command line front end: single estimates, parameter sweeps, naive-vs-robust
// comparisons, one-bit sampling simulations, and the verification suites.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sqmean/acceptance.hpp"
#include "sqmean/experiment.hpp"

using namespace sqmean;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    std::uint64_t seed = 0;
    std::uint64_t trials = 0;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* trials_opt = nullptr;
};

void attach_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "experiment description (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    f.seed_opt = cmd->add_option("--seed", f.seed, "override the config seed");
    cmd->add_option("--out", f.out_path, "write result rows to this file");
    cmd->add_option("--format", f.format, "row format for --out or stdout")
        ->check(CLI::IsMember({"csv", "json"}));
    f.trials_opt = cmd->add_option("--trials", f.trials, "override the trial count");
}

ExperimentConfig load_config(const CommonFlags& f) {
    ExperimentConfig c = ExperimentConfig::from_file(f.config_path);
    if (f.seed_opt->count() > 0) c.seed = f.seed;
    if (f.trials_opt->count() > 0) {
        if (f.trials < 1) throw std::invalid_argument("--trials must be at least 1");
        c.trials = f.trials;
    }
    return c;
}

bool quantile_estimator(const std::string& name) {
    return name == "quantile_search" || name == "grid_quantile" || name == "tail_quantile" ||
           name == "approximate_median";
}

void print_reports(const ExperimentConfig& config, const std::vector<TrialReport>& reports) {
    std::printf("estimator %s  oracle %s  seed %llu\n", config.estimator_name.c_str(),
                config.oracle_model.c_str(), static_cast<unsigned long long>(config.seed));
    for (const auto& r : reports) {
        std::printf("trial %llu  policy %-22s n %-8llu",
                    static_cast<unsigned long long>(r.row.trial), r.row.policy.c_str(),
                    static_cast<unsigned long long>(r.row.n));
        if (quantile_estimator(config.estimator_name)) {
            std::printf("point %.17g  violation %.6g", r.value, r.row.realized_error);
        } else if (config.estimator_name == "vector_mean") {
            std::printf("l2 error %.6g  bound %.6g", r.row.realized_error,
                        r.row.theoretical_bound);
        } else {
            std::printf("value %.17g  true %.17g  error %.6g  bound %.6g", r.value,
                        r.true_value, r.row.realized_error, r.row.theoretical_bound);
        }
        std::printf("  queries %llu", static_cast<unsigned long long>(r.row.queries));
        if (r.row.bits > 0)
            std::printf("  bits %llu", static_cast<unsigned long long>(r.row.bits));
        std::printf("\n");
        if (!r.detail.empty()) std::printf("    %s\n", r.detail.c_str());
    }
}

std::vector<ResultRow> strip_rows(const std::vector<TrialReport>& reports) {
    std::vector<ResultRow> rows;
    rows.reserve(reports.size());
    for (const auto& r : reports) rows.push_back(r.row);
    return rows;
}

void deliver(const std::vector<ResultRow>& rows, const CommonFlags& f, bool to_stdout) {
    if (!f.out_path.empty()) {
        write_results(rows, f.format, f.out_path);
        std::printf("wrote %zu rows to %s\n", rows.size(), f.out_path.c_str());
    } else if (to_stdout) {
        std::fputs(emit_results(rows, f.format).c_str(), stdout);
    }
}

int run_estimate(const CommonFlags& f) {
    ExperimentConfig config = load_config(f);
    std::vector<TrialReport> reports = run_trials(config);
    print_reports(config, reports);
    deliver(strip_rows(reports), f, false);
    return 0;
}

int run_sweep(const CommonFlags& f) {
    ExperimentConfig config = load_config(f);
    deliver(run_experiment(config), f, true);
    return 0;
}

int run_compare(const CommonFlags& f) {
    ExperimentConfig config = load_config(f);
    CompareReport rep = compare_naive(config);
    std::printf("naive_mean       mean error %.17g\n", rep.naive_error);
    std::printf("%-16s mean error %.17g\n", config.estimator_name.c_str(),
                rep.estimator_error);
    if (rep.defined)
        std::printf("error ratio      %.17g\n", rep.ratio);
    else
        std::printf("error ratio      undefined (both estimators were exact)\n");
    deliver(rep.rows, f, false);
    return 0;
}

int run_simulate_comm(const CommonFlags& f) {
    ExperimentConfig config = load_config(f);
    config.oracle_model = "comm-sim";
    std::vector<TrialReport> reports = run_trials(config);
    print_reports(config, reports);
    std::uint64_t bits = 0;
    for (const auto& r : reports) bits += r.row.bits;
    std::printf("total one-bit samples consumed: %llu\n",
                static_cast<unsigned long long>(bits));
    deliver(strip_rows(reports), f, false);
    return 0;
}

int run_verify(std::uint64_t seed) {
    bool all = true;
    for (const auto& r : run_acceptance(seed)) {
        std::printf("%s  %-22s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.details.c_str());
        all = all && r.passed;
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean estimation under restricted oracle access"};
    app.require_subcommand(1);

    CommonFlags estimate_f, sweep_f, compare_f, comm_f;
    attach_flags(app.add_subcommand("estimate", "run one configured estimate and print it"),
                 estimate_f);
    attach_flags(app.add_subcommand("sweep", "run the config sweep grid, emit CSV or JSON"),
                 sweep_f);
    attach_flags(app.add_subcommand("compare",
                                    "naive mean versus the configured estimator"),
                 compare_f);
    attach_flags(app.add_subcommand(
                     "simulate-comm",
                     "answer every oracle call from one-bit samples, count the bits"),
                 comm_f);
    std::uint64_t verify_seed = kAcceptanceSeed;
    app.add_subcommand("verify", "run the verification suites, nonzero exit on violation")
        ->add_option("--seed", verify_seed, "seed for the randomized suites");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("estimate")) return run_estimate(estimate_f);
        if (app.got_subcommand("sweep")) return run_sweep(sweep_f);
        if (app.got_subcommand("compare")) return run_compare(compare_f);
        if (app.got_subcommand("simulate-comm")) return run_simulate_comm(comm_f);
        return run_verify(verify_seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
