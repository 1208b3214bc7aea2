"""Mean estimation under restricted oracle access.

Thin wrapper over the compiled module: distributions, oracle simulators,
estimators, and the experiment runner. Configs cross the boundary as JSON,
so dict arguments are accepted everywhere a config is expected.
"""

import json as _json

from ._sqmean import (  # noqa: F401
    BudgetLedger,
    Distribution,
    EstimateReport,
    Moments,
    Oracle,
    OracleFactory,
    QuantileResult,
    Query,
    VectorEstimateReport,
    approximate_median,
    clamp,
    comm_factory,
    comm_vstat_oracle,
    discretize_round_down,
    discretized_gaussian,
    discretized_lognormal,
    discretized_pareto,
    dyadic_mean,
    exact_moments,
    exact_tail,
    generate_distribution,
    grid_quantile,
    known_bound_mean,
    load_distribution,
    mix_seed,
    naive_mean,
    nonneg_mean,
    quantile_search,
    relative_accuracy_mean,
    residual,
    run_acceptance,
    signed_mean,
    splitmix64,
    stat_factory,
    stat_oracle,
    tail_quantile,
    two_point,
    uniform_grid,
    vector_mean,
    vstat_factory,
    vstat_oracle,
)
from ._sqmean import compare_naive as _compare_naive
from ._sqmean import run_experiment as _run_experiment

__version__ = "0.1.0"


def _as_json(config):
    if isinstance(config, str):
        return config
    return _json.dumps(config)


def run_experiment(config, collect_timing=False):
    """Run a config (dict or JSON text); returns result rows as dicts."""
    return _json.loads(_run_experiment(_as_json(config), collect_timing))


def compare_naive(config):
    """Compare naive_mean with the configured estimator on one instance."""
    out = _compare_naive(_as_json(config))
    out["rows"] = _json.loads(out.pop("rows_json"))
    return out
