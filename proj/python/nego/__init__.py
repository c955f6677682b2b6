import json

from ._nego import (
    InfeasibleTarget,
    OversightCapError,
    SafetyCapError,
    Scenario,
    SchemaError,
    b_max,
    centralized,
    delta_misalignment,
    eigen_complexity,
    fcfs,
    gap_bound,
    gini,
    kappa_for_gap,
    kappa_for_rounds,
    round_bound,
    rounds_csv,
    run_taco,
    sigma_max,
    spearman,
    system_optimum,
    voting,
)
from . import _nego

__all__ = [
    "InfeasibleTarget",
    "OversightCapError",
    "SafetyCapError",
    "Scenario",
    "SchemaError",
    "b_max",
    "centralized",
    "delta_misalignment",
    "eigen_complexity",
    "fcfs",
    "gap_bound",
    "generate_scenario",
    "gini",
    "kappa_for_gap",
    "kappa_for_rounds",
    "round_bound",
    "rounds_csv",
    "run_monte_carlo",
    "run_oversight",
    "run_taco",
    "sigma_max",
    "spearman",
    "system_optimum",
    "verify_bounds",
    "voting",
]


def generate_scenario(sectors=3, flights=5, options=3, grid=4, horizon=8, seed=0):
    """Generated CTOP instance as a Scenario."""
    text = _nego.generate_scenario(sectors, flights, options, grid, horizon, seed)
    return Scenario.from_json(text)


def run_oversight(scenario, reserves, kappa, seed=0, solver="exhaustive", restarts=20, moves=1000,
                  max_rounds=None, raw=False):
    """Run record as a dict, or JSON text when raw is set."""
    text = _nego.run_oversight(scenario, list(reserves), kappa, seed, solver, restarts, moves, max_rounds)
    return text if raw else json.loads(text)


def verify_bounds(record, kappa=None):
    """Bound report for a run record given as a dict or JSON text."""
    text = record if isinstance(record, str) else json.dumps(record)
    return json.loads(_nego.verify_bounds(text, kappa))


def run_monte_carlo(config):
    """Returns (results dict, csv_text) for a config dict or JSON text."""
    text = config if isinstance(config, str) else json.dumps(config)
    records, csv_text = _nego.run_monte_carlo(text)
    return json.loads(records), csv_text
