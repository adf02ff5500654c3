"""Synthetic decision-makers with known parameters and simulated choices.

Used to calibrate the shrinkage factor (grid-search minimizing the MSE of
estimated vs true debt-aversion parameters) and to test estimator recovery.
All outputs are pure functions of (inputs, seed); per-agent RNG streams are
derived from (seed, agent index) so execution order and parallelism cannot
change results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import ChoiceRecord
from .estimation import (
    HierarchicalConfig,
    Normal,
    PopulationDistribution,
    STATUS_CONSISTENT,
    STATUS_DISCARDED,
    STATUS_FAILED,
    estimate_all,
)
from .model import ChoiceDesign, PreferenceParams, UtilityConfig

__all__ = [
    "Normal",
    "PopulationDistribution",
    "SyntheticAgent",
    "CalibrationResult",
    "default_population",
    "sample_agents",
    "simulate_choices",
    "simulate_agents",
    "calibrate_shrinkage",
    "default_shrinkage_grid",
]


def population_to_dict(pop: PopulationDistribution) -> dict:
    names = ("alpha", "delta", "gamma", "lambda")
    return {
        "schema_version": 1,
        **{n: {"mean": m.mean, "sd": m.sd} for n, m in zip(names, pop.marginals())},
    }


def population_from_dict(doc: dict) -> PopulationDistribution:
    def norm(name):
        entry = doc[name]
        return Normal(mean=entry["mean"], sd=entry["sd"])

    return PopulationDistribution(
        alpha=norm("alpha"), delta=norm("delta"), gamma=norm("gamma"), lambda_=norm("lambda")
    )


def load_population(path) -> PopulationDistribution:
    return population_from_dict(json.loads(open(path).read()))


def save_population(path, pop: PopulationDistribution) -> None:
    with open(path, "w") as fh:
        json.dump(population_to_dict(pop), fh, indent=2)
        fh.write("\n")


def default_population() -> PopulationDistribution:
    """Placeholder population moments used by fixtures and CLI defaults.

    The moments estimated on the original lab data are not published, so
    simulation exercises ship with these documented stand-ins; every
    simulate-then-estimate test is self-consistent against them.
    """
    return PopulationDistribution(
        alpha=Normal(0.30, 0.04),
        delta=Normal(0.010, 0.002),
        gamma=Normal(1.05, 0.05),
        lambda_=Normal(1.50, 0.12),
    )

# Draws outside the model domain are rejected and redrawn: alpha below the
# log-utility limit, delta above -1, lambda strictly positive.
_ALPHA_MAX = 0.999
_DELTA_MIN = -0.999
_LAMBDA_MIN = 1e-6


@dataclass(frozen=True)
class SyntheticAgent:
    subject_id: str
    true_params: PreferenceParams
    choices: tuple


def default_shrinkage_grid(n: int = 25, lo: float = 1e-4, hi: float = 1.0) -> list[float]:
    """Logarithmic shrinkage grid, 25 points on [1e-4, 1] by default."""
    return [float(s) for s in np.geomspace(lo, hi, n)]


def _draw_truncated(rng, mean, sd, lo=None, hi=None):
    for _ in range(1000):
        x = mean + sd * rng.standard_normal()
        if (lo is None or x > lo) and (hi is None or x < hi):
            return float(x)
    raise RuntimeError(f"rejection sampling stuck for N({mean}, {sd}) on ({lo}, {hi})")


def sample_agents(pop: PopulationDistribution, mu: float, n: int, seed: int) -> list[PreferenceParams]:
    """Draw n independent parameter vectors from the population.

    lambda is redrawn until positive, alpha until below the admissible
    ceiling, delta until above -1; mu is a fixed scalar for every agent.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if mu <= 0:
        raise ValueError("mu must be positive")
    draws = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        draws.append(
            PreferenceParams(
                alpha=_draw_truncated(rng, pop.alpha.mean, pop.alpha.sd, hi=_ALPHA_MAX),
                delta=_draw_truncated(rng, pop.delta.mean, pop.delta.sd, lo=_DELTA_MIN),
                gamma=_draw_truncated(rng, pop.gamma.mean, pop.gamma.sd),
                lambda_=_draw_truncated(rng, pop.lambda_.mean, pop.lambda_.sd, lo=_LAMBDA_MIN),
                mu=mu,
            )
        )
    return draws


def _sorted_rows(mpls):
    rows, index = [], []
    for mpl_id in sorted(mpls):
        mpl = mpls[mpl_id]
        for i, row in enumerate(mpl.rows):
            rows.append(row)
            index.append((mpl_id, i))
    return rows, index


def simulate_choices(params: PreferenceParams, mpls, config: UtilityConfig, seed, subject_id="sim") -> list[ChoiceRecord]:
    """Draw one Bernoulli choice per MPL row at the row's logit probability."""
    rows, index = _sorted_rows(mpls)
    probs = ChoiceDesign(rows, config).choice_probabilities(params)
    rng = np.random.default_rng(seed)
    chosen = (rng.random(len(rows)) < probs).astype(int)
    return [
        ChoiceRecord(subject_id=subject_id, mpl_id=mpl_id, row_index=i, chosen=int(c))
        for (mpl_id, i), c in zip(index, chosen)
    ]


def simulate_agents(pop, mu, n, mpls, config, seed) -> list[SyntheticAgent]:
    """Sample n agents and simulate their full choice set over the MPL catalog."""
    params = sample_agents(pop, mu, n, seed)
    agents = []
    for i, p in enumerate(params):
        sid = f"sim{i:04d}"
        choices = simulate_choices(p, mpls, config, seed=[seed, i, 1], subject_id=sid)
        agents.append(SyntheticAgent(subject_id=sid, true_params=p, choices=tuple(choices)))
    return agents


@dataclass(frozen=True)
class CalibrationResult:
    best_s: float
    table: tuple  # rows: {s, mse, mae, n_consistent, n_discarded, n_failed, disqualified}

    def as_dicts(self):
        return [dict(row) for row in self.table]


def calibrate_shrinkage(
    pop: PopulationDistribution,
    mpls,
    config: UtilityConfig,
    grid,
    n_agents: int,
    seed: int,
    mu: float = 0.25,
    n_jobs: int = 1,
    max_failure_share: float = 0.20,
    **estimation_overrides,
) -> CalibrationResult:
    """Grid-search the shrinkage factor on simulated agents.

    One synthetic dataset is simulated, then estimated once per grid value;
    the score is the MSE of estimated vs true gamma over consistent subjects.
    Grid values whose failure share (discarded + failed) exceeds
    ``max_failure_share`` are disqualified.  Ties break toward smaller s.
    """
    grid = [float(s) for s in grid]
    if not grid:
        raise ValueError("shrinkage grid must be non-empty")
    if any(s < 0 for s in grid):
        raise ValueError("shrinkage values must be nonnegative")

    agents = simulate_agents(pop, mu, n_agents, mpls, config, seed)
    true_gamma = {a.subject_id: a.true_params.gamma for a in agents}
    all_choices = [rec for a in agents for rec in a.choices]

    table = []
    for s in sorted(set(grid)):
        hcfg = HierarchicalConfig(population=pop, shrinkage=s, **estimation_overrides)
        estimates, _ = estimate_all(all_choices, mpls, config, hcfg, n_jobs=n_jobs)
        errors = [
            est.params.gamma - true_gamma[est.subject_id]
            for est in estimates
            if est.status == STATUS_CONSISTENT
        ]
        counts = {st: 0 for st in (STATUS_CONSISTENT, STATUS_DISCARDED, STATUS_FAILED)}
        for est in estimates:
            counts[est.status] += 1
        failure_share = (counts[STATUS_DISCARDED] + counts[STATUS_FAILED]) / n_agents
        table.append(
            {
                "s": s,
                "mse": float(np.mean(np.square(errors))) if errors else None,
                "mae": float(np.mean(np.abs(errors))) if errors else None,
                "n_consistent": counts[STATUS_CONSISTENT],
                "n_discarded": counts[STATUS_DISCARDED],
                "n_failed": counts[STATUS_FAILED],
                "disqualified": failure_share > max_failure_share,
            }
        )

    qualified = [row for row in table if not row["disqualified"] and row["mse"] is not None]
    if not qualified:
        raise RuntimeError("every shrinkage value was disqualified (too many estimation failures)")
    best = min(qualified, key=lambda row: (row["mse"], row["s"]))
    return CalibrationResult(best_s=best["s"], table=tuple(tuple(r.items()) for r in table))
