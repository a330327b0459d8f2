"""Simulation scenarios: preset populations and seeded data generation.

Two preset families are built in.  The plain presets (pop1, pop2s, pop2m,
pop2l, pop3) share one residual scale across groups and are compared with the
null, the increasing-means order, the mixed order-with-tie model, and the
unconstrained model.  The -f presets pair trend means with group scales of
increasing heterogeneity (largest-to-smallest variance ratios 1, 11 and 25)
and are compared with the null, the increasing-means order, and the
unconstrained model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintModel, parse_model_spec
from .data import AnovaData
from .gaussian import RandomSource

MODEL_STRINGS = {
    "M0": "mu1 = mu2 = mu3 = mu4 = mu5",
    "M2": "mu1 < mu2 < mu3 < mu4 < mu5",
    "M3": "mu2 < mu1 < mu4 < {mu3 = mu5}",
    "Me": "mu1, mu2, mu3, mu4, mu5",
}

_PLAIN_MODELS = ("M0", "M2", "M3", "Me")
_HETERO_MODELS = ("M0", "M2", "Me")

_PLAIN_MEANS = {
    "pop1": (0.0, 0.0, 0.0, 0.0, 0.0),
    "pop2s": (0.0, 0.2, 0.4, 0.6, 0.8),
    "pop2m": (0.0, 0.3, 0.6, 0.9, 1.2),
    "pop2l": (0.0, 0.4, 0.8, 1.2, 1.6),
    "pop3": (2.23, 1.33, 3.23, 2.33, 3.23),
}

_HETERO_MEANS = {
    "pop1": (0.0, 0.0, 0.0, 0.0, 0.0),
    "pop2s": (0.0, 0.7, 1.4, 2.1, 2.8),
    "pop2m": (0.0, 1.1, 2.2, 3.3, 4.4),
    "pop2l": (0.0, 1.4, 2.8, 4.2, 5.6),
}

_HETERO_SDS = {
    "f1": (3.0, 3.0, 3.0, 3.0, 3.0),
    "f11": (1.4, 2.2, 3.0, 3.8, 4.6),
    "f25": (1.0, 2.0, 3.0, 4.0, 5.0),
}


@dataclass(frozen=True)
class SimScenario:
    """Population definition plus replication plan for one simulation cell."""

    name: str
    means: tuple[float, ...]
    sds: tuple[float, ...]
    n_per_group: int
    true_model: str
    reps: int
    base_seed: int

    def __post_init__(self) -> None:
        if len(self.means) != len(self.sds):
            raise ValueError("means and sds must have equal length")
        if any(s <= 0 for s in self.sds):
            raise ValueError("group scales must be positive")
        if self.n_per_group < 2 or self.reps < 1:
            raise ValueError("need n_per_group >= 2 and reps >= 1")


def preset_names() -> list[str]:
    plain = list(_PLAIN_MEANS)
    hetero = [f"{pop}-{f}" for pop in _HETERO_MEANS for f in _HETERO_SDS]
    return plain + hetero


def make_preset(name: str, n_per_group: int = 25, reps: int = 50,
                base_seed: int = 0) -> tuple[SimScenario, list[ConstraintModel]]:
    """Scenario and competing model set for a named preset."""
    if name in _PLAIN_MEANS:
        means = _PLAIN_MEANS[name]
        sds = (1.55,) * 5 if name == "pop3" else (1.0,) * 5
        model_names = _PLAIN_MODELS
    else:
        pop, _, flevel = name.partition("-")
        if pop not in _HETERO_MEANS or flevel not in _HETERO_SDS:
            raise ValueError(f"unknown preset {name!r}; choose from {preset_names()}")
        means = _HETERO_MEANS[pop]
        sds = _HETERO_SDS[flevel]
        model_names = _HETERO_MODELS
    true_model = "M0" if all(m == means[0] for m in means) else (
        "M3" if name == "pop3" else "M2")
    scenario = SimScenario(name=name, means=means, sds=sds, n_per_group=n_per_group,
                           true_model=true_model, reps=reps, base_seed=base_seed)
    models = [parse_model_spec(MODEL_STRINGS[m], J=len(means), name=m)
              for m in model_names]
    return scenario, models


def generate_scenario(scenario: SimScenario, r: int) -> AnovaData:
    """Data for replication r: y_ij = mu_j + sd_j * z, one stream per (seed, r)."""
    if not 0 <= r < scenario.reps:
        raise ValueError(f"replication index {r} outside 0..{scenario.reps - 1}")
    rng = RandomSource(scenario.base_seed, (0, r)).generator()
    J = len(scenario.means)
    nj = scenario.n_per_group
    responses = np.concatenate([
        scenario.means[j] + scenario.sds[j] * rng.standard_normal(nj)
        for j in range(J)
    ])
    groups = np.repeat(np.arange(1, J + 1), nj)
    return AnovaData(responses=responses, groups=groups)
