"""Multi-run ensembles: per-run hardening curves averaged in dB."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..analysis import average_std_db, hardening_curve
from ..arrays import ArrayGeometry
from ..core import ChannelTensor, HardeningCurve
from .seeding import RUNS, child_seed


@dataclass(frozen=True)
class RunPlan:
    runs: int = 10
    users_per_run: Optional[int] = None
    seed: int = 0
    # Reuse the base seed for every run instead of deriving one per run.
    identical_seeds: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")

    def run_seeds(self) -> list[int]:
        if self.identical_seeds:
            return [self.seed] * self.runs
        return [child_seed(self.seed, RUNS, r) for r in range(self.runs)]


@dataclass
class EnsembleResult:
    curve: HardeningCurve
    runs: list = field(default_factory=list)  # per run: list of per-user curves
    seeds: list = field(default_factory=list)

    @property
    def all_curves(self) -> list:
        return [c for run in self.runs for c in run]

    @property
    def hardening_db(self) -> float:
        return self.curve.hardening_db


def run_ensemble(
    plan: RunPlan,
    generate: Callable[[int], ChannelTensor],
    order: str = "strongest_first",
    geometry: Optional[ArrayGeometry] = None,
    users: Optional[list] = None,
) -> EnsembleResult:
    """Average std_db per subset size over runs and users.

    ``generate(seed)`` builds the tensor of one run.  Every user of every
    run contributes one curve; the ensemble curve is their arithmetic mean
    in dB.
    """
    per_run, seeds = [], plan.run_seeds()
    for seed in seeds:
        tensor = generate(seed)
        ks = users if users is not None else range(tensor.n_users)
        if plan.users_per_run is not None:
            ks = list(ks)[: plan.users_per_run]
        per_run.append([hardening_curve(tensor, k, order, geometry) for k in ks])
    flat = [c for run in per_run for c in run]
    mean = average_std_db(flat)
    curve = HardeningCurve(np.arange(1, mean.size + 1), mean, f"{order}:ensemble", ())
    return EnsembleResult(curve, per_run, seeds)
