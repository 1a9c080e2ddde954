"""Closed-form channel-hardening model for M base station antennas and P paths.

``INFINITE`` (``math.inf``) stands for an unbounded antenna or path count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

INFINITE = math.inf


@dataclass(frozen=True)
class TheoryTerms:
    n_antennas: float
    n_paths: float
    path_gain_mean: float = 1.0
    path_gain_std: float = 1.0
    steering_second_moment_tx: float = 1.0
    steering_second_moment_rx: float = 1.0

    def __post_init__(self):
        _check_count(self.n_antennas, "M")
        _check_count(self.n_paths, "P")
        if self.path_gain_std < 0:
            raise ValueError("path gain std must be >= 0")
        for name in ("steering_second_moment_tx", "steering_second_moment_rx"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def _check_count(x, name: str) -> None:
    if x != INFINITE and (x < 1 or x != int(x)):
        raise ValueError(f"{name} must be a positive integer or INFINITE, got {x!r}")


def cv_squared_closed(n_antennas, n_paths) -> float:
    """CV^2 of the channel gain with CN(0,1) paths and uniform steering.

    ``(1/M)(1 - 1/P) + 1/P``, with the limits ``1/M`` for infinite P and
    ``0`` when both are infinite.
    """
    _check_count(n_antennas, "M")
    _check_count(n_paths, "P")
    inv_m = 0.0 if n_antennas == INFINITE else 1.0 / n_antennas
    inv_p = 0.0 if n_paths == INFINITE else 1.0 / n_paths
    return inv_m * (1.0 - inv_p) + inv_p


def large_scale_bound(n_paths, mean: float, std: float) -> float:
    """Large-scale fading term ``(1/P)(std/mean)^2`` for independent path gains."""
    _check_count(n_paths, "P")
    if mean == 0:
        raise ValueError("path gain mean must be nonzero")
    if n_paths == INFINITE:
        return 0.0
    return (std / mean) ** 2 / n_paths


def cv_squared_terms(terms: TheoryTerms, small_scale_path_term: float) -> float:
    """Combine the small-scale and large-scale parts of CV^2.

    ``small_scale_path_term`` is ``E{||c||^4 - ||c||_4^4} / E{||c||^2}^2``;
    it has no closed form here and is usually estimated with
    :func:`path_gain_terms_mc`.
    """
    steer = terms.steering_second_moment_tx * terms.steering_second_moment_rx
    return steer * small_scale_path_term + large_scale_bound(
        terms.n_paths, terms.path_gain_mean, terms.path_gain_std
    )


def path_gain_terms_mc(n_paths: int, n_draws: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimates of the two path-gain ratios for CN(0,1) paths.

    Returns ``(E{||c||^4 - ||c||_4^4}/E{||c||^2}^2, Var{||c||^2}/E{||c||^2}^2)``.
    For CN(0,1) gains these approach ``1 - 1/P`` and ``1/P``.
    """
    c = (rng.standard_normal((n_draws, n_paths)) + 1j * rng.standard_normal((n_draws, n_paths))) / math.sqrt(2)
    p = np.abs(c) ** 2
    s2 = p.sum(axis=1)
    s4 = (p**2).sum(axis=1)
    e2 = s2.mean()
    return float(np.mean(s2**2 - s4) / e2**2), float(np.var(s2) / e2**2)


def std_db_closed(n_antennas, n_paths) -> float:
    cv2 = cv_squared_closed(n_antennas, n_paths)
    if cv2 == 0.0:
        return -math.inf
    return 5.0 * math.log10(cv2)


def std_surface(m_grid: Sequence, p_grid: Sequence) -> np.ndarray:
    """Std of channel gain in dB, rows over antenna counts, columns over path counts."""
    if len(m_grid) == 0 or len(p_grid) == 0:
        raise ValueError("grids must be nonempty")
    return np.array([[std_db_closed(m, p) for p in p_grid] for m in m_grid])
