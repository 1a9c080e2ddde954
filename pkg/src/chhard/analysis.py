"""Hardening analysis procedures on channel tensors.

Antenna selection orders, hardening curves, CDFs of the normalized gain,
per-antenna gain maps, time/frequency spreads, V/H gain-ratio statistics
and cross-user aggregation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .arrays import H, V, ArrayGeometry, build_array
from .core import (
    ChannelError,
    ChannelTensor,
    GainSeries,
    HardeningCurve,
    SubsetSelection,
    hardening,
    normalize,
    subset_gain,
    to_db,
)

ORDER_KINDS = ("original", "strongest_first", "weakest_first", "vertical_only", "horizontal_only", "both_alternating")
POLARIZATION_KINDS = ("vertical_only", "horizontal_only", "both_alternating")

# Gains below this are clipped when expressed in dB.
GAIN_FLOOR_DB = -100.0


@dataclass(frozen=True)
class SelectionOrderSpec:
    kind: str

    def __post_init__(self):
        if self.kind not in ORDER_KINDS:
            raise ChannelError(f"unknown selection order {self.kind!r}")


@dataclass(frozen=True)
class PolRatioStats:
    mean_db: float
    std_db: float
    n_samples: int


@dataclass(frozen=True)
class ScenarioSummary:
    mean_db: float
    max_db: float


def resolve_geometry(tensor: ChannelTensor, geometry: Optional[ArrayGeometry]) -> Optional[ArrayGeometry]:
    if geometry is not None:
        if geometry.n_ports != tensor.n_antennas:
            raise ChannelError(f"geometry has {geometry.n_ports} ports, tensor has {tensor.n_antennas} antennas")
        return geometry
    try:
        geometry = build_array(tensor.meta.array_id)
    except ValueError:
        return None
    return geometry if geometry.n_ports == tensor.n_antennas else None


def antenna_mean_gain(tensor: ChannelTensor, user: int) -> np.ndarray:
    """Un-normalized power per antenna, averaged linearly over snapshots and frequencies."""
    return np.mean(np.abs(tensor.user_block(user)) ** 2, axis=(0, 1))


def order_antennas(
    tensor: ChannelTensor,
    user: int,
    spec: SelectionOrderSpec | str,
    geometry: Optional[ArrayGeometry] = None,
) -> SubsetSelection:
    """Order in which antennas are added to the subset.

    Gain orders rank on the linear average power and break ties by
    ascending port, in both directions.  ``both_alternating`` takes one
    port per V/H pair, starting with V and alternating.
    """
    kind = spec.kind if isinstance(spec, SelectionOrderSpec) else SelectionOrderSpec(spec).kind
    M = tensor.n_antennas
    ports = np.arange(M)
    if kind == "original":
        return SubsetSelection(tuple(ports), kind)
    if kind in ("strongest_first", "weakest_first"):
        gain = antenna_mean_gain(tensor, user)
        key = -gain if kind == "strongest_first" else gain
        return SubsetSelection(tuple(np.lexsort((ports, key))), kind)

    geometry = resolve_geometry(tensor, geometry)
    if geometry is None or not geometry.has_polarization:
        raise ChannelError(f"order {kind!r} needs an array with polarization tags")
    if kind == "vertical_only":
        return SubsetSelection(tuple(geometry.indices(V)), kind)
    if kind == "horizontal_only":
        return SubsetSelection(tuple(geometry.indices(H)), kind)
    pairs = geometry.pairs()
    return SubsetSelection(tuple(v if i % 2 == 0 else h for i, (v, h) in enumerate(pairs)), kind)


def hardening_curve(
    tensor: ChannelTensor,
    user: int,
    spec: SelectionOrderSpec | str,
    geometry: Optional[ArrayGeometry] = None,
) -> HardeningCurve:
    return hardening(tensor, user, order_antennas(tensor, user, spec, geometry))


@dataclass(frozen=True)
class EmpiricalCDF:
    """Right-continuous step CDF of a gain series, abscissa in dB."""

    x_db: np.ndarray  # sorted, with duplicates
    n: int

    def __call__(self, x_db) -> np.ndarray:
        return np.searchsorted(self.x_db, np.asarray(x_db, dtype=float), side="right") / self.n

    def steps(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct jump locations and the CDF value just after each."""
        xs, idx = np.unique(self.x_db, return_index=False, return_counts=True)
        return xs, np.cumsum(idx) / self.n

    def ks_distance(self, cdf) -> float:
        """Sup distance to a continuous reference ``cdf(x_db)``."""
        ref = cdf(self.x_db)
        i = np.arange(1, self.n + 1)
        return float(max(np.max(i / self.n - ref), np.max(ref - (i - 1) / self.n)))


def empirical_cdf(series: GainSeries, floor_db: float = GAIN_FLOOR_DB) -> EmpiricalCDF:
    g = np.asarray(series.values, dtype=float).ravel()
    if g.size == 0:
        raise ChannelError("empty gain series")
    return EmpiricalCDF(np.sort(to_db(g, floor_db)), g.size)


def exponential_cdf_db(x_db) -> np.ndarray:
    """CDF of a unit-mean exponential gain, evaluated at ``x_db``."""
    return -np.expm1(-(10.0 ** (np.asarray(x_db, dtype=float) / 10.0)))


@dataclass(frozen=True)
class GainMap:
    gain_db: np.ndarray
    median_port: int  # 0-based


def gain_map(tensor: ChannelTensor, user: int) -> GainMap:
    """Per-antenna average un-normalized gain in dB, and the median antenna.

    The median is the lower median; among antennas at exactly that gain the
    lowest port wins.
    """
    gain = antenna_mean_gain(tensor, user)
    med = np.sort(gain)[(gain.size - 1) // 2]
    port = int(np.flatnonzero(gain == med)[0])
    return GainMap(to_db(gain, GAIN_FLOOR_DB), port)


def time_freq_spread(tensor: ChannelTensor, user: int, subset: SubsetSelection) -> tuple[float, float]:
    """Max-minus-min of the normalized gain in dB, over time and over frequency.

    The time spread is taken per frequency and averaged over frequencies;
    the frequency spread per snapshot and averaged over snapshots.
    """
    g = to_db(subset_gain(normalize(tensor, user, subset)).values, GAIN_FLOOR_DB)
    time_spread = float(np.mean(g.max(axis=0) - g.min(axis=0)))
    freq_spread = float(np.mean(g.max(axis=1) - g.min(axis=1)))
    return time_spread, freq_spread


def pol_ratio_db(tensor: ChannelTensor, user: int, geometry: Optional[ArrayGeometry] = None) -> np.ndarray:
    """V/H power ratio in dB for every snapshot, frequency and V/H element pair."""
    geometry = resolve_geometry(tensor, geometry)
    if geometry is None or not geometry.has_polarization:
        raise ChannelError("V/H ratio needs an array with polarization tags")
    pairs = np.array(geometry.pairs())
    p = np.abs(tensor.user_block(user)) ** 2
    return to_db(p[:, :, pairs[:, 0]], GAIN_FLOOR_DB) - to_db(p[:, :, pairs[:, 1]], GAIN_FLOOR_DB)


def pol_ratio_stats(tensor: ChannelTensor, user: int, geometry: Optional[ArrayGeometry] = None) -> PolRatioStats:
    r = pol_ratio_db(tensor, user, geometry)
    return PolRatioStats(float(np.mean(r)), float(np.std(r)), int(r.size))


def curve_delta(curve: HardeningCurve | np.ndarray) -> np.ndarray:
    """Change of std_db from m-1 to m antennas, for m = 2..M."""
    std = curve.std_db if isinstance(curve, HardeningCurve) else np.asarray(curve, dtype=float)
    if std.size < 2:
        raise ChannelError("curve needs at least two points")
    with np.errstate(invalid="ignore"):
        d = np.diff(std)
    # two zero-std neighbours are no change
    d[np.isnan(d)] = 0.0
    return d


def average_std_db(curves: Sequence[HardeningCurve | np.ndarray]) -> np.ndarray:
    """Arithmetic mean of std_db across curves, per subset size."""
    rows = [np.asarray(c.std_db if isinstance(c, HardeningCurve) else c, dtype=float) for c in curves]
    if not rows or len({r.shape for r in rows}) != 1 or rows[0].ndim != 1:
        raise ChannelError("curves must share one length")
    arr = np.stack(rows)
    if arr.ndim != 2:
        raise ChannelError("curves must share one length")
    return arr.mean(axis=0)


def average_delta(curves: Sequence[HardeningCurve | np.ndarray]) -> np.ndarray:
    return np.mean([curve_delta(c) for c in curves], axis=0)


def scenario_summary(tensor: ChannelTensor, user: int) -> ScenarioSummary:
    """Mean and maximum per-antenna average gain in dB (mean taken linearly)."""
    gain = antenna_mean_gain(tensor, user)
    return ScenarioSummary(float(to_db(gain.mean(), GAIN_FLOOR_DB)), float(to_db(gain.max(), GAIN_FLOOR_DB)))


def scenario_table(tensors: Mapping[str, ChannelTensor], users: Mapping[str, int]) -> dict:
    return {label: scenario_summary(t, users[label]) for label, t in tensors.items()}


def extreme_users(curves: Sequence[HardeningCurve]) -> tuple[int, int]:
    """Indices of the users with the most and the least hardening.

    Ranked by start-to-end change; the most hardening is the most negative.
    """
    h = np.array([c.hardening_db for c in curves])
    return int(np.argmin(h)), int(np.argmax(h))


def total_gain_db(tensor: ChannelTensor, user: int, subset: SubsetSelection) -> float:
    """Un-normalized channel gain summed over the subset, averaged over (n, f), dB."""
    p = np.abs(tensor.user_block(user)[:, :, list(subset.indices)]) ** 2
    return float(to_db(p.sum(axis=2).mean(), GAIN_FLOOR_DB))


def median_reference_curve(tensor: ChannelTensor, user: int) -> HardeningCurve:
    """Strongest-first curve restarted from the median-gain antenna.

    Not one of the named orders; kept for gain-map style single-antenna
    reference comparisons.
    """
    gm = gain_map(tensor, user)
    rest = order_antennas(tensor, user, "strongest_first").indices
    order = (gm.median_port,) + tuple(i for i in rest if i != gm.median_port)
    return hardening(tensor, user, SubsetSelection(order, "explicit"))


def is_monotone_non_increasing(values: np.ndarray, start: int = 0, atol: float = 0.0) -> bool:
    v = np.asarray(values, dtype=float)[start:]
    return bool(np.all(np.diff(v) <= atol))


def finite_or_none(x: float) -> Optional[float]:
    return None if x is None or not math.isfinite(x) else float(x)
