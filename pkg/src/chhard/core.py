"""Channel tensors and the normalization / subset-gain / hardening math.

All gain statistics are computed per user over the valid (snapshot,
frequency) samples of a block of selected antennas.  Each selected subset
is normalized on its own so that the subset gain has unit mean for every
subset size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

ORDER_LABELS = (
    "original",
    "strongest_first",
    "weakest_first",
    "vertical_only",
    "horizontal_only",
    "both_alternating",
    "explicit",
)

# Relative std below which a gain series is treated as constant.
ZERO_STD_RTOL = 1e-12


class ChannelError(ValueError):
    """Invalid channel data or an operation undefined for it."""


class ZeroEnergyError(ChannelError):
    pass


@dataclass(frozen=True)
class TensorMeta:
    carrier_freq_hz: float = 2.6e9
    bandwidth_hz: float = 40e6
    snapshot_rate_hz: float = 50.0
    scenario_label: str = ""
    array_id: str = ""

    def to_dict(self) -> dict:
        return {
            "carrier_freq_hz": self.carrier_freq_hz,
            "bandwidth_hz": self.bandwidth_hz,
            "snapshot_rate_hz": self.snapshot_rate_hz,
            "scenario_label": self.scenario_label,
            "array_id": self.array_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TensorMeta":
        return cls(
            carrier_freq_hz=float(d.get("carrier_freq_hz", 2.6e9)),
            bandwidth_hz=float(d.get("bandwidth_hz", 40e6)),
            snapshot_rate_hz=float(d.get("snapshot_rate_hz", 50.0)),
            scenario_label=str(d.get("scenario_label", "")),
            array_id=str(d.get("array_id", "")),
        )


@dataclass(frozen=True)
class ChannelTensor:
    """Complex transfer samples indexed ``(user, snapshot, frequency, antenna)``.

    ``mask`` is an optional boolean ``(K, N)`` array; ``False`` marks a lost
    snapshot that is excluded from every statistic.
    """

    samples: np.ndarray
    meta: TensorMeta = field(default_factory=TensorMeta)
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        h = np.asarray(self.samples)
        if h.ndim != 4:
            raise ChannelError(f"samples must be 4-D (K, N, F, M), got shape {h.shape}")
        if min(h.shape) < 1:
            raise ChannelError(f"all dimensions must be >= 1, got {h.shape}")
        h = np.ascontiguousarray(h, dtype=np.complex128)
        if h.flags.writeable and isinstance(self.samples, np.ndarray) and np.shares_memory(h, self.samples):
            h = h.copy()  # never freeze the caller's array
        if not np.all(np.isfinite(h)):
            raise ChannelError("samples contain NaN or Inf")
        h.setflags(write=False)
        object.__setattr__(self, "samples", h)
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != h.shape[:2]:
                raise ChannelError(f"mask shape {mask.shape} does not match (K, N) = {h.shape[:2]}")
            if not mask.any(axis=1).all():
                raise ChannelError("every user needs at least one valid snapshot")
            mask = mask.copy()
            mask.setflags(write=False)
            object.__setattr__(self, "mask", mask)

    @property
    def shape(self) -> tuple:
        return self.samples.shape

    @property
    def n_users(self) -> int:
        return self.samples.shape[0]

    @property
    def n_snapshots(self) -> int:
        return self.samples.shape[1]

    @property
    def n_freqs(self) -> int:
        return self.samples.shape[2]

    @property
    def n_antennas(self) -> int:
        return self.samples.shape[3]

    def user_block(self, user: int) -> np.ndarray:
        """Valid snapshots of one user, shape ``(N_valid, F, M)``."""
        if not 0 <= user < self.n_users:
            raise ChannelError(f"user {user} out of range [0, {self.n_users})")
        block = self.samples[user]
        if self.mask is not None:
            block = block[self.mask[user]]
        return block

    def scaled(self, factor: complex) -> "ChannelTensor":
        return ChannelTensor(self.samples * factor, self.meta, self.mask)


@dataclass(frozen=True)
class SubsetSelection:
    indices: tuple
    order_label: str = "explicit"

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise ChannelError("subset selection is empty")
        if len(set(idx)) != len(idx):
            raise ChannelError("subset selection contains duplicate antennas")
        if min(idx) < 0:
            raise ChannelError("antenna indices must be non-negative")
        if self.order_label not in ORDER_LABELS:
            raise ChannelError(f"unknown order label {self.order_label!r}")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)

    def prefix(self, m: int) -> "SubsetSelection":
        return SubsetSelection(self.indices[:m], self.order_label)

    def check_bounds(self, n_antennas: int) -> None:
        if max(self.indices) >= n_antennas:
            raise ChannelError(f"antenna index {max(self.indices)} >= M_total={n_antennas}")


@dataclass(frozen=True)
class GainSeries:
    """Linear power gain ``G(n, f)`` of one user over one antenna subset."""

    values: np.ndarray
    subset_size: int

    def mean(self) -> float:
        return float(np.mean(self.values))


@dataclass(frozen=True)
class HardeningCurve:
    sizes: np.ndarray
    std_db: np.ndarray
    order_label: str
    selection: tuple = ()

    @property
    def reference_element(self) -> Optional[int]:
        return self.selection[0] if self.selection else None

    @property
    def start_db(self) -> float:
        return float(self.std_db[0])

    @property
    def end_db(self) -> float:
        return float(self.std_db[-1])

    @property
    def hardening_db(self) -> float:
        return hardening_db(self.std_db[0], self.std_db[-1])


def to_db(x, floor_db: Optional[float] = None):
    """``10*log10(x)``; zeros map to ``-inf`` unless ``floor_db`` is given."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(x)
    if floor_db is not None:
        out = np.maximum(out, floor_db)
    return out if out.ndim else float(out)


def hardening_db(start_db: float, end_db: float) -> float:
    """Change of std from the reference element to the full subset.

    Two zero-std endpoints count as no change.
    """
    if math.isinf(start_db) and math.isinf(end_db) and start_db == end_db:
        return 0.0
    return float(end_db - start_db)


def normalize(tensor: ChannelTensor, user: int, subset: SubsetSelection) -> np.ndarray:
    """Scale the selected block so its mean power per entry is exactly one.

    Returns an ``(N_valid, F, M)`` array, with antennas in subset order.
    """
    subset.check_bounds(tensor.n_antennas)
    block = tensor.user_block(user)[:, :, list(subset.indices)]
    energy = np.mean(np.abs(block) ** 2)
    if not energy > 0.0:
        raise ZeroEnergyError(f"user {user}: selected block has zero energy")
    return block / math.sqrt(energy)


def subset_gain(block: np.ndarray) -> GainSeries:
    """Average power over the antenna axis of a normalized block."""
    block = np.asarray(block)
    if block.ndim != 3:
        raise ChannelError(f"expected (N, F, M) block, got shape {block.shape}")
    g = np.mean(np.abs(block) ** 2, axis=2)
    return GainSeries(g, block.shape[2])


def std_gain(series: GainSeries) -> tuple[float, float]:
    """Population std of the gain around its mean, linear and in dB.

    A constant series returns ``(0.0, -inf)``.
    """
    g = np.asarray(series.values, dtype=float)
    if g.size < 2:
        raise ChannelError("std of channel gain needs at least two (n, f) samples")
    mu = np.mean(g)
    std = float(np.sqrt(np.mean((g - mu) ** 2)))
    if std <= ZERO_STD_RTOL * abs(mu):
        return 0.0, -math.inf
    return std, 10.0 * math.log10(std)


def prefix_gains(tensor: ChannelTensor, user: int, selection: SubsetSelection) -> np.ndarray:
    """Subset gains of every prefix of ``selection``, shape ``(M_sel, N_valid, F)``.

    Equivalent to normalizing each prefix separately: the normalized subset
    gain of a prefix is its cumulative power divided by the (n, f) mean of
    that cumulative power.
    """
    selection.check_bounds(tensor.n_antennas)
    block = tensor.user_block(user)[:, :, list(selection.indices)]
    power = np.abs(block) ** 2
    cum = np.cumsum(power, axis=2)
    cum = np.moveaxis(cum, 2, 0)
    energy = cum.mean(axis=(1, 2))
    if not np.all(energy > 0.0):
        first = int(np.argmin(energy > 0.0))
        raise ZeroEnergyError(f"user {user}: prefix of size {first + 1} has zero energy")
    return cum / energy[:, None, None]


def hardening(tensor: ChannelTensor, user: int, selection: SubsetSelection) -> HardeningCurve:
    """Std of channel gain for subset sizes ``1..len(selection)``."""
    gains = prefix_gains(tensor, user, selection)
    flat = gains.reshape(gains.shape[0], -1)
    if flat.shape[1] < 2:
        raise ChannelError("std of channel gain needs at least two (n, f) samples")
    mu = flat.mean(axis=1)
    std = np.sqrt(np.mean((flat - mu[:, None]) ** 2, axis=1))
    std_db = np.full(std.shape, -math.inf)
    nz = std > ZERO_STD_RTOL * np.abs(mu)
    std_db[nz] = 10.0 * np.log10(std[nz])
    sizes = np.arange(1, len(selection) + 1)
    return HardeningCurve(sizes, std_db, selection.order_label, selection.indices)


def curve_from_subsets(
    tensor: ChannelTensor, user: int, subsets: Sequence[SubsetSelection]
) -> HardeningCurve:
    """Build a curve from explicit per-size subsets, normalizing each one.

    The subsets must be the prefixes of one ordered selection, sizes 1, 2, ...
    """
    if not subsets:
        raise ChannelError("no subsets given")
    full = subsets[-1]
    for m, s in enumerate(subsets, start=1):
        if len(s) != m or s.indices != full.indices[:m]:
            raise ChannelError(f"subset {m} is not the size-{m} prefix of the final selection")
    std_db = []
    for s in subsets:
        _, db = std_gain(subset_gain(normalize(tensor, user, s)))
        std_db.append(db)
    return HardeningCurve(np.arange(1, len(full) + 1), np.array(std_db), full.order_label, full.indices)


def cv_squared(series: GainSeries) -> float:
    """Empirical squared coefficient of variation of a gain series."""
    g = np.asarray(series.values, dtype=float)
    mu = np.mean(g)
    return float(np.mean((g - mu) ** 2) / mu**2)
