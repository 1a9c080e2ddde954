"""Reference channel generators: i.i.d. Gaussian, keyhole and finite scatterers."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..arrays import ArrayGeometry, steering_matrix, uniform_sphere
from ..core import ChannelTensor, TensorMeta
from .seeding import PATHS, USERS, complex_normal, rng_for


def _check_dims(**dims) -> None:
    for name, v in dims.items():
        if int(v) < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")


def baseband_freqs(n_freqs: int, bandwidth_hz: float) -> np.ndarray:
    """Frequency offsets from the carrier, evenly spread over the band."""
    if n_freqs == 1:
        return np.zeros(1)
    return np.linspace(-bandwidth_hz / 2, bandwidth_hz / 2, n_freqs)


def gen_iid_gaussian(K: int, N: int, F: int, M: int, seed: int, meta: Optional[TensorMeta] = None) -> ChannelTensor:
    """Independent CN(0,1) samples over users, snapshots, frequencies and antennas."""
    _check_dims(K=K, N=N, F=F, M=M)
    h = np.empty((K, N, F, M), dtype=np.complex128)
    for k in range(K):
        h[k] = complex_normal(rng_for(seed, USERS, k), (N, F, M))
    return ChannelTensor(h, meta or TensorMeta(scenario_label="iid_gaussian", array_id=f"iid{M}"))


def gen_keyhole(N: int, F: int, M: int, seed: int, K: int = 1, meta: Optional[TensorMeta] = None) -> ChannelTensor:
    """``h_m(n,f) = g(n,f) a_m(n,f)``: one scalar CN(0,1) bottleneck shared by all antennas.

    The subset gain over M antennas has ``CV^2 = 1 + 2/M``, so the channel
    never hardens below the bottleneck's own fading.
    """
    _check_dims(K=K, N=N, F=F, M=M)
    h = np.empty((K, N, F, M), dtype=np.complex128)
    for k in range(K):
        rng = rng_for(seed, USERS, k)
        g = complex_normal(rng, (N, F, 1))
        a = complex_normal(rng, (N, F, M))
        h[k] = g * a
    return ChannelTensor(h, meta or TensorMeta(scenario_label="keyhole", array_id=f"iid{M}"))


def gen_finite_scatterer(
    P: int,
    geometry: ArrayGeometry,
    N: int,
    F: int,
    seed: int,
    tau_max_s: float = 500e-9,
    bandwidth_hz: float = 40e6,
    chunk: int = 512,
) -> ChannelTensor:
    """Sum of P plane waves with CN(0,1) gains and uniform-sphere directions.

    Each snapshot is an independent redraw of all paths, so statistics over
    snapshots are ensemble statistics.  Path ``p`` draws its gains,
    directions and delays from its own stream.
    """
    _check_dims(P=P, N=N, F=F)
    M = geometry.n_ports
    gains = np.empty((N, P), dtype=np.complex128)
    dirs = np.empty((N, P, 3))
    delays = np.empty((N, P))
    for p in range(P):
        rng = rng_for(seed, PATHS, p)
        gains[:, p] = complex_normal(rng, N)
        dirs[:, p] = uniform_sphere(N, rng)
        delays[:, p] = rng.uniform(0.0, tau_max_s, N)

    freqs = baseband_freqs(F, bandwidth_hz)
    pos = geometry.positions
    fc = geometry.carrier_freq_hz
    h = np.empty((N, F, M), dtype=np.complex128)
    for lo in range(0, N, chunk):
        hi = min(N, lo + chunk)
        a = steering_matrix(pos, dirs[lo:hi].reshape(-1, 3), fc).reshape(hi - lo, P, M)
        a *= geometry.element_gain(dirs[lo:hi])
        w = gains[lo:hi, None, :] * np.exp(-2j * math.pi * freqs[None, :, None] * delays[lo:hi, None, :])
        h[lo:hi] = w @ a
    meta = TensorMeta(
        carrier_freq_hz=fc,
        bandwidth_hz=bandwidth_hz,
        snapshot_rate_hz=0.0,
        scenario_label=f"finite_scatterer_P{P}",
        array_id=geometry.array_id,
    )
    return ChannelTensor(h[None], meta)
