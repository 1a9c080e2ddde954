"""Base station array geometries, steering vectors and antenna patterns."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

V, H = "V", "H"

CYL_RINGS = 4
CYL_POSITIONS = 16
PLANAR_ROWS = 4
PLANAR_COLS = 25


def wavelength(freq_hz: float) -> float:
    return SPEED_OF_LIGHT / freq_hz


@dataclass(frozen=True)
class ElementPattern:
    """Cosine-power power pattern with a front-to-back ratio.

    ``P(theta) = (1 - 1/R) * ((1 + cos theta) / 2) ** q + 1/R`` where theta
    is the angle from boresight; ``P(0) = 1`` and ``P(pi) = 1/R``.
    """

    exponent: float = 2.0
    front_to_back_db: float = 10.0

    def power(self, cos_theta) -> np.ndarray:
        r = 10.0 ** (self.front_to_back_db / 10.0)
        c = np.clip(cos_theta, -1.0, 1.0)
        return (1.0 - 1.0 / r) * ((1.0 + c) / 2.0) ** self.exponent + 1.0 / r


ISOTROPIC = None


@dataclass(frozen=True)
class Element:
    position: tuple
    boresight: tuple
    polarization: str
    port: int
    pair_id: Optional[int] = None


@dataclass(frozen=True)
class ArrayGeometry:
    """Element positions (m), boresights and polarizations, ports numbered 1..M."""

    elements: tuple
    carrier_freq_hz: float
    array_id: str = ""
    pattern: Optional[ElementPattern] = ISOTROPIC

    def __post_init__(self):
        ports = [e.port for e in self.elements]
        if sorted(ports) != list(range(1, len(ports) + 1)):
            raise ValueError("ports must be exactly 1..M_total")
        for e in self.elements:
            if not np.all(np.isfinite(e.position)):
                raise ValueError(f"port {e.port}: non-finite position")
            if abs(np.linalg.norm(e.boresight) - 1.0) > 1e-9:
                raise ValueError(f"port {e.port}: boresight is not a unit vector")
            if e.polarization not in (V, H, None):
                raise ValueError(f"port {e.port}: unknown polarization {e.polarization!r}")
        object.__setattr__(self, "elements", tuple(sorted(self.elements, key=lambda e: e.port)))

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def n_ports(self) -> int:
        return len(self.elements)

    @property
    def wavelength(self) -> float:
        return wavelength(self.carrier_freq_hz)

    @property
    def positions(self) -> np.ndarray:
        return np.array([e.position for e in self.elements], dtype=float)

    @property
    def boresights(self) -> np.ndarray:
        return np.array([e.boresight for e in self.elements], dtype=float)

    @property
    def polarizations(self) -> list:
        return [e.polarization for e in self.elements]

    @property
    def has_polarization(self) -> bool:
        return all(e.polarization in (V, H) for e in self.elements)

    def indices(self, polarization: str) -> np.ndarray:
        """0-based indices of ports with the given polarization."""
        return np.array([i for i, e in enumerate(self.elements) if e.polarization == polarization], dtype=int)

    def pairs(self) -> list[tuple[int, int]]:
        """0-based ``(V index, H index)`` pairs sharing a ``pair_id``, by pair id."""
        groups: dict = {}
        for i, e in enumerate(self.elements):
            if e.pair_id is not None:
                groups.setdefault(e.pair_id, {})[e.polarization] = i
        out = []
        for pid in sorted(groups):
            g = groups[pid]
            if set(g) != {V, H}:
                raise ValueError(f"pair {pid} is not a V/H pair")
            out.append((g[V], g[H]))
        if not out:
            raise ValueError(f"array {self.array_id!r} has no V/H port pairing")
        return out

    def element_gain(self, directions: np.ndarray) -> np.ndarray:
        """Amplitude gain of every element towards unit ``directions`` (..., 3) -> (..., M)."""
        d = np.asarray(directions, dtype=float)
        if self.pattern is None:
            return np.ones(d.shape[:-1] + (self.n_ports,))
        cos_t = d @ self.boresights.T
        return np.sqrt(self.pattern.power(cos_t))

    def to_json(self) -> str:
        return json.dumps(
            {
                "array_id": self.array_id,
                "carrier_freq_hz": self.carrier_freq_hz,
                "elements": [
                    {
                        "port": e.port,
                        "position_m": list(e.position),
                        "boresight": list(e.boresight),
                        "polarization": e.polarization,
                        "pair_id": e.pair_id,
                    }
                    for e in self.elements
                ],
            },
            indent=2,
        )


def cylindrical_port(ring: int, position: int, polarization: str) -> int:
    """Port number (1-based) of a cylinder element; lower ring first, V on odd ports."""
    if not (0 <= ring < CYL_RINGS and 0 <= position < CYL_POSITIONS) or polarization not in (V, H):
        raise ValueError("invalid cylinder element")
    return ring * 2 * CYL_POSITIONS + 2 * position + (1 if polarization == V else 2)


def cylindrical_element(port: int) -> tuple[int, int, str]:
    """Inverse of :func:`cylindrical_port`."""
    if not 1 <= port <= 2 * CYL_RINGS * CYL_POSITIONS:
        raise ValueError(f"port {port} out of range")
    k = port - 1
    ring, rem = divmod(k, 2 * CYL_POSITIONS)
    position, pol = divmod(rem, 2)
    return ring, position, V if pol == 0 else H


def build_cylindrical(carrier_freq_hz: float = 2.6e9, pattern: Optional[ElementPattern] = None) -> ArrayGeometry:
    """4 rings of 16 dual-polarized patches, 128 ports.

    Adjacent positions on a ring are half a wavelength apart along the
    circumference, and the rings are half a wavelength apart vertically.
    """
    lam = wavelength(carrier_freq_hz)
    radius = CYL_POSITIONS * (lam / 2) / (2 * math.pi)
    elements = []
    for ring in range(CYL_RINGS):
        z = ring * lam / 2
        for pos in range(CYL_POSITIONS):
            phi = 2 * math.pi * pos / CYL_POSITIONS
            bore = (math.cos(phi), math.sin(phi), 0.0)
            xyz = (radius * bore[0], radius * bore[1], z)
            for pol in (V, H):
                elements.append(
                    Element(xyz, bore, pol, cylindrical_port(ring, pos, pol), pair_id=ring * CYL_POSITIONS + pos)
                )
    return ArrayGeometry(tuple(elements), carrier_freq_hz, "cyl128", pattern or ElementPattern())


def build_planar(carrier_freq_hz: float = 3.7e9, pattern: Optional[ElementPattern] = None) -> ArrayGeometry:
    """4 x 25 patches in the y-z plane facing +x, 100 ports numbered row by row.

    Polarization alternates element by element through the row-major
    numbering, which gives a checkerboard of 50 V and 50 H elements.
    Consecutive ports (1, 2), (3, 4), ... form the V/H pairs.
    """
    lam = wavelength(carrier_freq_hz)
    elements = []
    for row in range(PLANAR_ROWS):
        for col in range(PLANAR_COLS):
            k = row * PLANAR_COLS + col
            xyz = (0.0, col * lam / 2, row * lam / 2)
            pol = V if k % 2 == 0 else H
            elements.append(Element(xyz, (1.0, 0.0, 0.0), pol, k + 1, pair_id=k // 2))
    return ArrayGeometry(tuple(elements), carrier_freq_hz, "planar100", pattern or ElementPattern())


def build_linear(
    n: int, carrier_freq_hz: float = 2.6e9, spacing_wavelengths: float = 0.5, axis=(0.0, 1.0, 0.0)
) -> ArrayGeometry:
    """Uniform linear array of isotropic vertically polarized elements."""
    lam = wavelength(carrier_freq_hz)
    ax = np.asarray(axis, dtype=float)
    ax = ax / np.linalg.norm(ax)
    bore = (1.0, 0.0, 0.0) if abs(ax[0]) < 0.9 else (0.0, 0.0, 1.0)
    elements = tuple(
        Element(tuple(ax * k * spacing_wavelengths * lam), bore, V, k + 1) for k in range(n)
    )
    return ArrayGeometry(elements, carrier_freq_hz, f"linear{n}", ISOTROPIC)


def build_array(array_id: str) -> ArrayGeometry:
    if array_id == "cyl128":
        return build_cylindrical()
    if array_id == "planar100":
        return build_planar()
    if array_id.startswith("linear") and array_id[6:].isdigit():
        return build_linear(int(array_id[6:]))
    raise ValueError(f"unknown array id {array_id!r}")


def steering_vector(geometry: ArrayGeometry, direction, frequency_hz: float) -> np.ndarray:
    """Unit-magnitude plane-wave response ``exp(-j 2 pi f/c <p_m, u>)``."""
    u = np.asarray(direction, dtype=float)
    if u.shape != (3,) or abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ValueError("direction must be a 3-D unit vector")
    return steering_matrix(geometry.positions, u[None, :], frequency_hz)[0]


def steering_matrix(positions: np.ndarray, directions: np.ndarray, frequency_hz: float) -> np.ndarray:
    """Steering vectors for many directions, ``(D, 3) -> (D, M)``; no checks."""
    k = 2.0 * math.pi * frequency_hz / SPEED_OF_LIGHT
    return np.exp(-1j * k * (directions @ positions.T))


def uniform_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def steering_second_moment(
    geometry: ArrayGeometry, n_pairs: int, rng: np.random.Generator, frequency_hz: Optional[float] = None
) -> float:
    """Monte Carlo ``E{|<a(u), a(v)>|^2} / M^2`` for independent uniform directions."""
    f = frequency_hz or geometry.carrier_freq_hz
    pos = geometry.positions
    a = steering_matrix(pos, uniform_sphere(n_pairs, rng), f)
    b = steering_matrix(pos, uniform_sphere(n_pairs, rng), f)
    ip = np.sum(np.conj(a) * b, axis=1)
    return float(np.mean(np.abs(ip) ** 2) / geometry.n_ports**2)


def direction_from_angles(azimuth, elevation=0.0) -> np.ndarray:
    az = np.asarray(azimuth, dtype=float)
    el = np.asarray(elevation, dtype=float)
    return np.stack(np.broadcast_arrays(np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)), axis=-1)


@dataclass(frozen=True)
class UserAntenna:
    """User-side antenna: omni, or a directive pattern that rotates in azimuth.

    The directive boresight points at the trajectory azimuth, tilted up by
    ``tilt_deg``; its power pattern is the cosine-power form of
    :class:`ElementPattern`.  The azimuth moves linearly from
    ``initial_azimuth`` to ``initial_azimuth + total_rotation`` over the
    snapshots.
    """

    kind: str = "omni"
    exponent: float = 2.0
    front_to_back_db: float = 15.0
    tilt_deg: float = 45.0
    initial_azimuth: float = 0.0
    total_rotation: float = 0.0
    n_snapshots: int = 1

    def __post_init__(self):
        if self.kind not in ("omni", "directive"):
            raise ValueError(f"unknown user antenna kind {self.kind!r}")
        if self.n_snapshots < 1:
            raise ValueError("n_snapshots must be >= 1")

    def azimuth(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if np.any(n < 0) or np.any(n > self.n_snapshots - 1):
            raise ValueError("snapshot outside the trajectory")
        frac = n / (self.n_snapshots - 1) if self.n_snapshots > 1 else np.zeros_like(n)
        return self.initial_azimuth + self.total_rotation * frac

    def boresight(self, n) -> np.ndarray:
        return direction_from_angles(self.azimuth(n), math.radians(self.tilt_deg))

    def gain(self, n, directions) -> np.ndarray:
        """Amplitude weight towards unit ``directions``.

        ``n`` is a scalar or an array broadcastable against the leading axes
        of ``directions``.
        """
        d = np.asarray(directions, dtype=float)
        if self.kind == "omni":
            self.azimuth(n)
            return np.ones(np.broadcast_shapes(np.shape(n), d.shape[:-1]))
        bore = self.boresight(n)
        cos_t = np.sum(bore * d, axis=-1)
        pattern = ElementPattern(self.exponent, self.front_to_back_db)
        return np.sqrt(pattern.power(cos_t))


def pattern_gain(user: UserAntenna, n, direction) -> float:
    return user.gain(n, direction)
