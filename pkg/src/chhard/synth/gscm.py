"""Simplified COST 2100-style geometry-based stochastic channel model.

The environment is a set of clusters, each a bundle of point scatterers
around a mean direction seen from the base station.  A cluster contributes
only while the user is inside its visibility region (a disk in the user
plane), and only over a window of the array (a raised-cosine taper across
element index).  Each multipath component additionally has its own small
visibility region, which regulates its gain as the user moves.  Scatterers
are static within a run; time variation comes from user motion (path
lengths, hence phases and delays) and from the user antenna pattern as it
rotates.

Scatterer delays combine the geometric path length with a per-cluster
excess delay, uniform in ``[0, max_cluster_delay_s]``, and an exponential
intra-cluster delay.  Cluster power decays exponentially with excess delay
and carries log-normal shadowing.  A line-of-sight ray is added with power
``K`` times the visible scatterer power at the user's start position.

The parameter defaults are stand-ins: the published indoor closely-spaced
user parameterization is not reproduced here.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..arrays import SPEED_OF_LIGHT, V, ArrayGeometry, UserAntenna, direction_from_angles, steering_matrix
from ..core import ChannelTensor, TensorMeta
from .basic import baseband_freqs
from .seeding import CLUSTERS, LOS, PATHS, USERS, complex_normal, rng_for


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterParams:
    count: int = 15
    mpcs: int = 20
    azimuth_spread_deg: float = 10.0
    elevation_spread_deg: float = 5.0
    delay_spread_s: float = 40e-9
    max_cluster_delay_s: float = 500e-9
    power_decay_s: float = 200e-9
    shadowing_std_db: float = 4.0
    # Cluster mean azimuths from the base station, centred on the user area.
    azimuth_sector_deg: float = 180.0
    elevation_std_deg: float = 10.0
    min_distance_m: float = 3.0
    max_distance_m: float = 20.0


@dataclass(frozen=True)
class VisibilityParams:
    radius_m: float = 5.0
    transition_m: float = 1.0
    # Cluster visibility-region centres are uniform in a disk of this radius
    # around the user area centre.
    area_radius_m: float = 7.0
    mpc_radius_m: float = 2.0
    mpc_transition_m: float = 0.5
    taper_elements: int = 32
    # Each cluster is fully visible over a window of at least this fraction
    # of the array.
    array_min_fraction: float = 0.75
    dynamic: bool = False


@dataclass(frozen=True)
class PolarizationParams:
    xpd_db: float = 8.0
    k_factor_db: float = 0.0
    # Slant of the user antenna polarization away from vertical.
    user_slant_deg: float = 30.0


@dataclass(frozen=True)
class TrajectoryParams:
    speed_mps: float = 0.25
    snapshot_rate_hz: float = 50.0
    n_snapshots: int = 300
    # Closely-spaced users start uniformly in a disk around the area centre.
    user_distance_m: float = 10.0
    user_height_m: float = -1.0
    user_spread_m: float = 1.0


@dataclass(frozen=True)
class BandParams:
    carrier_freq_hz: float = 2.6e9
    bandwidth_hz: float = 40e6
    n_freqs: int = 129


@dataclass(frozen=True)
class UserPatternParams:
    exponent: float = 4.0
    front_to_back_db: float = 15.0
    tilt_deg: float = 45.0


@dataclass(frozen=True)
class GscmConfig:
    clusters: ClusterParams = field(default_factory=ClusterParams)
    visibility: VisibilityParams = field(default_factory=VisibilityParams)
    polarization: PolarizationParams = field(default_factory=PolarizationParams)
    trajectory: TrajectoryParams = field(default_factory=TrajectoryParams)
    band: BandParams = field(default_factory=BandParams)
    user_pattern: UserPatternParams = field(default_factory=UserPatternParams)
    n_users: int = 9
    seed: int = 0
    name: str = "indoor_closely_spaced_2_6ghz"

    def __post_init__(self):
        c, v, t, b = self.clusters, self.visibility, self.trajectory, self.band
        checks = [
            (c.count >= 1, "clusters.count >= 1"),
            (c.mpcs >= 1, "clusters.mpcs >= 1"),
            (min(c.azimuth_spread_deg, c.elevation_spread_deg, c.delay_spread_s, c.shadowing_std_db) >= 0, "cluster spreads >= 0"),
            (c.max_cluster_delay_s >= 0 and c.power_decay_s > 0, "cluster delays"),
            (0 < c.min_distance_m <= c.max_distance_m, "0 < min_distance_m <= max_distance_m"),
            (v.radius_m >= 0 and v.transition_m >= 0, "visibility radius/transition >= 0"),
            (v.mpc_radius_m >= 0 and v.mpc_transition_m >= 0, "mpc visibility >= 0"),
            (v.taper_elements >= 1, "visibility.taper_elements >= 1"),
            (0 < v.array_min_fraction <= 1, "0 < array_min_fraction <= 1"),
            (t.n_snapshots >= 1 and t.snapshot_rate_hz > 0 and t.speed_mps >= 0, "trajectory"),
            (b.n_freqs >= 1 and b.carrier_freq_hz > 0 and b.bandwidth_hz >= 0, "band"),
            (self.n_users >= 1, "n_users >= 1"),
        ]
        for ok, what in checks:
            if not ok:
                raise ConfigError(f"invalid GSCM config: {what}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GscmConfig":
        sections = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        known = {
            "clusters": ClusterParams,
            "visibility": VisibilityParams,
            "polarization": PolarizationParams,
            "trajectory": TrajectoryParams,
            "band": BandParams,
            "user_pattern": UserPatternParams,
        }
        for key, value in (d or {}).items():
            if key not in sections:
                raise ConfigError(f"unknown config key {key!r}")
            if key in known:
                sub = known[key]
                names = {f.name for f in dataclasses.fields(sub)}
                unknown = set(value or {}) - names
                if unknown:
                    raise ConfigError(f"unknown keys in {key}: {sorted(unknown)}")
                kwargs[key] = sub(**{k: _coerce(sub, k, x) for k, x in (value or {}).items()})
            else:
                kwargs[key] = value
        return cls(**kwargs)

    def replace(self, **changes) -> "GscmConfig":
        return dataclasses.replace(self, **changes)


def _coerce(section, name: str, value):
    default = {f.name: f.default for f in dataclasses.fields(section)}[name]
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int):
            if float(value) != int(float(value)):
                raise ValueError
            return int(float(value))
        if isinstance(default, float):
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{section.__name__}.{name}: bad value {value!r}") from None
    return value


def raised_cosine_edge(distance, radius: float, transition: float) -> np.ndarray:
    """1 inside ``radius``, raised-cosine roll-off to 0 over ``transition``."""
    d = np.asarray(distance, dtype=float)
    if transition <= 0:
        return (d <= radius).astype(float)
    x = np.clip((d - radius) / transition, 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * x))


def array_taper(n_elements: int, start: int, stop: int, taper: int) -> np.ndarray:
    """Power gain over element index: 1 on ``[start, stop)``, raised cosine to 0 outside."""
    m = np.arange(n_elements)
    dist = np.maximum(start - m, 0) + np.maximum(m - (stop - 1), 0)
    return raised_cosine_edge(dist, 0.0, float(taper))


@dataclass
class Environment:
    """Scatterers of one run, shared by every user."""

    scat_pos: np.ndarray  # (P, 3)
    bs_dirs: np.ndarray  # (P, 3) unit vectors base station -> scatterer
    gains: np.ndarray  # (P,) complex amplitude incl. cluster power
    extra_delay: np.ndarray  # (P,) seconds beyond the geometric path
    pol: np.ndarray  # (P, 2, 2) polarization matrix [bs_pol, user_pol]
    cluster_of: np.ndarray  # (P,) cluster index
    cluster_vr: np.ndarray  # (C, 2) visibility centres in the user plane
    mpc_vr: np.ndarray  # (P, 2)
    cluster_power: np.ndarray  # (C,)
    taper_windows: np.ndarray  # (C, 2) [start, stop) element windows


def area_centre(config: GscmConfig) -> np.ndarray:
    t = config.trajectory
    return np.array([t.user_distance_m, 0.0, t.user_height_m])


def _disk(rng: np.random.Generator, radius: float) -> np.ndarray:
    r = radius * math.sqrt(rng.uniform())
    phi = rng.uniform(-math.pi, math.pi)
    return np.array([r * math.cos(phi), r * math.sin(phi)])


def draw_environment(config: GscmConfig, n_elements: int) -> Environment:
    c, v, pol = config.clusters, config.visibility, config.polarization
    centre = area_centre(config)
    xpd = 10.0 ** (-pol.xpd_db / 10.0)
    scat, dirs, gains, extra, pmat, owner, mpc_vr = [], [], [], [], [], [], []
    cl_vr, cl_pow, windows = [], [], []
    for ci in range(c.count):
        rng = rng_for(config.seed, CLUSTERS, ci)
        az = rng.uniform(-0.5, 0.5) * math.radians(c.azimuth_sector_deg)
        el = rng.normal(0.0, math.radians(c.elevation_std_deg))
        dist = rng.uniform(c.min_distance_m, c.max_distance_m)
        tau_c = rng.uniform(0.0, c.max_cluster_delay_s)
        power = math.exp(-tau_c / c.power_decay_s) * 10.0 ** (rng.normal(0.0, c.shadowing_std_db) / 10.0)
        vr = centre[:2] + _disk(rng, v.area_radius_m)
        frac = rng.uniform(v.array_min_fraction, 1.0)
        width = max(1, int(round(frac * n_elements)))
        start = int(rng.integers(0, n_elements - width + 1))
        cl_vr.append(vr)
        cl_pow.append(power)
        windows.append((start, start + width))
        for p in range(c.mpcs):
            prng = rng_for(config.seed, CLUSTERS, ci, PATHS, p)
            d = direction_from_angles(
                az + prng.normal(0.0, math.radians(c.azimuth_spread_deg)),
                el + prng.normal(0.0, math.radians(c.elevation_spread_deg)),
            )
            scat.append(d * dist * prng.uniform(0.9, 1.1))
            dirs.append(d)
            gains.append(complex_normal(prng, (), power / c.mpcs))
            extra.append(tau_c + prng.exponential(c.delay_spread_s) if c.delay_spread_s > 0 else tau_c)
            phases = np.exp(2j * math.pi * prng.uniform(size=(2, 2)))
            pmat.append(phases * np.sqrt(np.array([[1.0, xpd], [xpd, 1.0]])))
            owner.append(ci)
            mpc_vr.append(vr + _disk(prng, v.radius_m))
    return Environment(
        scat_pos=np.array(scat),
        bs_dirs=np.array(dirs),
        gains=np.array(gains, dtype=np.complex128),
        extra_delay=np.array(extra),
        pol=np.array(pmat),
        cluster_of=np.array(owner),
        cluster_vr=np.array(cl_vr),
        mpc_vr=np.array(mpc_vr),
        cluster_power=np.array(cl_pow),
        taper_windows=np.array(windows),
    )


@dataclass(frozen=True)
class UserTrack:
    start: np.ndarray  # (3,)
    velocity: np.ndarray  # (3,)
    initial_azimuth: float
    total_rotation: float

    def positions(self, n_snapshots: int, rate_hz: float) -> np.ndarray:
        t = np.arange(n_snapshots) / rate_hz
        return self.start[None, :] + t[:, None] * self.velocity[None, :]


def draw_user(config: GscmConfig, k: int) -> UserTrack:
    rng = rng_for(config.seed, USERS, k)
    t = config.trajectory
    xy = _disk(rng, t.user_spread_m)
    heading = rng.uniform(-math.pi, math.pi)
    start = area_centre(config) + np.array([xy[0], xy[1], 0.0])
    vel = t.speed_mps * np.array([math.cos(heading), math.sin(heading), 0.0])
    return UserTrack(start, vel, rng.uniform(-math.pi, math.pi), rng.uniform(-math.pi, math.pi))


def user_antenna_for(config: GscmConfig, track: UserTrack, kind: str) -> UserAntenna:
    up = config.user_pattern
    return UserAntenna(
        kind=kind,
        exponent=up.exponent,
        front_to_back_db=up.front_to_back_db,
        tilt_deg=up.tilt_deg,
        initial_azimuth=track.initial_azimuth,
        total_rotation=track.total_rotation,
        n_snapshots=config.trajectory.n_snapshots,
    )


def _unit(x: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    return x / np.where(n > 0, n, 1.0)


def user_channel(
    config: GscmConfig,
    env: Environment,
    geometry: ArrayGeometry,
    track: UserTrack,
    user_kind: str,
) -> np.ndarray:
    """Transfer function of one user, shape ``(N, F, M)``."""
    t, b, v, pol = config.trajectory, config.band, config.visibility, config.polarization
    N, F, M = t.n_snapshots, b.n_freqs, geometry.n_ports
    fc = b.carrier_freq_hz
    freqs = fc + baseband_freqs(F, b.bandwidth_hz)
    pos = track.positions(N, t.snapshot_rate_hz)  # (N, 3)
    antenna = user_antenna_for(config, track, user_kind)
    slant = math.radians(pol.user_slant_deg)
    user_pol = np.array([math.cos(slant), math.sin(slant)])
    bs_is_v = np.array([p == V for p in geometry.polarizations])
    snap = np.arange(N)

    # visibility gains (power) per snapshot
    vr_pos = pos[:, :2] if v.dynamic else np.repeat(pos[:1, :2], N, axis=0)
    d_cl = np.linalg.norm(vr_pos[:, None, :] - env.cluster_vr[None, :, :], axis=2)
    g_cl = raised_cosine_edge(d_cl, v.radius_m, v.transition_m)  # (N, C)
    d_mpc = np.linalg.norm(pos[:, None, :2] - env.mpc_vr[None, :, :], axis=2)
    g_mpc = raised_cosine_edge(d_mpc, v.mpc_radius_m, v.mpc_transition_m)  # (N, P)
    vis = g_cl[:, env.cluster_of] * g_mpc
    active = np.flatnonzero(vis.max(axis=0) > 0)

    # static base-station side response of each active path, (P, M)
    bs_pol = env.pol[active] @ user_pol  # (P, 2): response seen by V and H ports
    a_bs = steering_matrix(geometry.positions, env.bs_dirs[active], fc)
    a_bs *= geometry.element_gain(env.bs_dirs[active])
    a_bs *= np.where(bs_is_v[None, :], bs_pol[:, :1], bs_pol[:, 1:])
    tapers = np.array([array_taper(M, s, e, v.taper_elements) for s, e in env.taper_windows])
    a_bs *= np.sqrt(tapers[env.cluster_of[active]])

    # time-varying user side
    scat = env.scat_pos[active]
    to_scat = scat[None, :, :] - pos[:, None, :]  # (N, P, 3)
    path_len = np.linalg.norm(scat, axis=1)[None, :] + np.linalg.norm(to_scat, axis=2)
    delay = path_len / SPEED_OF_LIGHT + env.extra_delay[active][None, :]
    ue_gain = antenna.gain(snap[:, None], _unit(to_scat))
    amp = env.gains[active][None, :] * np.sqrt(vis[:, active]) * ue_gain  # (N, P)

    # line of sight
    k_lin = 10.0 ** (pol.k_factor_db / 10.0)
    if k_lin > 0:
        p_nlos = float(np.sum(np.abs(env.gains) ** 2 * vis[0]))
        if p_nlos == 0.0:
            p_nlos = float(np.sum(env.cluster_power))
        los_dir = _unit(pos)  # (N, 3) base station -> user
        los_amp = math.sqrt(k_lin * p_nlos) * np.exp(2j * math.pi * rng_for(config.seed, LOS).uniform())
        a_los = steering_matrix(geometry.positions, los_dir, fc) * geometry.element_gain(los_dir)  # (N, M)
        a_los *= np.where(bs_is_v[None, :], user_pol[0], user_pol[1])
        los_delay = np.linalg.norm(pos, axis=1) / SPEED_OF_LIGHT
        los_ue = antenna.gain(snap, -los_dir)
    h = np.empty((N, F, M), dtype=np.complex128)
    for n in range(N):
        w = amp[n][None, :] * np.exp(-2j * math.pi * freqs[:, None] * delay[n][None, :])
        h[n] = w @ a_bs if len(active) else 0.0
        if k_lin > 0:
            h[n] += (los_amp * los_ue[n] * np.exp(-2j * math.pi * freqs * los_delay[n]))[:, None] * a_los[n][None, :]
    return h


def gen_gscm(
    config: GscmConfig,
    geometry: ArrayGeometry,
    user: str | UserAntenna = "omni",
    n_users: Optional[int] = None,
) -> ChannelTensor:
    """Channel tensor for ``n_users`` closely-spaced users sharing one environment.

    ``user`` selects the user antenna kind; a :class:`UserAntenna` is
    accepted for its ``kind`` (orientation is drawn per user from the seed).
    """
    kind = user.kind if isinstance(user, UserAntenna) else user
    if kind not in ("omni", "directive"):
        raise ConfigError(f"unknown user antenna kind {kind!r}")
    K = config.n_users if n_users is None else n_users
    env = draw_environment(config, geometry.n_ports)
    h = np.stack([user_channel(config, env, geometry, draw_user(config, k), kind) for k in range(K)])
    meta = TensorMeta(
        carrier_freq_hz=config.band.carrier_freq_hz,
        bandwidth_hz=config.band.bandwidth_hz,
        snapshot_rate_hz=config.trajectory.snapshot_rate_hz,
        scenario_label=f"{config.name}:{kind}",
        array_id=geometry.array_id,
    )
    return ChannelTensor(h, meta)
