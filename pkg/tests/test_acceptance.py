"""Acceptance criteria, one test per criterion.

Every test prints a single ``ACCEPTANCE <n>: PASS|FAIL`` line (also
repeated in the pytest terminal summary).  Run with ``pytest -s`` to see
the lines inline.
"""

import csv
import math
import time

import numpy as np
import pytest

from chhard import cli
from chhard.analysis import (
    ORDER_KINDS,
    empirical_cdf,
    exponential_cdf_db,
    hardening_curve,
    order_antennas,
    pol_ratio_stats,
)
from chhard.arrays import V, build_cylindrical, build_linear, direction_from_angles, steering_matrix
from chhard.core import (
    ChannelTensor,
    SubsetSelection,
    TensorMeta,
    cv_squared,
    normalize,
    prefix_gains,
    subset_gain,
)
from chhard.io import (
    BadMagicError,
    InvariantViolationError,
    TensorFileError,
    TruncatedPayloadError,
    VersionMismatchError,
    decode_tensor,
    encode_tensor,
    load_config,
)
from chhard.synth import RunPlan, gen_finite_scatterer, gen_gscm, gen_iid_gaussian, gen_keyhole, run_ensemble
from chhard.theory import INFINITE, cv_squared_closed

FULL_ORDERS = ("original", "strongest_first", "weakest_first")


# 1 --------------------------------------------------------------------------


def test_criterion_01_gaussian_hardening(record):
    t0 = time.perf_counter()
    tensor = gen_iid_gaussian(1, 300, 129, 128, seed=2024)
    curve = hardening_curve(tensor, 0, "strongest_first")
    elapsed = time.perf_counter() - t0
    m = np.arange(1, 129)
    reference = 10 * np.log10(1 / np.sqrt(m))
    worst = float(np.max(np.abs(curve.std_db - reference)))
    ok = abs(curve.hardening_db + 10.5) <= 0.5 and worst <= 0.3 and elapsed < 10
    record(
        "1",
        ok,
        f"hardening {curve.hardening_db:.3f} dB (target -10.5 +/- 0.5), "
        f"max |curve - 10log10(1/sqrt m)| = {worst:.3f} dB (< 0.3), {elapsed:.2f} s (< 10)",
    )
    assert ok


# 2 --------------------------------------------------------------------------


def test_criterion_02_finite_scatterer_cv2(record):
    """Empirical CV^2 of the P-path model against the closed form.

    A half-wavelength line array has uncorrelated elements under uniform
    3-D scattering, so its steering second moment is exactly 1/M.
    """
    t0 = time.perf_counter()
    geometry = build_linear(128)
    draws = 20000
    worst, cells = 0.0, []
    for P in (1, 3, 10, 30, 100):
        tensor = gen_finite_scatterer(P, geometry, draws, 1, seed=100 + P)
        full = SubsetSelection(tuple(range(128)), "original")
        for M in (1, 4, 16, 64, 128):
            emp = cv_squared(subset_gain(normalize(tensor, 0, full.prefix(M))))
            ref = cv_squared_closed(M, P)
            rel = abs(emp - ref) / ref
            worst = max(worst, rel)
            cells.append((M, P, emp, ref, rel))
    elapsed = time.perf_counter() - t0
    ok = worst < 0.10 and elapsed < 120
    bad = [c for c in cells if c[4] >= 0.10]
    record(
        "2",
        ok,
        f"25 cells, {draws} draws each, worst relative error {worst:.4f} (< 0.10), "
        f"{elapsed:.1f} s (< 120){'; failing cells ' + str(bad) if bad else ''}",
    )
    assert ok


# 3 --------------------------------------------------------------------------


def _cv2_standard_error(g: np.ndarray) -> float:
    """Delta-method standard error of the plug-in CV^2 = var/mean^2."""
    mu = g.mean()
    var = np.mean((g - mu) ** 2)
    influence = ((g - mu) ** 2 - var) / mu**2 - 2 * var * (g - mu) / mu**3
    return float(np.std(influence) / math.sqrt(g.size))


def test_criterion_03_keyhole_no_hardening(record):
    tensor = gen_keyhole(300, 129, 128, seed=7)
    g = subset_gain(normalize(tensor, 0, SubsetSelection(tuple(range(128)), "original"))).values.ravel()
    emp = cv_squared(subset_gain(normalize(tensor, 0, SubsetSelection(tuple(range(128)), "original"))))
    target = 1 + 2 / 128
    se = _cv2_standard_error(g)
    curve = hardening_curve(tensor, 0, "strongest_first")
    gauss = hardening_curve(gen_iid_gaussian(1, 300, 129, 128, seed=7), 0, "strongest_first")
    ok = abs(emp - target) <= 3 * se and abs(curve.hardening_db) < 3.0
    record(
        "3",
        ok,
        f"CV^2 {emp:.4f} vs 1+2/128 = {target:.4f}, |diff| = {abs(emp - target) / se:.2f} SE (<= 3); "
        f"hardening {curve.hardening_db:.3f} dB (|.| < 3) vs Gaussian {gauss.hardening_db:.2f} dB",
    )
    assert ok


# 4 --------------------------------------------------------------------------


def _fuzzed_tensor(rng, geometry):
    K = int(rng.integers(1, 3))
    N = int(rng.integers(2, 9))
    F = int(rng.integers(1, 5))
    M = geometry.n_ports
    # heterogeneous per-antenna and per-snapshot power, occasional near-dead antennas
    amp = rng.lognormal(0.0, 1.5, size=(K, 1, 1, M)) * rng.lognormal(0.0, 1.0, size=(K, N, 1, 1))
    amp[..., rng.random(M) < 0.05] *= 1e-6
    h = amp * (rng.standard_normal((K, N, F, M)) + 1j * rng.standard_normal((K, N, F, M)))
    h *= 10.0 ** rng.uniform(-6, 6)
    mask = None
    if rng.random() < 0.5:
        mask = rng.random((K, N)) < 0.6
        mask[:, :2] = True
    return ChannelTensor(h, TensorMeta(array_id=geometry.array_id), mask)


def test_criterion_04_normalization_suite(record):
    rng = np.random.default_rng(4)
    geometry = build_cylindrical()
    worst_mean = worst_scale = worst_end = 0.0
    for _ in range(50):
        tensor = _fuzzed_tensor(rng, geometry)
        scale = complex(*rng.normal(size=2)) * 10.0 ** rng.uniform(-5, 5)
        scaled = tensor.scaled(scale)
        for k in range(tensor.n_users):
            ends = []
            for kind in ORDER_KINDS:
                sel = order_antennas(tensor, k, kind, geometry)
                gains = prefix_gains(tensor, k, sel)
                worst_mean = max(worst_mean, float(np.max(np.abs(gains.mean(axis=(1, 2)) - 1.0))))
                # explicit per-prefix normalization at a few sizes
                for m in {1, len(sel) // 2, len(sel)}:
                    mean = subset_gain(normalize(tensor, k, sel.prefix(m))).mean()
                    worst_mean = max(worst_mean, abs(mean - 1.0))
                a = hardening_curve(tensor, k, kind, geometry).std_db
                b = hardening_curve(scaled, k, kind, geometry).std_db
                both_finite = np.isfinite(a) & np.isfinite(b)
                assert np.array_equal(np.isfinite(a), np.isfinite(b))
                if both_finite.any():
                    worst_scale = max(worst_scale, float(np.max(np.abs(a[both_finite] - b[both_finite]))))
                if kind in FULL_ORDERS:
                    ends.append(a[-1])
            worst_end = max(worst_end, float(np.ptp(ends)))
    ok = worst_mean <= 1e-9 and worst_scale <= 1e-9 and worst_end <= 1e-9
    record(
        "4",
        ok,
        f"50 tensors x {len(ORDER_KINDS)} orders: max |mean gain - 1| = {worst_mean:.1e}, "
        f"max scale-invariance error = {worst_scale:.1e} dB, max endpoint spread = {worst_end:.1e} dB (all <= 1e-9)",
    )
    assert ok


# 5 --------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_05_gscm_ensemble(record):
    t0 = time.perf_counter()
    config = load_config()
    geometry = build_cylindrical(config.band.carrier_freq_hz)
    plan = RunPlan(runs=10, seed=0)
    res = {
        kind: run_ensemble(plan, lambda s, kind=kind: gen_gscm(config.replace(seed=s), geometry, kind))
        for kind in ("omni", "directive")
    }
    elapsed = time.perf_counter() - t0
    omni, directive = res["omni"], res["directive"]
    assert omni.seeds == directive.seeds
    a = -7.0 <= omni.hardening_db <= -3.5
    b = abs(directive.hardening_db) <= abs(omni.hardening_db) - 1.0
    rises = {k: float(np.max(np.diff(r.curve.std_db[7:]))) for k, r in res.items()}
    c = all(v <= 0.0 for v in rises.values())
    ok = a and b and c and elapsed < 300
    record(
        "5",
        ok,
        f"omni {omni.hardening_db:.2f} dB in [-7, -3.5]: {a}; directive {directive.hardening_db:.2f} dB, "
        f"at least 1 dB smaller: {b}; largest step after m=8 omni {rises['omni']:+.4f}, "
        f"directive {rises['directive']:+.4f} (<= 0): {c}; {elapsed:.0f} s (< 300)",
    )
    assert ok


# 6 --------------------------------------------------------------------------


def v_dominant_los_cylinder(seed: int, N: int = 300, F: int = 16, imbalance_db: float = 4.0) -> ChannelTensor:
    """Cylinder channel: a LOS ray whose polarization wanders over time, plus diffuse scattering.

    The user polarization angle is uniform per snapshot; V ports see the LOS
    ``imbalance_db`` stronger than H ports on average.
    """
    rng = np.random.default_rng(seed)
    geometry = build_cylindrical()
    u = direction_from_angles(0.3, 0.1)
    a = steering_matrix(geometry.positions, u[None, :], geometry.carrier_freq_hz)[0] * geometry.element_gain(u)
    is_v = np.array([p == V for p in geometry.polarizations])
    psi = rng.uniform(0, 2 * np.pi, N)
    pol = np.where(is_v[None, :], math.sqrt(10 ** (imbalance_db / 10)) * np.cos(psi)[:, None], np.sin(psi)[:, None])
    los = 3.0 * pol * a[None, :]  # (N, M)
    diffuse = (rng.standard_normal((N, F, 128)) + 1j * rng.standard_normal((N, F, 128))) / math.sqrt(2)
    h = los[:, None, :] + diffuse
    return ChannelTensor(h[None], TensorMeta(array_id="cyl128", scenario_label="v_dominant_los"))


def test_criterion_06_polarization_ordering(record):
    tensor = v_dominant_los_cylinder(6)
    ends = {k: hardening_curve(tensor, 0, k).end_db for k in ("vertical_only", "horizontal_only", "both_alternating")}
    ok = ends["both_alternating"] < ends["vertical_only"] and ends["both_alternating"] < ends["horizontal_only"]
    record(
        "6",
        ok,
        "endpoint std_db: both_alternating {both_alternating:.3f}, vertical_only {vertical_only:.3f}, "
        "horizontal_only {horizontal_only:.3f} dB".format(**ends),
    )
    assert ok


# 7 --------------------------------------------------------------------------


def test_criterion_07_cdf_oracle(record):
    tensor = gen_iid_gaussian(1, 300, 129, 1, seed=77)
    ecdf = empirical_cdf(subset_gain(normalize(tensor, 0, SubsetSelection((0,), "original"))))
    ks = ecdf.ks_distance(exponential_cdf_db)
    ref0 = float(exponential_cdf_db(0.0))
    ok = ecdf.n == 38700 and ks < 0.02 and abs(ref0 - (1 - math.exp(-1))) <= 1e-12
    record("7", ok, f"KS = {ks:.4f} (< 0.02) at n = {ecdf.n}; F_exp(0 dB) - (1 - 1/e) = {ref0 - (1 - math.exp(-1)):.1e}")
    assert ok


# 8 --------------------------------------------------------------------------


def test_criterion_08_pol_ratio_std(record):
    tensor = gen_iid_gaussian(1, 300, 129, 128, seed=8, meta=TensorMeta(array_id="cyl128"))
    stats = pol_ratio_stats(tensor, 0)
    target = 10 * math.pi / (math.sqrt(3) * math.log(10))
    ok = abs(stats.std_db - target) <= 0.1
    record("8", ok, f"std {stats.std_db:.4f} dB vs {target:.4f} (+/- 0.1), mean {stats.mean_db:+.3f} dB, n = {stats.n_samples}")
    assert ok


# 9 --------------------------------------------------------------------------


def test_criterion_09_file_format(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    exact = 0
    for i in range(100):
        K, N, F, M = (int(x) for x in rng.integers(1, [4, 20, 9, 17]))
        h = rng.standard_normal((K, N, F, M)) + 1j * rng.standard_normal((K, N, F, M))
        # include extreme but finite values and signed zeros
        h.flat[0] = complex(-0.0, 5e-324) if i % 3 == 0 else complex(1.7e308, -1e-300)
        mask = None
        if i % 2:
            mask = rng.random((K, N)) < 0.5
            mask[:, int(rng.integers(N))] = True
        meta = TensorMeta(carrier_freq_hz=float(rng.uniform(1e8, 1e11)), scenario_label=f"fuzz{i} ünï", array_id="x")
        t = ChannelTensor(h, meta, mask)
        back = decode_tensor(encode_tensor(t))
        same = (
            back.samples.tobytes() == t.samples.tobytes()
            and back.meta == t.meta
            and ((mask is None and back.mask is None) or np.array_equal(back.mask, t.mask))
        )
        exact += same

    good = encode_tensor(gen_iid_gaussian(2, 5, 3, 4, seed=1))
    cases = {
        "bad_magic": good.replace(b"MCHT", b"MCHX", 1),
        "version_mismatch": good[:4] + (99).to_bytes(2, "little") + good[6:],
        "truncated_payload": good[:-5],
        "truncated_header": good[:10],
        "invariant_violation": good + b"\x00",
    }
    got = {}
    for name, blob in cases.items():
        try:
            decode_tensor(blob)
            got[name] = None
        except TensorFileError as e:
            got[name] = (type(e), e.code)
    expected = {
        "bad_magic": (BadMagicError, "bad_magic"),
        "version_mismatch": (VersionMismatchError, "version_mismatch"),
        "truncated_payload": (TruncatedPayloadError, "truncated_payload"),
        "truncated_header": (TruncatedPayloadError, "truncated_payload"),
        "invariant_violation": (InvariantViolationError, "invariant_violation"),
    }
    codes = {got[n][1] for n in got if got[n]}
    elapsed = time.perf_counter() - t0
    ok = exact == 100 and got == expected and len(codes) == 4 and elapsed < 10
    record("9", ok, f"{exact}/100 bit-exact round-trips; error codes {sorted(codes)}; {elapsed:.2f} s (< 10)")
    assert ok


# 10 -------------------------------------------------------------------------


def _surface_oracle(M, P):
    """Direct arithmetic of the closed form, independent of the package."""
    cv2 = 1 / M if P == INFINITE else (1 / M) * (1 - 1 / P) + 1 / P
    return 5 * math.log10(cv2)


def test_criterion_10_theory_surface(tmp_path, record):
    rc = cli.main(["theory", "--out-dir", str(tmp_path), "--m-max", "128", "--p-list", "1,3,10,30,100,inf"])
    assert rc == 0
    with open(tmp_path / "theory_surface.csv") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    p_list = [1, 3, 10, 30, 100, INFINITE]
    surface = body[:, 1:]
    mono_m = bool(np.all(np.diff(surface, axis=0) <= 0))
    mono_p = bool(np.all(np.diff(surface, axis=1) <= 0))
    col = {p: header.index(f"P={'inf' if p == INFINITE else p}") - 1 for p in p_list}
    spots = {
        "(1,P)": max(abs(surface[0, col[p]] - 0.0) for p in p_list if p != INFINITE),
        "(128,inf)": abs(surface[127, col[INFINITE]] - _surface_oracle(128, INFINITE)),
        "(128,10)": abs(surface[127, col[10]] - _surface_oracle(128, 10)),
    }
    # (1, inf) is 10log10(1) = 0 as well
    spots["(1,P)"] = max(spots["(1,P)"], abs(surface[0, col[INFINITE]]))
    printed_4_85 = abs(round(surface[127, col[10]], 2) - (-4.85)) < 1e-12
    ok = mono_m and mono_p and all(v <= 1e-9 for v in spots.values()) and printed_4_85
    record(
        "10",
        ok,
        f"monotone in M: {mono_m}, in P: {mono_p}; (128,inf) = {surface[127, col[INFINITE]]:.6f} dB, "
        f"(128,10) = {surface[127, col[10]]:.6f} dB; max spot error vs arithmetic "
        f"{max(spots.values()):.1e} (<= 1e-9)",
    )
    assert ok
