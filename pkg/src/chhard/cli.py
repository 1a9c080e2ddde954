"""Command line: ``chhard {theory,synth,analyze,reproduce}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 invariant violation.
Every run writes ``manifest.json`` into ``--out-dir`` with the seeds,
resolved config and its hash, and library versions.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analysis, theory
from .arrays import build_array, build_linear
from .core import ChannelError, HardeningCurve, SubsetSelection, hardening
from .io import (
    TensorFileError,
    atomic_write_text,
    load_config,
    read_tensor,
    write_manifest,
    write_tensor,
)
from .synth import (
    ConfigError,
    RunPlan,
    gen_finite_scatterer,
    gen_gscm,
    gen_iid_gaussian,
    gen_keyhole,
    run_ensemble,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 2, 3, 4

MODELS = ("gaussian", "keyhole", "scatterer", "gscm")
OUTPUTS = ("curve", "cdf", "map", "spread", "polstats")
FIGURES = ("fig5", "fig7", "fig8", "fig14", "fig15")


class UsageError(Exception):
    pass


# -- serialization ---------------------------------------------------------


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return "" if not math.isfinite(x) else repr(float(x))
    return str(x)


def _json_value(x):
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def write_table(out_dir: Path, stem: str, columns: Sequence[str], rows, fmt: str) -> Path:
    """Write rows as CSV (non-finite -> empty field) or JSON (non-finite -> null)."""
    if fmt == "csv":
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(x) for x in r])
        path = out_dir / f"{stem}.csv"
        atomic_write_text(path, buf.getvalue())
    else:
        data = {c: [_json_value(r[i]) for r in rows] for i, c in enumerate(columns)}
        path = out_dir / f"{stem}.json"
        atomic_write_text(path, json.dumps(data, indent=1) + "\n")
    return path


def write_json(path: Path, obj) -> Path:
    def clean(o):
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        return _json_value(o)

    atomic_write_text(path, json.dumps(clean(obj), indent=2, sort_keys=True) + "\n")
    return path


def curve_rows(curve: HardeningCurve):
    return [(int(m), float(s)) for m, s in zip(curve.sizes, curve.std_db)]


def parse_counts(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if tok in ("inf", "infinite", "∞"):
            out.append(theory.INFINITE)
            continue
        try:
            v = int(tok)
        except ValueError:
            raise UsageError(f"bad count {tok!r}") from None
        if v < 1:
            raise UsageError(f"counts must be >= 1, got {v}")
        out.append(v)
    if not out:
        raise UsageError("empty list")
    return out


def _label(p) -> str:
    return "inf" if p == theory.INFINITE else str(int(p))


# -- subcommands -----------------------------------------------------------


def surface_rows(m_max: int, p_list):
    surf = theory.std_surface(range(1, m_max + 1), p_list)
    return [(m, *surf[m - 1]) for m in range(1, m_max + 1)]


def cmd_theory(args, out_dir: Path) -> list:
    p_list = parse_counts(args.p_list)
    if args.m_max < 1:
        raise UsageError("--m-max must be >= 1")
    cols = ["M"] + [f"P={_label(p)}" for p in p_list]
    path = write_table(out_dir, "theory_surface", cols, surface_rows(args.m_max, p_list), args.format)
    args._config = {"m_max": args.m_max, "p_list": [_label(p) for p in p_list]}
    return [path]


def synth_tensor(args):
    """Build the tensor for ``synth``; returns (tensor, resolved config dict)."""
    seed = args.seed
    if args.model == "gaussian":
        cfg = {"K": args.K, "N": args.N, "F": args.F, "M": args.M}
        return gen_iid_gaussian(args.K, args.N, args.F, args.M, seed), cfg
    if args.model == "keyhole":
        cfg = {"K": args.K, "N": args.N, "F": args.F, "M": args.M}
        return gen_keyhole(args.N, args.F, args.M, seed, K=args.K), cfg
    if args.model == "scatterer":
        geometry = build_array(args.array) if args.array else build_linear(args.M)
        cfg = {"P": args.P, "N": args.N, "F": args.F, "array": geometry.array_id}
        return gen_finite_scatterer(args.P, geometry, args.N, args.F, seed), cfg
    config = load_config(args.config).replace(seed=seed)
    if args.K_given:
        config = config.replace(n_users=args.K)
    geometry = build_array(args.array or "cyl128")
    cfg = {"gscm": config.to_dict(), "array": geometry.array_id, "user_antenna": args.user_antenna}
    return gen_gscm(config, geometry, args.user_antenna), cfg


def cmd_synth(args, out_dir: Path) -> list:
    if args.seed is None:
        raise UsageError("synth requires --seed")
    tensor, cfg = synth_tensor(args)
    out = out_dir / (args.out or f"{args.model}.mcht")
    write_tensor(tensor, out)
    cfg = {"model": args.model, "seed": args.seed, **cfg}
    echo = write_json(out.with_name(out.name + ".config.json"), cfg)
    args._config = cfg
    return [out, echo]


def cmd_analyze(args, out_dir: Path) -> list:
    tensor = read_tensor(args.tensor)
    outputs = [o.strip() for o in args.outputs.split(",") if o.strip()]
    bad = set(outputs) - set(OUTPUTS)
    if bad:
        raise UsageError(f"unknown outputs {sorted(bad)}; choose from {OUTPUTS}")
    geometry = build_array(args.array) if args.array else None
    k, fmt = args.user, args.format
    tag = f"u{k}"
    written = []
    selection = analysis.order_antennas(tensor, k, args.order, geometry)
    curve = hardening(tensor, k, selection)
    summary = {
        "user": k,
        "order": args.order,
        "n_antennas": len(selection),
        "reference_port": selection.indices[0] + 1,
        "start_db": curve.start_db,
        "end_db": curve.end_db,
        "hardening_db": curve.hardening_db,
        "shape": list(tensor.shape),
        "meta": tensor.meta.to_dict(),
    }
    if "curve" in outputs:
        written.append(write_table(out_dir, f"curve_{args.order}_{tag}", ["m", "std_db"], curve_rows(curve), fmt))
    if "cdf" in outputs:
        from .core import normalize, subset_gain

        ecdf = analysis.empirical_cdf(subset_gain(normalize(tensor, k, selection)))
        xs, F = ecdf.steps()
        written.append(write_table(out_dir, f"cdf_{args.order}_{tag}", ["x_db", "F"], list(zip(xs, F)), fmt))
        summary["ks_to_exponential"] = ecdf.ks_distance(analysis.exponential_cdf_db)
    if "map" in outputs:
        gm = analysis.gain_map(tensor, k)
        rows = [(i + 1, g) for i, g in enumerate(gm.gain_db)]
        written.append(write_table(out_dir, f"map_{tag}", ["port", "gain_db"], rows, fmt))
        summary["median_port"] = gm.median_port + 1
    if "spread" in outputs:
        gm = analysis.gain_map(tensor, k)
        single = SubsetSelection((gm.median_port,), "explicit")
        rows = [
            (1, *analysis.time_freq_spread(tensor, k, single)),
            (len(selection), *analysis.time_freq_spread(tensor, k, selection)),
        ]
        written.append(
            write_table(out_dir, f"spread_{tag}", ["m", "time_spread_db", "freq_spread_db"], rows, fmt)
        )
        summary["spread"] = {"m": [r[0] for r in rows], "time_db": [r[1] for r in rows], "freq_db": [r[2] for r in rows]}
    if "polstats" in outputs:
        ps = analysis.pol_ratio_stats(tensor, k, geometry)
        written.append(
            write_table(out_dir, f"polstats_{tag}", ["mean_db", "std_db", "n_samples"], [(ps.mean_db, ps.std_db, ps.n_samples)], fmt)
        )
        summary["pol_ratio"] = {"mean_db": ps.mean_db, "std_db": ps.std_db}
    written.append(write_json(out_dir / f"summary_{tag}.json", summary))
    args._config = {"tensor": str(args.tensor), "user": k, "order": args.order, "outputs": outputs, "array": args.array}
    return written


# -- figure recipes --------------------------------------------------------


def _gaussian_curve(seed: int, M: int = 128, N: int = 300, F: int = 129) -> HardeningCurve:
    t = gen_iid_gaussian(1, N, F, M, seed)
    return analysis.hardening_curve(t, 0, "strongest_first")


def reproduce(fig: str, out_dir: Path, seed: int, fmt: str, runs: int = 10, config_path=None, n_users=None) -> tuple:
    """Run one figure recipe; returns (artifact paths, resolved config, seeds)."""
    written = []
    if fig == "fig5":
        p_list = [1, 3, 10, 30, 100, theory.INFINITE]
        cols = ["M"] + [f"P={_label(p)}" for p in p_list]
        written.append(write_table(out_dir, "fig5_surface", cols, surface_rows(128, p_list), fmt))
        return written, {"m_max": 128, "p_list": [_label(p) for p in p_list]}, []

    config = load_config(config_path).replace(seed=seed)
    if n_users is not None:
        config = config.replace(n_users=n_users)
    geometry = build_array("cyl128")

    if fig in ("fig7", "fig8"):
        tensor = gen_gscm(config, geometry, "omni")
        if fig == "fig7":
            written.append(write_table(out_dir, "fig7_gaussian", ["m", "std_db"], curve_rows(_gaussian_curve(seed)), fmt))
            for order in ("original", "strongest_first", "weakest_first"):
                c = analysis.hardening_curve(tensor, 0, order, geometry)
                written.append(write_table(out_dir, f"fig7_{order}", ["m", "std_db"], curve_rows(c), fmt))
        else:
            g = _gaussian_curve(seed, M=64)
            written.append(write_table(out_dir, "fig8_gaussian", ["m", "std_db"], curve_rows(g), fmt))
            for order in ("vertical_only", "horizontal_only", "both_alternating"):
                c = analysis.hardening_curve(tensor, 0, order, geometry)
                written.append(write_table(out_dir, f"fig8_{order}", ["m", "std_db"], curve_rows(c), fmt))
        return written, {"gscm": config.to_dict(), "array": "cyl128", "user": 0}, [seed]

    plan = RunPlan(runs=runs, seed=seed)
    results = {}
    for kind in ("omni", "directive"):
        results[kind] = run_ensemble(plan, lambda s, kind=kind: gen_gscm(config.replace(seed=s), geometry, kind))
    gauss = _gaussian_curve(seed)
    summary = {}
    if fig == "fig14":
        written.append(write_table(out_dir, "fig14_gaussian", ["m", "std_db"], curve_rows(gauss), fmt))
        for kind, res in results.items():
            written.append(write_table(out_dir, f"fig14_cost_{kind}", ["m", "std_db"], curve_rows(res.curve), fmt))
            summary[kind] = {"hardening_db": res.hardening_db, "start_db": res.curve.start_db, "end_db": res.curve.end_db}
    else:
        written.append(
            write_table(out_dir, "fig15_gaussian_delta", ["m", "delta_db"], _delta_rows(analysis.curve_delta(gauss)), fmt)
        )
        for kind, res in results.items():
            d = analysis.average_delta(res.all_curves)
            written.append(write_table(out_dir, f"fig15_cost_{kind}_delta", ["m", "delta_db"], _delta_rows(d), fmt))
            summary[kind] = {"hardening_db": res.hardening_db}
    written.append(write_json(out_dir / f"{fig}_summary.json", summary))
    seeds = {"base": seed, "runs": results["omni"].seeds}
    return written, {"gscm": config.to_dict(), "array": "cyl128", "runs": runs}, seeds


def _delta_rows(d):
    return [(m, float(x)) for m, x in zip(range(2, len(d) + 2), d)]


def cmd_reproduce(args, out_dir: Path) -> list:
    seed = 0 if args.seed is None else args.seed
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    written, cfg, seeds = reproduce(args.figure, out_dir, seed, args.format, args.runs, args.config, args.users)
    args._config = {"figure": args.figure, **cfg}
    args._seeds = seeds
    return written


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="root random seed")
    common.add_argument("--out-dir", type=Path, default=Path("."), help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    p = argparse.ArgumentParser(prog="chhard", description="Channel hardening synthesis and analysis.")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("theory", parents=[common], help="closed-form std surface over antennas and paths")
    t.add_argument("--m-max", type=int, default=128)
    t.add_argument("--p-list", default="1,3,10,30,100,inf", help="comma-separated path counts; 'inf' allowed")
    t.set_defaults(func=cmd_theory)

    s = sub.add_parser("synth", parents=[common], help="synthesize a channel tensor file")
    s.add_argument("model", choices=MODELS)
    s.add_argument("--config", default=None, help="GSCM YAML config (default: shipped indoor config)")
    s.add_argument("--K", type=int, default=None)
    s.add_argument("--N", type=int, default=300)
    s.add_argument("--F", type=int, default=129)
    s.add_argument("--M", type=int, default=128)
    s.add_argument("--P", type=int, default=10)
    s.add_argument("--array", default=None, help="cyl128, planar100 or linear<M>")
    s.add_argument("--user-antenna", choices=("omni", "directive"), default="omni")
    s.add_argument("--out", default=None, help="tensor file name inside --out-dir")
    s.set_defaults(func=cmd_synth)

    a = sub.add_parser("analyze", parents=[common], help="hardening analysis of a tensor file")
    a.add_argument("tensor", type=Path)
    a.add_argument("--user", type=int, default=0)
    a.add_argument("--order", choices=analysis.ORDER_KINDS, default="strongest_first")
    a.add_argument("--outputs", default="curve", help=f"comma-separated subset of {','.join(OUTPUTS)}")
    a.add_argument("--array", default=None, help="override the array id stored in the tensor")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("reproduce", parents=[common], help="regenerate the data behind a figure")
    r.add_argument("figure", choices=FIGURES)
    r.add_argument("--runs", type=int, default=10)
    r.add_argument("--users", type=int, default=None)
    r.add_argument("--config", default=None)
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    if getattr(args, "command", None) == "synth":
        args.K_given = args.K is not None
        if args.K is None:
            args.K = 1
    out_dir = args.out_dir
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = args.func(args, out_dir)
        seeds = getattr(args, "_seeds", [args.seed] if args.seed is not None else [])
        write_manifest(
            out_dir / "manifest.json",
            " ".join(sys.argv[:1] + list(argv if argv is not None else sys.argv[1:])),
            seeds,
            getattr(args, "_config", {}),
            [p.name for p in written],
        )
    except UsageError as e:
        print(f"chhard: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except TensorFileError as e:
        print(f"chhard: {e.code}: {e}", file=sys.stderr)
        return e.exit_code
    except (ChannelError, ConfigError, FileNotFoundError, ValueError) as e:
        print(f"chhard: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
