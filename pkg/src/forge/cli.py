"""Command-line entry points: ``forge`` and ``detset``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import nullcontext
from pathlib import Path

EXIT_IO = 1
EXIT_CONFIG = 2


def _thread_limit():
    n = os.environ.get("FORGE_THREADS")
    if not n:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(n))


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _write(path, text, binary=False):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if binary:
        path.write_bytes(text)
    else:
        path.write_text(text)


# ----------------------------------------------------------------- export
def export(artifact, fmt: str, path=None):
    """Serialize an artifact as ``csv``, ``json`` or ``binary-grid``.

    Returns the serialized text/bytes and writes it when ``path`` is given.
    """
    from .exchangeable import LatticeLaw
    from .fourierlab import GridDensity
    from .pipelines import canonical_json

    if fmt == "csv":
        if isinstance(artifact, (LatticeLaw, GridDensity)):
            data = artifact.to_csv()
        else:
            raise ValueError(f"no CSV form for {type(artifact).__name__}")
    elif fmt == "json":
        obj = artifact.to_json() if hasattr(artifact, "to_json") else artifact
        data = canonical_json(obj)
    elif fmt == "binary-grid":
        if not isinstance(artifact, GridDensity):
            raise ValueError("binary-grid export needs a GridDensity")
        data = artifact.to_bytes()
    else:
        raise ValueError(f"unsupported format {fmt!r}")
    if path is not None:
        _write(path, data, binary=isinstance(data, bytes))
    return data


# ----------------------------------------------------------------- forge
def _cmd_pipeline(args):
    from .pipelines import PipelineConfig, canonical_json, run_pipeline

    overrides = {}
    for item in args.set or []:
        key, _, val = item.partition("=")
        try:
            overrides[key] = json.loads(val)
        except json.JSONDecodeError:
            overrides[key] = val
    if args.config:
        cfg = PipelineConfig.from_file(args.command, args.config, **overrides,
                                       **({"seed": args.seed} if args.seed is not None else {}),
                                       **({"out": args.out} if args.out else {}))
    else:
        cfg = PipelineConfig(args.command, overrides, args.seed or 0, args.out)
    with _thread_limit():
        res = run_pipeline(cfg)
    if not cfg.out:
        sys.stdout.write(canonical_json(res.summary()))
    else:
        print(f"{cfg.name}: {res.status} -> {Path(cfg.out) / 'summary.json'}")
    return res.exit_code


def _cmd_fourier(args):
    import numpy as np

    from .fourierlab import build_counterexample, verify_projection_equality
    from .pipelines import canonical_json
    from .polycore import MultiPoly

    p = MultiPoly.from_json(_load_json(args.poly))
    with _thread_limit():
        pair = build_counterexample(p, R=args.R, m=args.m, K=args.K)
    summary = {"diagnostics": pair.diagnostics, "poly": p.to_json()}
    code = 0
    if args.directions:
        dirs = _load_json(args.directions)
        chk = verify_projection_equality(pair, dirs, np.linspace(-5, 5, 41))
        summary["projection"] = {"on_variety": chk.on_variety, "control": chk.control}
        if chk.on_variety > args.tol:
            code = 3
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pair.mu.save(out / "mu.grid")
    pair.nu.save(out / "nu.grid")
    (out / "summary.json").write_text(canonical_json(summary))
    print(f"pair written to {out}")
    return code


def _cmd_verify(args):
    from .exchangeable import compare_partial_sum_laws, mixed_moments
    from .pipelines import canonical_json
    from .simplexmap import MixingMeasure

    t1 = MixingMeasure.from_json(_load_json(args.theta1))
    t2 = MixingMeasure.from_json(_load_json(args.theta2))
    with _thread_limit():
        tvs = compare_partial_sum_laws(t1, t2, args.nmax)
        m1, m2 = mixed_moments(t1, args.degree), mixed_moments(t2, args.degree)
    gap = m1.max_abs_difference(m2)
    report = {
        "tv_by_n": {str(n): float(v) for n, v in enumerate(tvs, start=1)},
        "tolerance": args.tol,
        "partial_sums_agree": bool(max(tvs) <= args.tol),
        "max_mixed_moment_gap": gap,
        "verified_to_degree": args.degree,
        "mixing_measures_differ": bool(gap > args.tol),
    }
    text = canonical_json(report)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0 if report["partial_sums_agree"] else 3


def _cmd_levy(args):
    import numpy as np

    from .levymix import (
        LevyMixing,
        LevyTriple,
        LisppSpec,
        bm_hybrid_transform,
        bridge_construct,
        lispp_mixture_laplace_moments,
        simulate_path,
    )
    from .pipelines import canonical_json
    from .simplexmap import MixingMeasure

    def bm_mix(path):
        d = _load_json(path)
        return LevyMixing.bm(d["pairs"], d["probs"])

    def lispp_mix(path):
        d = _load_json(path)
        specs = [LisppSpec(c["atoms"], c["masses"]) for c in d["components"]]
        return LevyMixing.from_lispp(specs, [c["prob"] for c in d["components"]])

    report = {"mode": args.mode}
    code = 0
    s_grid = np.linspace(0, 4, 9)
    if args.mode == "bm":
        th1 = bm_mix(args.theta1)
        tab1 = bm_hybrid_transform(th1)
        report["table_theta1"] = [[[z.real, z.imag] for z in row] for row in tab1]
        if args.theta2:
            tab2 = bm_hybrid_transform(bm_mix(args.theta2))
            report["separation"] = float(np.abs(tab1 - tab2).max())
    elif args.mode in ("lispp", "bridge"):
        if args.mode == "lispp":
            L1 = lispp_mix(args.theta1)
            L2 = lispp_mix(args.theta2) if args.theta2 else None
        else:
            L1, L2 = bridge_construct(MixingMeasure.from_json(_load_json(args.theta1)),
                                      MixingMeasure.from_json(_load_json(args.theta2)))
        rows = []
        worst = 0.0
        for s in s_grid:
            for n in range(args.nmax + 1):
                v1 = lispp_mixture_laplace_moments(L1, args.t, s, n)
                row = {"t": args.t, "s": float(s), "n": n, "theta1": v1}
                if L2 is not None:
                    v2 = lispp_mixture_laplace_moments(L2, args.t, s, n)
                    row["theta2"] = v2
                    worst = max(worst, abs(v1 - v2))
                rows.append(row)
        report["transforms"] = rows
        if L2 is not None:
            report["max_gap"] = worst
            if worst > args.tol:
                code = 3
    if args.path_out:
        triple = LevyTriple.from_json(_load_json(args.component)) if args.component else LevyTriple(0.0, 1.0)
        times, values, _ = simulate_path(triple, args.horizon, seed=args.seed)
        _write(args.path_out, "t,value\n" + "".join(f"{t!r},{v!r}\n" for t, v in zip(times, values)))
    text = canonical_json(report)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return code


def build_parser():
    from .pipelines import PIPELINES

    ap = argparse.ArgumentParser(prog="forge", description="Constructions around exchangeable partial sums.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in PIPELINES:
        sp = sub.add_parser(name, help=f"run the {name} pipeline")
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--set", action="append", metavar="KEY=JSON", help="override a parameter")
        sp.set_defaults(func=_cmd_pipeline)

    sp = sub.add_parser("fourier", help="build the Fourier pair for a homogeneous polynomial")
    sp.add_argument("--poly", required=True)
    sp.add_argument("--m", type=int, default=128)
    sp.add_argument("--R", type=float, default=30.0)
    sp.add_argument("--K", type=int)
    sp.add_argument("--directions", help="JSON list of on-variety directions to check")
    sp.add_argument("--tol", type=float, default=1e-3)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_fourier)

    sp = sub.add_parser("verify-aldous", help="compare partial-sum laws of two mixing measures")
    sp.add_argument("--theta1", required=True)
    sp.add_argument("--theta2", required=True)
    sp.add_argument("--nmax", type=int, default=12)
    sp.add_argument("--degree", type=int, default=8)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("levy", help="Lévy-mixture transforms")
    sp.add_argument("--mode", choices=["bm", "lispp", "bridge"], required=True)
    sp.add_argument("--theta1", required=True)
    sp.add_argument("--theta2")
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--nmax", type=int, default=6)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--component", help="Lévy triple JSON for --path-out")
    sp.add_argument("--horizon", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--path-out")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_levy)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"forge: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"forge: {exc}", file=sys.stderr)
        return EXIT_CONFIG


# ----------------------------------------------------------------- detset
def _cmd_analyze(args):
    from .detset import CurveSpec, InsufficientSamples, find_vanishing_polynomial
    from .pipelines import canonical_json

    curve = CurveSpec.from_json(_load_json(args.curve))
    try:
        rep = find_vanishing_polynomial(curve, args.lmax, mode=args.mode, threshold=args.threshold, dps=args.dps)
    except InsufficientSamples as exc:
        print(f"detset: {exc}", file=sys.stderr)
        return 4
    text = canonical_json(rep.to_json())
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def detset_main(argv=None):
    ap = argparse.ArgumentParser(prog="detset", description="Determining-set analysis of parametric curves.")
    sub = ap.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("analyze", help="search for a vanishing homogeneous polynomial")
    sp.add_argument("--curve", required=True, help="CurveSpec JSON")
    sp.add_argument("--lmax", type=int, required=True)
    sp.add_argument("--mode", choices=["exact", "float"], default="float")
    sp.add_argument("--threshold", type=float, default=1e-9)
    sp.add_argument("--dps", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_analyze)
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"detset: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"detset: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
