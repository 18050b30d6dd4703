"""Command-line front end.

Exit codes: 0 when every check passes, 1 on a mathematical failure, 2 on
unreadable or invalid input.
"""

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import linalg as la
from . import scene as sc
from . import verify as vf
from .fields import DomainError, ExclusionError
from .glue import SpectralOverlapError, split_pointwise
from .geodesics import IntegrationError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _fmt(x):
    return f"{float(x):.17g}"


def _floats(text, name):
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise InputError(f"--{name}: expected comma-separated numbers, got {text!r}") from None


def _load(path):
    try:
        obj = sc.load(path)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except sc.SceneError as e:
        raise InputError(f"{path}: {e}") from None
    try:
        resolved, pair = sc.resolve(obj)
    except (ValueError, SpectralOverlapError) as e:
        raise InputError(f"{path}: {e}") from None
    return resolved, pair


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_generate(args):
    resolved, _ = _load(args.construction)
    _write(json.dumps(resolved, indent=2) + "\n", args.output)
    return EXIT_OK


def run_verification(pair, ver, points=None, seed=None, extra_tol=None):
    tol = dict(ver.get("tolerances", {}))
    tol.update(extra_tol or {})
    trials = ver.get("geodesic_trials", 3)
    return vf.verify_pair(
        pair.g,
        pair.L,
        pair.chart,
        n_points=points if points is not None else ver.get("n_points", 100),
        seed=seed if seed is not None else ver.get("seed", 0),
        tolerances=tol,
        trials=trials,
        gbar=pair.gbar,
    )


def _reports_csv(reports):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "n", "max_residual", "tolerance", "pass"])
    for r in reports:
        w.writerow([r.check, r.accepted, _fmt(r.max_residual), _fmt(r.tolerance), str(r.passed).lower()])
    return buf.getvalue()


def cmd_verify(args):
    resolved, pair = _load(args.scene)
    extra = {}
    if args.tol_compat is not None:
        extra["compatibility"] = args.tol_compat
    if args.tol_geo is not None:
        extra["geodesic_equivalence"] = args.tol_geo
    try:
        reports = run_verification(pair, resolved["verification"], args.points, args.seed, extra)
    except DomainError as e:
        raise InputError(f"{args.scene}: {e}") from None
    ok = all(r.passed for r in reports)
    if args.format == "csv":
        _write(_reports_csv(reports), args.output)
    else:
        out = {"kind": pair.kind, "passed": ok, "reports": [r.to_dict() for r in reports]}
        _write(json.dumps(out, indent=2) + "\n", args.output)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_geodesic(args):
    resolved, pair = _load(args.scene)
    p0 = np.array(_floats(args.p0, "p0"))
    v0 = np.array(_floats(args.v0, "v0"))
    if p0.size != pair.dim or v0.size != pair.dim:
        raise InputError(f"--p0 and --v0 need {pair.dim} components")
    try:
        traj = vf.integrate_geodesic(pair.g, p0, v0, args.T, args.tol)
    except ExclusionError as e:
        raise InputError(f"--p0: {e}") from None
    except IntegrationError as e:
        print(f"integration failed: {e}", file=sys.stderr)
        return EXIT_FAIL
    samples = list(traj)
    if args.samples and len(traj) > 1:
        end = traj[-1].t
        samples = traj.at(np.linspace(0.0, end, args.samples), g=pair.g)
    ts = vf.default_t_values(pair.L, p0)
    n = pair.dim
    header = (
        ["t"]
        + [f"x{i + 1}" for i in range(n)]
        + [f"v{i + 1}" for i in range(n)]
        + [f"I_{i + 1}" for i in range(len(ts))]
        + ["equiv_residual"]
    )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if traj.exited:
        buf.write(f"# partial: {traj.message}\n")
    w.writerow(header)
    first = [vf.integral_It(pair.g, pair.L, t, samples[0]) for t in ts]
    drift = [0.0] * len(ts)
    worst_equiv = 0.0
    for s in samples:
        ints = [vf.integral_It(pair.g, pair.L, t, s) for t in ts]
        for k, (a, b) in enumerate(zip(ints, first)):
            drift[k] = max(drift[k], abs(a - b) / max(abs(b), 1e-300))
        eq = vf.unparam_geodesic_residual(pair.gbar, [s])
        worst_equiv = max(worst_equiv, eq)
        w.writerow([_fmt(s.t)] + [_fmt(x) for x in s.point] + [_fmt(x) for x in s.velocity]
                   + [_fmt(x) for x in ints] + [_fmt(eq)])
    _write(buf.getvalue(), args.output)
    print("I_k uses t = " + ", ".join(_fmt(t) for t in ts), file=sys.stderr)
    print(
        f"samples={len(samples)} max_relative_drift={max(drift):.3e} "
        f"max_equiv_residual={worst_equiv:.3e}" + (" PARTIAL" if traj.exited else ""),
        file=sys.stderr,
    )
    return EXIT_FAIL if traj.exited else EXIT_OK


def cmd_split(args):
    resolved, pair = _load(args.scene)
    p = np.array(_floats(args.point, "point"))
    if p.size != pair.dim:
        raise InputError(f"--point needs {pair.dim} components")
    try:
        pair.chart.check(p)
    except ExclusionError as e:
        raise InputError(f"--point: {e}") from None
    try:
        s = split_pointwise(pair.g, pair.L, p, args.tol)
    except la.SpectrumError as e:
        print(f"degenerate clustering: {e}", file=sys.stderr)
        return EXIT_FAIL
    out = {
        "point": [float(x) for x in p],
        "cross_term": s.cross_term,
        "blocks": [
            {
                "eigenvalue": [b.cluster.value.real, b.cluster.value.imag],
                "multiplicity": b.cluster.multiplicity,
                "kind": b.cluster.kind,
                "chi": [float(np.real(c)) for c in b.chi.coeffs],
                "projector": np.asarray(b.projector, dtype=float).tolist(),
                "basis": b.basis.tolist(),
                "h_block": b.h_block.tolist(),
            }
            for b in s.blocks
        ],
    }
    _write(json.dumps(out, indent=2) + "\n", args.output)
    return EXIT_OK


DEMOS = [
    (
        "dini",
        {"kind": "dini", "params": {"X": [1, 0, 0.1], "Y": [3, 0, 0.1]}},
        True,
    ),
    (
        "complex_jordan n=2",
        {"kind": "complex_jordan", "n": 2, "params": {"lambda": [[0, 1], [0.5, 0]]}},
        True,
    ),
    ("aminova", {"kind": "aminova"}, False),
]


def cmd_demo(args):
    all_expected = True
    for name, construction, expect in DEMOS:
        resolved, pair = sc.resolve({"construction": construction})
        reports = run_verification(pair, resolved["verification"], args.points, args.seed)
        ok = all(r.passed for r in reports)
        all_expected &= ok == expect
        verdict = "equivalent" if ok else "NOT equivalent"
        print(f"{name}: {verdict} (expected {'pass' if expect else 'fail'})")
        for r in reports:
            mark = "pass" if r.passed else "FAIL"
            print(f"  {r.check:22s} max={r.max_residual:.3e} tol={r.tolerance:.0e} {mark}")
    return EXIT_OK if all_expected else EXIT_FAIL


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_INPUT)


def build_parser():
    p = _Parser(prog="geodeq", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="resolve a construction file into a scene file")
    g.add_argument("construction")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", help="run every check on a scene")
    v.add_argument("scene")
    v.add_argument("--points", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--format", choices=("json", "csv"), default="json")
    v.add_argument("--tol-compat", type=float)
    v.add_argument("--tol-geo", type=float)
    v.add_argument("-o", "--output")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("geodesic", help="integrate one geodesic and emit a CSV trajectory")
    d.add_argument("scene")
    d.add_argument("--p0", required=True)
    d.add_argument("--v0", required=True)
    d.add_argument("--T", type=float, default=1.0)
    d.add_argument("--tol", type=float, default=1e-10)
    d.add_argument("--samples", type=int, default=0, help="uniform output times (0: integrator steps)")
    d.add_argument("--emit", choices=("csv",), default="csv")
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_geodesic)

    s = sub.add_parser("split", help="pointwise block decomposition of a scene")
    s.add_argument("scene")
    s.add_argument("--point", required=True)
    s.add_argument("--tol", type=float, default=1e-7)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_split)

    m = sub.add_parser("demo", help="Dini pass, complex Jordan pass, Aminova fail")
    m.add_argument("--points", type=int, default=50)
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=cmd_demo)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
