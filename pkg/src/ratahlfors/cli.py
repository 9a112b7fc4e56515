"""Command-line front end. Every command prints (or writes) sorted JSON.

Exit status: 0 success or Good, 2 NotGood, 3 Indeterminate, 1 any error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import capacity as cap
from .errors import NotGood, RatAhlforsError
from .families import path_report, positive_path, q_epsilon, write_path_csv
from .koebe import CircleDomainSignature, kappa_chart, koebe_uniformize
from .levelset import component_count_oracle, trace_all, write_curve_csv
from .ratmap import DEFAULT_MARGIN, RationalMap, Verdict, is_n_good
from .moduli import validate

EXIT = {Verdict.GOOD: 0, Verdict.NOT_GOOD: 2, Verdict.INDETERMINATE: 3}


class CliError(Exception):
    pass


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _load_map(path) -> RationalMap:
    if path is None:
        raise CliError("--map is required")
    return RationalMap.from_json(_load_json(path))


def _load_sig(path) -> CircleDomainSignature:
    try:
        sig = CircleDomainSignature.from_json(_load_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"malformed signature file: {exc}") from exc
    if not validate(sig):
        raise CliError("signature violates the circle-domain invariants")
    return sig


def _parse_complex(text: str) -> complex:
    try:
        re, im = text.split(",")
        return complex(float(re), float(im))
    except ValueError as exc:
        raise CliError(f"expected RE,IM but got {text!r}") from exc


def _emit(obj, out):
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_curves(curves, directory):
    os.makedirs(directory, exist_ok=True)
    for c in curves:
        with open(os.path.join(directory, f"curve_{c.pole_index}.csv"), "w") as fh:
            write_curve_csv(c, fh)


def cmd_check_good(args):
    cert = is_n_good(_load_map(args.map), args.margin)
    _emit(cert.to_json(), args.out)
    return EXIT[cert.verdict]


def cmd_capacity(args):
    Ks = args.K or [cap.DEFAULT_K]
    results = []
    if args.sig:
        sig = _load_sig(args.sig)
        for K in Ks:
            sol = cap.capacity_of_disks(sig, K=K, M=args.M)
            results.append({"K": K, **sol.to_json()})
    else:
        R = _load_map(args.map)
        if not is_n_good(R, args.margin).good:
            raise NotGood("capacity needs an n-good map")
        for K in Ks:
            problem = cap.ahlfors_problem(R, K, args.M)
            sol = cap.solve_ahlfors(problem)
            verdict = cap.classify(R, sol, args.tol)
            results.append({"K": K, **sol.to_json(verdict.kind.value), "gap": verdict.gap})
            if args.csv:
                _write_curves(problem.curves, args.csv)
    _emit(results[0] if len(results) == 1 else {"sweep": results}, args.out)
    return 0


def cmd_ahlfors_test(args):
    R = _load_map(args.map)
    K = (args.K or [cap.DEFAULT_K])[0]
    v = cap.is_ahlfors(R, tol=args.tol, K=K, M=args.M)
    _emit({**v.to_json(), "gamma_lower": v.solution.gamma_lower, "derivative_at_infinity": R.residues.sum().real}, args.out)
    return 0


def cmd_h2(args):
    R = _load_map(args.map)
    K = (args.K or [cap.DEFAULT_K])[0]
    _emit(cap.h2(R, K=K, M=args.M).to_json(), args.out)
    return 0


def cmd_koebe(args):
    R = _load_map(args.map)
    if not is_n_good(R, args.margin).good:
        raise NotGood("koebe needs an n-good map")
    curves = trace_all(R, args.M or 256, check=False)
    res = koebe_uniformize(curves)
    if args.csv:
        _write_curves(curves, args.csv)
    _emit(
        {**res.signature.to_json(), "kappa": [float(x) for x in kappa_chart(res.signature)], "sweeps": res.sweeps},
        args.out,
    )
    return 0


def cmd_qeps(args):
    R = _load_map(args.map)
    if not args.pole:
        raise CliError("at least one --pole RE,IM is required")
    poles = [_parse_complex(p) for p in args.pole]
    K = (args.K or [cap.DEFAULT_K])[0]
    rows = []
    for eps in args.eps or [1e-5]:
        Q = q_epsilon(R, poles, eps)
        cert = is_n_good(Q, args.margin)
        row = {"eps": eps, "map": Q.to_json(), "verdict": cert.verdict.value, "critical_radius": cert.critical_radius}
        row["derivative_at_infinity"] = float(Q.residues.sum().real)
        if cert.good:
            sol = cap.solve_ahlfors(cap.ahlfors_problem(Q, K, args.M))
            row["gamma_lower"] = sol.gamma_lower
            row["gap"] = sol.gamma_lower - row["derivative_at_infinity"]
        rows.append(row)
    _emit({"sweep": rows}, args.out)
    return 0


def _normalized(R: RationalMap):
    return R.residues, R.poles - R.poles.mean()


def cmd_path(args):
    if not args.map_end:
        raise CliError("--map-end is required")
    a0, b0 = _normalized(_load_map(args.map))
    a1, b1 = _normalized(_load_map(args.map_end))
    path = positive_path(a0, b0, a1, b1, eps=args.eps)
    rows = path_report(path, args.samples or 1001)
    if args.csv:
        os.makedirs(args.csv, exist_ok=True)
        with open(os.path.join(args.csv, "path.csv"), "w") as fh:
            write_path_csv(rows, fh)
    _emit(
        {
            "eps": path.eps,
            "samples": len(rows),
            "all_good": all(r["verdict"] == "Good" for r in rows),
            "min_residue": min(r["min_residue"] for r in rows),
            "max_critical_radius": max(r["critical_radius"] for r in rows),
            "max_pole_sum": max(r["pole_sum"] for r in rows),
        },
        args.out,
    )
    return 0


def cmd_oracle(args):
    R = _load_map(args.map)
    cert = is_n_good(R, args.margin)
    count = component_count_oracle(R, args.grid)
    _emit(
        {
            "components": count,
            "verdict": cert.verdict.value,
            "critical_radius": cert.critical_radius,
            "agree": (count == R.n) == cert.good if cert.verdict is not Verdict.INDETERMINATE else None,
        },
        args.out,
    )
    return 0


COMMANDS = {
    "check-good": cmd_check_good,
    "capacity": cmd_capacity,
    "ahlfors-test": cmd_ahlfors_test,
    "h2": cmd_h2,
    "koebe": cmd_koebe,
    "qeps": cmd_qeps,
    "path": cmd_path,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--map", help="rational map JSON {residues, poles}")
    common.add_argument("--sig", help="circle-domain signature JSON {centers, radii}")
    common.add_argument("-K", type=int, nargs="+", help="basis degree per pole (several values sweep)")
    common.add_argument("-M", type=int, help="boundary samples per curve")
    common.add_argument("--grid", type=int, default=1024, help="oracle grid size")
    common.add_argument("--margin", type=float, default=DEFAULT_MARGIN)
    common.add_argument("--tol", type=float, default=cap.AHLFORS_TOL)
    common.add_argument("--samples", type=int, help="path samples")
    common.add_argument("--out", help="write JSON here instead of stdout")
    common.add_argument("--csv", help="directory for CSV output")
    common.add_argument("--map-end", help="end map for the path command")
    common.add_argument("--pole", action="append", help="extra pole RE,IM for qeps (repeatable)")
    common.add_argument("--eps", type=float, nargs="+", help="epsilon value(s)")
    parser = argparse.ArgumentParser(prog="ratahlfors", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "path" and args.eps is not None:
        args.eps = args.eps[0]
    try:
        return COMMANDS[args.command](args)
    except NotGood as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RatAhlforsError, CliError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
