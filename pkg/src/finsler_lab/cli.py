"""finsler-lab command line.

Exit codes: 0 all checks passed, 1 some check failed, 2 bad usage (unknown
name, bad flags, or a request that does not fit the entry).
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings

from . import catalog as cat
from . import runner
from .errors import FinslerLabError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _grid(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 20x20, got {text!r}")
    if a < 1 or b < 1:
        raise argparse.ArgumentTypeError("grid sizes must be positive")
    return a, b


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _dim(text: str) -> int:
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError("dimension must be >= 2")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="finsler-lab", description="Verify projectively flat general (alpha, beta)-metrics.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    sub.add_parser("list", help="list catalog entries")
    info = sub.add_parser("info", help="show one catalog entry")
    info.add_argument("name")

    v = sub.add_parser("verify", help="randomized verification of a metric")
    v.add_argument("name")
    v.add_argument("--samples", type=_positive, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--dim", type=_dim, default=3)
    v.add_argument("--tol-profile", choices=sorted(runner.TOL_PROFILES), default="jet")
    v.add_argument("--out")

    s = sub.add_parser("pde-scan", help="grid scan of the PDE/ODE residuals of a family")
    s.add_argument("name")
    s.add_argument("--grid", type=_grid, default=(20, 20))
    s.add_argument("--out")

    d = sub.add_parser("deform-check", help="certify the flattening deformation of a chart")
    d.add_argument("name")
    d.add_argument("--samples", type=_positive, default=50)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--dim", type=_dim, default=3)
    d.add_argument("--route", choices=["auto", "nonzero", "zero"], default="auto")
    d.add_argument("--out")
    return p


def _emit(report: runner.VerificationReport, out: str | None) -> int:
    text = report.to_json()
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0 if report.passed else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        entries = cat.load_catalog()
    except (cat.CatalogError, OSError) as e:
        print(f"finsler-lab: catalog error: {e}", file=sys.stderr)
        return 2
    if args.cmd == "list":
        for e in entries.values():
            K = "" if e.expected_K is None else f"K={e.expected_K:g}"
            tag = e.family["tag"] if e.family else f"deformation:{e.route}"
            print(f"{e.name:22s} {tag:14s} {K:8s} {e.regularity if e.family else ''}")
        return 0
    if args.name not in entries:
        print(f"finsler-lab: unknown name {args.name!r}", file=sys.stderr)
        return 2
    entry = entries[args.name]
    if args.cmd == "info":
        print(json.dumps(entry.summary(), indent=2))
        return 0
    if getattr(args, "dim", 3) == 2:
        warnings.warn("n = 2 lies outside the dimensions the constructions are stated for", stacklevel=1)
    try:
        if args.cmd == "verify":
            rep = runner.verify(entry, args.samples, args.seed, args.dim, args.tol_profile)
        elif args.cmd == "pde-scan":
            rep = runner.pde_scan(entry, args.grid)
        else:
            rep = runner.deform_check(entry, args.samples, args.seed, args.dim, args.route)
    except (runner.RoutingError, cat.CatalogError) as e:
        print(f"finsler-lab: {e}", file=sys.stderr)
        return 2
    except FinslerLabError as e:
        print(f"finsler-lab: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return _emit(rep, args.out)


if __name__ == "__main__":
    sys.exit(main())
