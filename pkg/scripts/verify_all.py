"""Run verify / pde-scan / deform-check over the whole catalog and print a table.

    python scripts/verify_all.py [--samples 100] [--seed 0] [--tol-profile jet] [--json out.json]
"""
import argparse
import json

from finsler_lab import catalog as cat
from finsler_lab import runner


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--tol-profile", default="jet", choices=sorted(runner.TOL_PROFILES))
    ap.add_argument("--json")
    args = ap.parse_args()

    reports = []
    for name, e in cat.load_catalog().items():
        if e.kind == "deformation":
            reps = [runner.deform_check(e, min(args.samples, 50), args.seed, args.dim)]
        else:
            reps = [runner.pde_scan(e), runner.verify(e, args.samples, args.seed, args.dim, args.tol_profile)]
        for r in reps:
            worst = max(r.checks, key=lambda c: -1 if c.max_residual is None else c.max_residual / c.tolerance
                        if c.tolerance else c.max_residual)
            failed = [c.name for c in r.checks if not c.passed]
            print(f"{name:20s} {r.kind:13s} {'pass' if r.passed else 'FAIL':5s} "
                  f"tightest {worst.name}={worst.max_residual:.1e} (tol {worst.tolerance:.0e}) "
                  f"{r.wall_time_ms / 1000:6.2f}s {' '.join(failed)}")
            reports.append(r.to_dict())
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(reports, fh, indent=2)


if __name__ == "__main__":
    main()
