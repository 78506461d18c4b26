"""Command line interface.

Subcommands: validate, continue, replay, plotdata.  The process exits with
code 0 only when a run ends in a certified success.  Set CONNORB_THREADS to
cap the BLAS thread pool before numpy is loaded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def _cap_threads():
    cap = os.environ.get("CONNORB_THREADS")
    if cap:
        for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def main(argv=None) -> int:
    _cap_threads()
    parser = argparse.ArgumentParser(
        prog="connorb",
        description="validated existence proofs for connecting orbits")
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="run the full pipeline on a config")
    p_val.add_argument("config", help="problem config (JSON)")
    p_val.add_argument("--out", default="connorb_out",
                       help="artifact directory")
    p_val.add_argument("--quiet", action="store_true")

    p_cont = sub.add_parser("continue",
                            help="discrete continuation along a parameter")
    p_cont.add_argument("config", help="problem config (JSON)")
    p_cont.add_argument("plan", help="continuation plan (JSON)")
    p_cont.add_argument("--out", default="connorb_out")
    p_cont.add_argument("--quiet", action="store_true")

    p_rep = sub.add_parser("replay", help="re-run the bounds from a checkpoint")
    p_rep.add_argument("checkpoint")
    p_rep.add_argument("--quiet", action="store_true")

    p_plot = sub.add_parser("plotdata",
                            help="emit orbit/chart/radii plot data")
    p_plot.add_argument("checkpoint")
    p_plot.add_argument("--out", default="connorb_plot")

    args = parser.parse_args(argv)

    from . import driver

    if args.command == "validate":
        art = driver.run_validate(_load_json(args.config), out_dir=args.out,
                                  verbose=not args.quiet)
        res = art.result
        print(f"certified: {res.success}  interval: "
              f"[{res.r_lo:.6e}, {res.r_hi:.6e}]  "
              f"transversal: {res.transversal}")
        return 0 if res.success else 1
    if args.command == "continue":
        results = driver.run_continuation(_load_json(args.config),
                                          _load_json(args.plan),
                                          verbose=not args.quiet)
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "continuation.json"), "w") as fh:
            json.dump(results, fh, indent=1)
        ok = all(r.get("success", False) for r in results if r["accepted"])
        print(f"continuation: {sum(r['accepted'] for r in results)} accepted "
              f"steps, all validated: {ok}")
        return 0 if ok and results else 1
    if args.command == "replay":
        res = driver.replay(args.checkpoint, verbose=not args.quiet)
        print(f"certified: {res.success}  interval: "
              f"[{res.r_lo:.6e}, {res.r_hi:.6e}]")
        return 0 if res.success else 1
    if args.command == "plotdata":
        driver.emit_plotdata(args.checkpoint, args.out)
        print(f"plot data written to {args.out}")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
