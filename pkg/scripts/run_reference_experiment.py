#!/usr/bin/env python3
"""Optimize the bundled reference scenario and save the figure data.

Writes timeseries.csv (controls, concurrence, switching functions per
grid node) and summary.json into the output directory. Plot u_1..u_3
against t for the control fields and concurrence_eq3 against t for the
entanglement trace.
"""

import argparse
from pathlib import Path

from entctrl.cli import run_optimize
from entctrl.scenario import scenario_from_dict


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="runs/reference")
    ap.add_argument("--n-steps", type=int, default=1000)
    ap.add_argument("--tf", type=float, help="fix the final time instead of searching")
    ap.add_argument("--gamma", type=float, default=0.1)
    args = ap.parse_args()

    doc = {"preset": "paper-sec4", "gamma": args.gamma, "n_steps": args.n_steps}
    if args.tf is not None:
        doc["tf"] = args.tf
    cfg = scenario_from_dict(doc)
    return run_optimize(cfg, Path(args.out_dir))


if __name__ == "__main__":
    raise SystemExit(main())
