#!/usr/bin/env python3
"""Sweep the fixed final time over a grid and tabulate the inner objective.

Useful for eyeballing the free-time landscape J*(tf) before trusting
the golden-section search, and for picking search windows.
"""

import argparse

import numpy as np

from entctrl.scenario import scenario_from_dict
from entctrl.solver import forward_backward_sweep


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-min", type=float, default=0.2)
    ap.add_argument("--t-max", type=float, default=2.0)
    ap.add_argument("--points", type=int, default=10)
    ap.add_argument("--n-steps", type=int, default=1000)
    ap.add_argument("--gamma", type=float, default=0.1)
    ap.add_argument("--out", help="optional CSV path for the table")
    args = ap.parse_args()

    cfg = scenario_from_dict({"preset": "paper-sec4", "gamma": args.gamma,
                              "n_steps": args.n_steps})
    hs = cfg.hamiltonian_set()
    rho0 = cfg.initial_density()
    scfg = cfg.solver_config()

    rows = []
    print(f"{'tf':>8} {'objective':>14} {'concurrence':>12} {'sweeps':>7} {'conv':>5}")
    for tf in np.linspace(args.t_min, args.t_max, args.points):
        sol = forward_backward_sweep(rho0, hs, float(tf), scfg, n_steps=args.n_steps)
        rows.append((tf, sol.objective, sol.concurrence_final, sol.sweeps_used,
                     sol.converged))
        print(f"{tf:8.4f} {sol.objective:14.9f} {sol.concurrence_final:12.9f} "
              f"{sol.sweeps_used:7d} {str(sol.converged):>5}")

    if args.out:
        with open(args.out, "w") as fh:
            fh.write("tf,objective,concurrence,sweeps,converged\n")
            for tf, obj, c, s, conv in rows:
                fh.write(f"{tf:.12e},{obj:.12e},{c:.12e},{s},{conv}\n")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
