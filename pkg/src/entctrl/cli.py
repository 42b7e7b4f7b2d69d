"""Command-line entry points: simulate, optimize, and preset listing.

Outputs are flat files meant for plotting tools and diffing: a CSV time
series (one row per grid node) and a JSON summary. All floating-point
output uses fixed scientific notation with 12 significant digits so
reruns of the same configuration are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .dynamics import ControlSchedule, propagate_forward
from .entanglement import concurrence_from_reduced, wootters_concurrence
from .scenario import (HAMILTONIAN_PRESETS, SCENARIO_PRESETS, STATE_PRESET_NAMES,
                       ScenarioConfig, ScenarioError, load_scenario)
from .solver import forward_backward_sweep, optimize_final_time

OUT_DIR_ENV = "ENTCTRL_OUT_DIR"
TIMESERIES_NAME = "timeseries.csv"
SUMMARY_NAME = "summary.json"


def _fmt(x: float) -> str:
    return format(float(x), ".11e")


def _json_fragment(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj) if np.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = (f'{pad}  {json.dumps(str(k))}: {_json_fragment(v, indent + 1)}'
                 for k, v in obj.items())
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = (f"{pad}  {_json_fragment(v, indent + 1)}" for v in obj)
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_summary(obj: dict) -> str:
    return _json_fragment(obj) + "\n"


def _cell_value(arr: np.ndarray, k: int, j: int, n: int) -> float:
    # node j shows the value of cell j; the last node repeats the final cell
    return float(arr[k, min(j, n - 1)])


def write_timeseries(path: Path, times, controls: np.ndarray,
                     states, switching: np.ndarray | None = None) -> None:
    m = controls.shape[0]
    header = ["t"] + [f"u_{k + 1}" for k in range(m)]
    header += ["concurrence_eq3", "wootters_concurrence", "purity_reduced"]
    if switching is not None:
        header += [f"phi_{k + 1}" for k in range(m)]
    lines = [",".join(header)]
    n_cells = controls.shape[1]
    for j, t in enumerate(times):
        rho = states[j]
        rho_a = rho.reduced_a()
        row = [_fmt(t)]
        for k in range(m):
            row.append(_fmt(_cell_value(controls, k, j, n_cells)) if n_cells else _fmt(0.0))
        row.append(_fmt(concurrence_from_reduced(rho_a)))
        row.append(_fmt(wootters_concurrence(rho)))
        row.append(_fmt(float(np.sum(np.abs(rho_a) ** 2))))
        if switching is not None:
            for k in range(m):
                row.append(_fmt(_cell_value(switching, k, j, n_cells)) if n_cells else _fmt(0.0))
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def _config_echo(cfg: ScenarioConfig) -> dict:
    doc = cfg.to_dict()
    doc.pop("out_dir", None)  # keep summaries identical across target directories
    return doc


def write_summary(path: Path, cfg: ScenarioConfig, *, objective, tf,
                  concurrence_final, switch_times, sweeps_used,
                  transversality_residual, converged, floor_active,
                  objective_history) -> None:
    doc = {
        "objective": objective,
        "tf": tf,
        "concurrence_final": concurrence_final,
        "switch_times": [{"channel": int(c), "time": float(t)} for c, t in switch_times],
        "sweeps_used": sweeps_used,
        "transversality_residual": transversality_residual,
        "converged": converged,
        "floor_active": floor_active,
        "objective_history": (None if objective_history is None
                              else [float(x) for x in objective_history]),
        "config_echo": _config_echo(cfg),
    }
    path.write_text(dumps_summary(doc))


def load_schedule(path) -> ControlSchedule:
    """Read a JSON schedule file with keys t0, tf, n_steps, values."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: schedule document must be a JSON object")
    missing = {"t0", "tf", "n_steps", "values"} - set(doc)
    if missing:
        raise ScenarioError(f"{path}: schedule is missing keys {sorted(missing)}")
    try:
        values = np.array(doc["values"], dtype=float)
        if values.ndim != 2:
            raise ValueError("values must be a channels x cells array")
        return ControlSchedule(float(doc["t0"]), float(doc["tf"]),
                               int(doc["n_steps"]), values)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def _switch_times_of(sched: ControlSchedule) -> list[tuple[int, float]]:
    times = sched.times
    out = []
    for k in range(sched.m):
        jumps = np.flatnonzero(np.abs(np.diff(sched.values[k])) > 0)
        out.extend((k + 1, float(times[j + 1])) for j in jumps)
    return out


def run_simulate(cfg: ScenarioConfig, sched: ControlSchedule, out_dir: Path,
                 quiet: bool = False) -> int:
    """Replay a fixed schedule and write the time series and summary."""
    hs = cfg.hamiltonian_set()
    rho0 = cfg.initial_density()
    if sched.m != hs.m:
        raise ScenarioError(
            f"schedule has {sched.m} channels but the scenario defines {hs.m}")
    sched.check_bounds(hs.u_max)

    traj = propagate_forward(rho0, hs, sched)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_timeseries(out_dir / TIMESERIES_NAME, traj.times, sched.values, traj.states)
    final_c = concurrence_from_reduced(traj.final.reduced_a())
    write_summary(
        out_dir / SUMMARY_NAME, cfg,
        objective=-final_c + cfg.gamma * sched.tf,
        tf=sched.tf,
        concurrence_final=final_c,
        switch_times=_switch_times_of(sched),
        sweeps_used=0,
        transversality_residual=None,
        converged=None,
        floor_active=None,
        objective_history=None,
    )
    if not quiet:
        print(f"simulated {sched.n_steps} cells to t = {sched.tf:g}: "
              f"final concurrence {final_c:.6f}")
        print(f"wrote {out_dir / TIMESERIES_NAME} and {out_dir / SUMMARY_NAME}")
    return 0


def run_optimize(cfg: ScenarioConfig, out_dir: Path, quiet: bool = False) -> int:
    """Optimize the schedule (and final time, if a window is configured)."""
    hs = cfg.hamiltonian_set()
    rho0 = cfg.initial_density()
    scfg = cfg.solver_config()
    if cfg.tf is not None:
        sol = forward_backward_sweep(rho0, hs, cfg.tf, scfg, n_steps=cfg.n_steps,
                                     initial_control=cfg.initial_control)
    else:
        sol = optimize_final_time(rho0, hs, scfg, n_steps=cfg.n_steps,
                                  initial_control=cfg.initial_control)

    out_dir.mkdir(parents=True, exist_ok=True)
    write_timeseries(out_dir / TIMESERIES_NAME, sol.trajectory.times,
                     sol.schedule.values, sol.trajectory.states, sol.switching)
    write_summary(
        out_dir / SUMMARY_NAME, cfg,
        objective=sol.objective,
        tf=sol.tf,
        concurrence_final=sol.concurrence_final,
        switch_times=sol.switch_times,
        sweeps_used=sol.sweeps_used,
        transversality_residual=sol.transversality_residual,
        converged=sol.converged,
        floor_active=sol.floor_active,
        objective_history=sol.objective_history,
    )
    if not quiet:
        print(f"optimized: tf = {sol.tf:.6f}, objective = {sol.objective:.9f}, "
              f"final concurrence = {sol.concurrence_final:.6f}, "
              f"sweeps = {sol.sweeps_used}, converged = {sol.converged}")
        print(f"wrote {out_dir / TIMESERIES_NAME} and {out_dir / SUMMARY_NAME}")
    return 0


def _cmd_presets(args) -> int:
    print("scenario presets:")
    for name in sorted(SCENARIO_PRESETS):
        print(f"  {name}")
    print("hamiltonian presets:")
    for name in sorted(HAMILTONIAN_PRESETS):
        print(f"  {name}")
    print("state presets:")
    for name in STATE_PRESET_NAMES:
        print(f"  {name}")
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="path to a JSON scenario file")
    p.add_argument("--out-dir", help="output directory (overrides env and config)")
    p.add_argument("--n-steps", type=int, help="override the grid size")
    p.add_argument("--tf", type=float, help="override with a fixed final time")
    p.add_argument("--gamma", type=float, help="override the time-penalty weight")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entctrl",
        description="Bang-bang control fields for two-qubit entanglement generation")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="replay a fixed control schedule")
    _add_common(p_sim)
    p_sim.add_argument("--schedule", required=True, help="path to a JSON schedule file")

    p_opt = sub.add_parser("optimize", help="run the bang-bang optimization")
    _add_common(p_opt)

    p_pre = sub.add_parser("presets", help="inspect bundled presets")
    p_pre.add_argument("action", choices=["list"])
    return parser


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    if args.n_steps is not None:
        cfg = replace(cfg, n_steps=args.n_steps)
    if args.gamma is not None:
        cfg = replace(cfg, gamma=args.gamma)
    if args.tf is not None:
        cfg = replace(cfg, tf=args.tf, tf_search=None)
    return cfg


def _resolve_out_dir(args, cfg: ScenarioConfig) -> Path:
    if args.out_dir:
        return Path(args.out_dir)
    env = os.environ.get(OUT_DIR_ENV)
    if env:
        return Path(env)
    return Path(cfg.out_dir)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        return _cmd_presets(args)
    try:
        cfg = _apply_overrides(load_scenario(args.config), args)
        out_dir = _resolve_out_dir(args, cfg)
        if args.command == "simulate":
            return run_simulate(cfg, load_schedule(args.schedule), out_dir,
                                quiet=args.quiet)
        return run_optimize(cfg, out_dir, quiet=args.quiet)
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
