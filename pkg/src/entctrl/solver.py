"""Bang-bang optimizer for the entanglement objective.

The first-order machinery couples three pieces: a terminal costate built
from the gradient of the concurrence objective, backward propagation of
that costate on the full state space, and per-cell switching functions
whose signs select the extremal control values. The adjoint is lifted to
the full space (reduced terminal factor tensored with the identity on
subsystem B): the full bilinear dynamics then give a well-posed adjoint
equation regardless of correlations between the subsystems, and the
partial-trace duality Tr((x ⊗ I)^dag X) = Tr(x^dag Tr_B X) reproduces
the reduced-state switching expression exactly.

The fixed-horizon iteration is a damped forward-backward sweep: flip the
worst-aligned cells first, never more than a fraction per sweep, and
keep a sweep only if the objective does not increase. The free final
time is handled by an outer golden-section search over the inner
objective, seeded with a coarse bracket scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import (ControlSchedule, CostateTrajectory, HamiltonianSet,
                       Trajectory, _cell_propagators, _propagate_costates,
                       _propagate_states, assemble_hamiltonian)
from .entanglement import concurrence_from_reduced
from .linalg import as_matrix, commutator, is_hermitian, kron, partial_trace_b
from .states import DensityMatrix

TIE_TOL = 1e-12
IMAG_TOL = 1e-8
COSTATE_CHECK_TOL = 1e-9
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TimeSearch:
    """Window and stopping tolerance for the free-final-time search."""

    t_min: float
    t_max: float
    tolerance: float = 0.02
    coarse_points: int = 6

    def __post_init__(self):
        if not 0.0 < self.t_min < self.t_max:
            raise ValueError("need 0 < t_min < t_max")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.coarse_points < 2:
            raise ValueError("coarse_points must be at least 2")


@dataclass(frozen=True)
class SolverConfig:
    gamma: float = 0.1
    max_sweeps: int = 200
    flip_fraction: float = 0.2
    convergence_tol: float = 1e-10
    denominator_floor: float = 1e-9
    tf_search: TimeSearch | None = None

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if not 0.0 < self.flip_fraction <= 1.0:
            raise ValueError("flip_fraction must lie in (0, 1]")
        if self.convergence_tol <= 0 or self.denominator_floor <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class OptimalSolution:
    """Converged schedule with trajectories and first-order diagnostics.

    switching[k, j] is the cell-j switching function of channel k + 1,
    evaluated at the cell midpoint; switch_times lists (channel, time)
    pairs with 1-based channels, matching the u_1..u_m column naming.
    """

    schedule: ControlSchedule
    trajectory: Trajectory
    costates: CostateTrajectory
    switching: np.ndarray
    objective: float
    concurrence_final: float
    tf: float
    switch_times: tuple[tuple[int, float], ...]
    sweeps_used: int
    transversality_residual: float
    converged: bool
    floor_active: bool
    objective_history: tuple[float, ...]
    hamiltonians: HamiltonianSet
    termination: str = "stationary"
    tf_evaluations: tuple[tuple[float, float], ...] = ()


def objective(rho_final: DensityMatrix, tf: float, gamma: float) -> float:
    """Cost -C(rho_A(tf)) + gamma * tf to be minimized."""
    return -concurrence_from_reduced(rho_final.reduced_a()) + gamma * tf


def _concurrence_arr(rho: np.ndarray, dim_a: int, dim_b: int) -> float:
    rho_a = partial_trace_b(rho, dim_a, dim_b)
    tr2 = float(np.sum(np.abs(rho_a) ** 2))
    return float(np.sqrt(2.0 * max(0.0, 1.0 - tr2)))


def terminal_costate(rho_a_tf, floor: float, dim_b: int = 2) -> tuple[np.ndarray, bool]:
    """Terminal costate lifted to the full space, and the floor flag.

    The reduced factor sqrt(2) rho_A / sqrt(1 - Tr(rho_A^2)) diverges at
    the separable boundary; the floor regularizes the denominator and
    the returned flag reports when it engaged.
    """
    rho_a = as_matrix(rho_a_tf)
    tr2 = float(np.sum(np.abs(rho_a) ** 2))
    gap = 1.0 - tr2
    active = gap < floor
    factor = (math.sqrt(2.0) / math.sqrt(max(gap, floor))) * rho_a
    return kron(factor, np.eye(dim_b, dtype=complex)), active


def switching_function(pi_full, rho: DensityMatrix, h_k) -> float:
    """Switching function -i Tr(pi^dag [H_k, rho]).

    Real for Hermitian inputs; an imaginary residue beyond IMAG_TOL
    means a state or costate lost Hermiticity upstream.
    """
    pi = as_matrix(pi_full)
    if not is_hermitian(pi, COSTATE_CHECK_TOL):
        raise ValueError("costate must be Hermitian")
    val = -1j * np.trace(pi.conj().T @ commutator(h_k, rho.matrix))
    if abs(val.imag) > IMAG_TOL:
        raise ArithmeticError(
            f"switching function has imaginary residue {val.imag:.3e}; "
            "state or costate lost Hermiticity upstream")
    return float(val.real)


def bang_bang_update(phi: float, u_prev: float, u_max: float,
                     tie_tol: float = TIE_TOL) -> float:
    """Extremal control for one cell: the sign of phi picks the bound.

    Exact ties keep the previous value, which avoids chattering where
    the switching function vanishes.
    """
    if u_max <= 0:
        raise ValueError("u_max must be positive")
    if phi < -tie_tol:
        return u_max
    if phi > tie_tol:
        return -u_max
    return u_prev


def _switching_batch(states: np.ndarray, pis: np.ndarray, half: np.ndarray,
                     hk: np.ndarray) -> np.ndarray:
    """Per-cell switching functions at the cell midpoints, all channels."""
    n = half.shape[0]
    if hk.shape[0] == 0 or n == 0:
        return np.zeros((hk.shape[0], n))
    half_h = half.conj().transpose(0, 2, 1)
    rm = half @ states[:-1] @ half_h
    pm = half_h @ pis[1:] @ half
    comm = hk[:, None] @ rm[None] - rm[None] @ hk[:, None]
    phi = -1j * np.einsum("nij,knij->kn", pm.conj(), comm)
    worst = float(np.abs(phi.imag).max(initial=0.0))
    if worst > IMAG_TOL:
        raise ArithmeticError(
            f"switching functions have imaginary residue up to {worst:.3e}")
    return phi.real.copy()


def _switch_times(values: np.ndarray, times: np.ndarray) -> tuple[tuple[int, float], ...]:
    out = []
    for k in range(values.shape[0]):
        jumps = np.flatnonzero(np.abs(np.diff(values[k])) > 0)
        out.extend((k + 1, float(times[j + 1])) for j in jumps)
    return tuple(out)


def forward_backward_sweep(rho0: DensityMatrix, hs: HamiltonianSet, tf: float,
                           cfg: SolverConfig,
                           initial_schedule: ControlSchedule | None = None,
                           n_steps: int = 1000,
                           initial_control=None) -> OptimalSolution:
    """Iterate forward propagation, costate back-propagation, and flips.

    Each sweep proposes the bang-bang reassignment of every misaligned
    cell, applies at most a flip_fraction share of them in descending
    switching-magnitude order, and keeps the sweep only if the objective
    does not increase, halving the share otherwise. Terminates on zero
    flips, an objective change below convergence_tol, or max_sweeps;
    the converged flag reflects which.
    """
    if rho0.dim != hs.dim:
        raise ValueError(f"state dimension {rho0.dim} does not match Hamiltonians ({hs.dim})")
    if initial_schedule is None:
        if tf <= 0:
            raise ValueError("tf must be positive")
        if initial_control is None:
            initial_control = -hs.u_max * np.ones(hs.m)
        sched = ControlSchedule.constant(initial_control, 0.0, tf, n_steps)
    else:
        sched = initial_schedule
        if abs(sched.tf - tf) > 1e-12:
            raise ValueError("initial_schedule.tf disagrees with tf")
        n_steps = sched.n_steps
    if sched.m != hs.m:
        raise ValueError(f"schedule has {sched.m} channels but the Hamiltonian set has {hs.m}")
    sched.check_bounds(hs.u_max)

    dim_a, dim_b = rho0.dim_a, rho0.dim_b
    dt = sched.dt
    hk = (np.stack(hs.controls) if hs.m else np.zeros((0, hs.dim, hs.dim), dtype=complex))
    values = np.array(sched.values, dtype=float)

    def evaluate(vals):
        full, half = _cell_propagators(hs, vals, dt)
        states = _propagate_states(rho0.matrix, full)
        j = -_concurrence_arr(states[-1], dim_a, dim_b) + cfg.gamma * tf
        if not math.isfinite(j):
            raise RuntimeError("non-finite objective: numerical breakdown")
        return full, half, states, j

    full, half, states, obj = evaluate(values)
    history = [obj]
    floor_any = False
    converged = False
    termination = "max-sweeps"
    sweeps_used = 0

    for sweep in range(cfg.max_sweeps):
        sweeps_used = sweep + 1
        rho_a_f = partial_trace_b(states[-1], dim_a, dim_b)
        pi_tf, hit = terminal_costate(rho_a_f, cfg.denominator_floor, dim_b)
        floor_any = floor_any or hit
        pis = _propagate_costates(pi_tf, full)
        phi = _switching_batch(states, pis, half, hk)
        desired = np.where(phi < -TIE_TOL, hs.u_max,
                           np.where(phi > TIE_TOL, -hs.u_max, values))
        flips = np.argwhere(desired != values)
        if flips.shape[0] == 0:
            converged = True
            termination = "stationary"
            break
        order = np.argsort(-np.abs(phi[flips[:, 0], flips[:, 1]]), kind="stable")
        frac = cfg.flip_fraction
        accepted = False
        while True:
            n_acc = max(1, math.ceil(frac * flips.shape[0]))
            sel = flips[order[:n_acc]]
            cand = values.copy()
            cand[sel[:, 0], sel[:, 1]] = desired[sel[:, 0], sel[:, 1]]
            cfull, chalf, cstates, cobj = evaluate(cand)
            if cobj <= obj:
                delta = obj - cobj
                values, full, half, states, obj = cand, cfull, chalf, cstates, cobj
                history.append(obj)
                accepted = True
                break
            if n_acc <= 1:
                break
            frac *= 0.5
        if not accepted:
            # even the largest-magnitude single flip raises the objective
            converged = True
            termination = "no-improving-flip"
            break
        if delta < cfg.convergence_tol:
            converged = True
            termination = "objective-stalled"
            break

    # final diagnostics, consistent with the returned schedule
    rho_a_f = partial_trace_b(states[-1], dim_a, dim_b)
    pi_tf, hit = terminal_costate(rho_a_f, cfg.denominator_floor, dim_b)
    floor_any = floor_any or hit
    pis = _propagate_costates(pi_tf, full)
    phi = _switching_batch(states, pis, half, hk)

    times = sched.times
    schedule = ControlSchedule(sched.t0, sched.tf, n_steps, values)
    trajectory = Trajectory(times, (rho0,) + tuple(
        DensityMatrix(states[j], dim_a, dim_b) for j in range(1, states.shape[0])))
    costates = CostateTrajectory(times, tuple(pis))
    concurrence_final = _concurrence_arr(states[-1], dim_a, dim_b)

    sol = OptimalSolution(
        schedule=schedule,
        trajectory=trajectory,
        costates=costates,
        switching=phi,
        objective=obj,
        concurrence_final=concurrence_final,
        tf=tf,
        switch_times=_switch_times(values, times),
        sweeps_used=sweeps_used,
        transversality_residual=0.0,
        converged=converged,
        floor_active=floor_any,
        objective_history=tuple(history),
        hamiltonians=hs,
        termination=termination,
    )
    return replace(sol, transversality_residual=transversality_residual(
        sol, cfg.gamma, cfg.denominator_floor))


def transversality_residual(sol: OptimalSolution, gamma: float,
                            floor: float = 1e-9) -> float:
    """Gap between the final-time control Hamiltonian and its free-time target.

    Compares Tr(Pi(tf)^dag rho_dot(tf)) against Tr(G rho_A_dot(tf)) - gamma
    with G = sqrt(2) rho_A / (2 sqrt(1 - Tr(rho_A^2))), both evaluated
    with the final-cell Hamiltonian. Diagnostic only, never enforced.
    """
    rho_f = sol.trajectory.final
    h_last = assemble_hamiltonian(sol.hamiltonians, sol.schedule.values[:, -1])
    rho_dot = -1j * commutator(h_last, rho_f.matrix)
    hp = float(np.trace(sol.costates.final.conj().T @ rho_dot).real)
    rho_a = rho_f.reduced_a()
    rho_a_dot = partial_trace_b(rho_dot, rho_f.dim_a, rho_f.dim_b)
    tr2 = float(np.sum(np.abs(rho_a) ** 2))
    g = (math.sqrt(2.0) / (2.0 * math.sqrt(max(1.0 - tr2, floor)))) * rho_a
    target = float(np.trace(g.conj().T @ rho_a_dot).real) - gamma
    return abs(hp - target)


def optimize_final_time(rho0: DensityMatrix, hs: HamiltonianSet, cfg: SolverConfig,
                        n_steps: int = 1000, initial_control=None) -> OptimalSolution:
    """Golden-section search of the free final time on the sweep objective.

    A coarse scan over cfg.tf_search.coarse_points grid points brackets
    the minimum first; golden-section then contracts the bracket below
    the search tolerance. Every evaluation is a full fixed-horizon
    sweep, and the best solution over all evaluated horizons is
    returned with its (tf, objective) evaluation log attached.
    """
    if cfg.tf_search is None:
        raise ValueError("cfg.tf_search must be set for the free-final-time search")
    ts = cfg.tf_search
    cache: dict[float, OptimalSolution] = {}

    def solve(tf: float) -> float:
        tf = float(tf)
        if tf not in cache:
            cache[tf] = forward_backward_sweep(rho0, hs, tf, cfg, n_steps=n_steps,
                                               initial_control=initial_control)
        return cache[tf].objective

    grid = np.linspace(ts.t_min, ts.t_max, ts.coarse_points)
    best_i = int(np.argmin([solve(t) for t in grid]))
    a = float(grid[max(0, best_i - 1)])
    b = float(grid[min(ts.coarse_points - 1, best_i + 1)])
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = solve(x1), solve(x2)
    while b - a > ts.tolerance:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = solve(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = solve(x2)
    log = tuple((t, s.objective) for t, s in cache.items())
    best = min(cache.values(), key=lambda s: s.objective)
    return replace(best, tf_evaluations=log)
