"""Hamiltonian assembly and piecewise-constant propagation.

Controls are held constant on each grid cell, so the exact exponential
map is the natural integrator: there is no integration-order error to
interact with switching detection, only eigensolver roundoff. Cell
propagators are cached over the distinct control vectors of a schedule,
which for bang-bang fields means at most 2^m exponentials per pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, is_hermitian, propagator
from .states import DensityMatrix, purity, repair_density

SET_HERM_TOL = 1e-12
BOUND_SLACK = 1e-12
COSTATE_HERM_TOL = 1e-9
PURITY_DRIFT_TOL = 1e-8
REPAIR_INTERVAL = 100
REPAIR_DRIFT = 1e-10


@dataclass(frozen=True)
class HamiltonianSet:
    """Drift Hamiltonian, control Hamiltonians, and the control bound."""

    h0: np.ndarray
    controls: tuple[np.ndarray, ...]
    u_max: float = 1.0

    def __post_init__(self):
        if self.u_max <= 0:
            raise ValueError("u_max must be positive")
        h0 = as_matrix(self.h0).copy()
        ctr = tuple(as_matrix(c).copy() for c in self.controls)
        for m in (h0, *ctr):
            if m.shape != h0.shape:
                raise ValueError("all Hamiltonians must share the drift's dimensions")
            if not is_hermitian(m, SET_HERM_TOL):
                raise ValueError("Hamiltonians must be Hermitian")
        h0.setflags(write=False)
        for m in ctr:
            m.setflags(write=False)
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "controls", ctr)

    @property
    def m(self) -> int:
        return len(self.controls)

    @property
    def dim(self) -> int:
        return self.h0.shape[0]


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise-constant controls on a uniform grid.

    values[k, j] is held on the half-open cell [t_j, t_{j+1}); states
    and costates live on the n_steps + 1 grid nodes. The degenerate
    empty schedule (n_steps == 0 with tf == t0) is allowed so that a
    zero-length replay is representable.
    """

    t0: float
    tf: float
    n_steps: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError(f"values must be a 2-D (channels x cells) array, got ndim {vals.ndim}")
        if vals.shape[1] != self.n_steps:
            raise ValueError(f"values has {vals.shape[1]} cells but n_steps is {self.n_steps}")
        if self.n_steps < 0:
            raise ValueError("n_steps must be nonnegative")
        if self.n_steps == 0:
            if self.tf != self.t0:
                raise ValueError("an empty schedule requires tf == t0")
        elif not self.tf > self.t0:
            raise ValueError(f"need tf > t0, got t0={self.t0!r}, tf={self.tf!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def dt(self) -> float:
        return (self.tf - self.t0) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.tf, self.n_steps + 1)

    def check_bounds(self, u_max: float) -> None:
        worst = float(np.abs(self.values).max(initial=0.0))
        if worst > u_max + BOUND_SLACK:
            raise ValueError(f"schedule exceeds the control bound: |u| up to {worst!r} > {u_max!r}")

    @classmethod
    def constant(cls, u, t0: float, tf: float, n_steps: int) -> "ControlSchedule":
        u = np.asarray(u, dtype=float).reshape(-1)
        return cls(t0, tf, n_steps, np.repeat(u[:, None], n_steps, axis=1))


@dataclass(frozen=True)
class Trajectory:
    """States on the grid nodes of one forward propagation."""

    times: np.ndarray
    states: tuple[DensityMatrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if len(self.times) != len(self.states):
            raise ValueError("times and states lengths differ")
        p = [purity(s) for s in self.states]
        if max(p) - min(p) > PURITY_DRIFT_TOL:
            raise ValueError(f"full-state purity drifts by {max(p) - min(p)!r} along the trajectory")

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]


@dataclass(frozen=True)
class CostateTrajectory:
    """Adjoint matrices on the grid nodes, indexed like Trajectory.states."""

    times: np.ndarray
    costates: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "costates", tuple(np.asarray(c) for c in self.costates))
        if len(self.times) != len(self.costates):
            raise ValueError("times and costates lengths differ")
        for c in self.costates:
            if not is_hermitian(c, COSTATE_HERM_TOL):
                raise ValueError("costate is not Hermitian within tolerance")

    @property
    def final(self) -> np.ndarray:
        return self.costates[-1]


def assemble_hamiltonian(hs: HamiltonianSet, u) -> np.ndarray:
    """H0 plus the control combination sum_k u_k H_k."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != hs.m:
        raise ValueError(f"expected {hs.m} control values, got {u.size}")
    h = hs.h0.copy()
    for uk, hk in zip(u, hs.controls):
        h += uk * hk
    return h


def step_state(rho: DensityMatrix, h, dt: float) -> DensityMatrix:
    """One exact unitary step U rho U^dagger with U = exp(-i h dt)."""
    u = propagator(h, dt)
    m = u @ rho.matrix @ u.conj().T
    return DensityMatrix(repair_density(m), rho.dim_a, rho.dim_b)


def _cell_propagators(hs: HamiltonianSet, values: np.ndarray,
                      dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Stacked per-cell full-step and half-step propagators."""
    n = values.shape[1]
    d = hs.dim
    if n == 0:
        empty = np.empty((0, d, d), dtype=complex)
        return empty, empty.copy()
    if hs.m == 0:
        cols = np.zeros((1, 0))
        inv = np.zeros(n, dtype=int)
    else:
        cols, inv = np.unique(values.T, axis=0, return_inverse=True)
    full = np.empty((cols.shape[0], d, d), dtype=complex)
    half = np.empty_like(full)
    for i, c in enumerate(cols):
        h = assemble_hamiltonian(hs, c)
        full[i] = propagator(h, dt)
        half[i] = propagator(h, dt / 2.0)
    inv = inv.reshape(-1)
    return full[inv], half[inv]


def cell_propagators(hs: HamiltonianSet, sched: ControlSchedule) -> tuple[np.ndarray, np.ndarray]:
    """Full-step and half-step propagators for every cell of a schedule."""
    if sched.m != hs.m:
        raise ValueError(f"schedule has {sched.m} channels but the Hamiltonian set has {hs.m}")
    sched.check_bounds(hs.u_max)
    if sched.n_steps == 0:
        return _cell_propagators(hs, sched.values, 0.0)
    return _cell_propagators(hs, sched.values, sched.dt)


def _propagate_states(rho0: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Forward node states as a stacked array, with periodic drift repair."""
    n = cells.shape[0]
    out = np.empty((n + 1, *rho0.shape), dtype=complex)
    out[0] = rho0
    r = rho0
    for j in range(n):
        u = cells[j]
        r = u @ r @ u.conj().T
        if (j + 1) % REPAIR_INTERVAL == 0 or abs(np.trace(r).real - 1.0) > REPAIR_DRIFT:
            r = repair_density(r)
        out[j + 1] = r
    return out


def _propagate_costates(pi_tf: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Backward node costates under the reversed unitary conjugation."""
    n = cells.shape[0]
    out = np.empty((n + 1, *pi_tf.shape), dtype=complex)
    out[n] = pi_tf
    p = pi_tf
    for j in range(n - 1, -1, -1):
        u = cells[j]
        p = u.conj().T @ p @ u
        out[j] = p
    return out


def propagate_forward(rho0: DensityMatrix, hs: HamiltonianSet,
                      sched: ControlSchedule) -> Trajectory:
    """Propagate the full state across the schedule."""
    if rho0.dim != hs.dim:
        raise ValueError(f"state dimension {rho0.dim} does not match Hamiltonians ({hs.dim})")
    full, _ = cell_propagators(hs, sched)
    arr = _propagate_states(rho0.matrix, full)
    states = (rho0,) + tuple(DensityMatrix(arr[j], rho0.dim_a, rho0.dim_b)
                             for j in range(1, arr.shape[0]))
    return Trajectory(sched.times, states)


def propagate_costate_backward(pi_tf, hs: HamiltonianSet,
                               sched: ControlSchedule) -> CostateTrajectory:
    """Propagate the adjoint matrix backward from its terminal value."""
    pi = as_matrix(pi_tf)
    if pi.shape != (hs.dim, hs.dim):
        raise ValueError(f"costate shape {pi.shape} does not match Hamiltonians ({hs.dim})")
    if not is_hermitian(pi, COSTATE_HERM_TOL):
        raise ValueError("terminal costate must be Hermitian")
    full, _ = cell_propagators(hs, sched)
    arr = _propagate_costates(pi, full)
    return CostateTrajectory(sched.times, tuple(arr))
