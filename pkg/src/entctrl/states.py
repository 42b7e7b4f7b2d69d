"""Pure states and density matrices of the bipartite system.

Both containers validate their physical invariants at construction, so
anything downstream can assume it is holding an actual quantum state.
The dynamics layer relies on :func:`repair_density` to undo the slow
numerical drift of long trajectories without masking real bugs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, hermitize, is_hermitian, partial_trace_b

log = logging.getLogger(__name__)

NORM_TOL = 1e-12
HERM_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
REPAIR_WARN = 1e-8

BELL_KINDS = ("phi_plus", "phi_minus", "psi_plus", "psi_minus")


@dataclass(frozen=True)
class PureState:
    """Normalized state vector on a dim_a x dim_b product space."""

    amplitudes: np.ndarray
    dim_a: int = 2
    dim_b: int = 2

    def __post_init__(self):
        if self.dim_a < 1 or self.dim_b < 1:
            raise ValueError("subsystem dimensions must be positive")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.dim_a * self.dim_b:
            raise ValueError(
                f"expected {self.dim_a * self.dim_b} amplitudes, got {amps.size}")
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized: sum |a|^2 = {norm_sq!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite state of the full system."""

    matrix: np.ndarray
    dim_a: int = 2
    dim_b: int = 2

    def __post_init__(self):
        if self.dim_a < 1 or self.dim_b < 1:
            raise ValueError("subsystem dimensions must be positive")
        m = as_matrix(self.matrix).copy()
        d = self.dim_a * self.dim_b
        if m.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got shape {m.shape}")
        if not is_hermitian(m, HERM_TOL):
            raise ValueError("density matrix is not Hermitian within tolerance")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        smallest = float(np.linalg.eigvalsh(m)[0])
        if smallest < -PSD_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {smallest!r}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b

    def reduced_a(self) -> np.ndarray:
        """Reduced state of subsystem A (partial trace over B)."""
        return partial_trace_b(self.matrix, self.dim_a, self.dim_b)


def bell_state(kind: str) -> PureState:
    """One of the four maximally entangled two-qubit states."""
    s = 1.0 / np.sqrt(2.0)
    table = {
        "phi_plus": (s, 0, 0, s),
        "phi_minus": (s, 0, 0, -s),
        "psi_plus": (0, s, s, 0),
        "psi_minus": (0, s, -s, 0),
    }
    try:
        amps = table[kind]
    except KeyError:
        raise ValueError(f"unknown Bell state {kind!r}; choose from {BELL_KINDS}") from None
    return PureState(np.array(amps, dtype=complex))


def basis_product_state(i: int, j: int, dim_a: int = 2, dim_b: int = 2) -> PureState:
    """Computational basis state |i>_A |j>_B."""
    amps = np.zeros(dim_a * dim_b, dtype=complex)
    amps[i * dim_b + j] = 1.0
    return PureState(amps, dim_a, dim_b)


def density_from_pure(psi: PureState) -> DensityMatrix:
    """Rank-one projector |psi><psi|."""
    m = np.outer(psi.amplitudes, psi.amplitudes.conj())
    return DensityMatrix(m, psi.dim_a, psi.dim_b)


def perturbed_separable(rho_sep: DensityMatrix, delta_rho: DensityMatrix,
                        epsilon: float) -> DensityMatrix:
    """Convex mixture (1 - eps) * rho_sep + eps * delta_rho."""
    if (rho_sep.dim_a, rho_sep.dim_b) != (delta_rho.dim_a, delta_rho.dim_b):
        raise ValueError("mixture components must share subsystem dimensions")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon!r}")
    m = (1.0 - epsilon) * rho_sep.matrix + epsilon * delta_rho.matrix
    return DensityMatrix(m, rho_sep.dim_a, rho_sep.dim_b)


def purity(rho: DensityMatrix) -> float:
    """Tr(rho^2); 1 for pure states, 1/d for the maximally mixed state."""
    return float(np.sum(np.abs(rho.matrix) ** 2))


def repair_density(m: np.ndarray, warn_above: float = REPAIR_WARN) -> np.ndarray:
    """Project a slightly drifted matrix back to Hermitian unit trace.

    Intended for roundoff-scale drift only; drift beyond ``warn_above``
    points at a genuine bug upstream and is logged.
    """
    herm_drift = float(np.abs(m - m.conj().T).max(initial=0.0))
    trace_drift = abs(complex(np.trace(m)) - 1.0)
    if herm_drift > warn_above or trace_drift > warn_above:
        log.warning("density repair beyond roundoff scale: hermiticity drift %.3e, "
                    "trace drift %.3e", herm_drift, trace_drift)
    out = hermitize(m)
    return out / np.trace(out).real
