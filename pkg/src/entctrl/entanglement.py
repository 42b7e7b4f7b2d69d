"""Entanglement quantification for the two-qubit system.

The controller's objective uses the reduced-state form
sqrt(2 (1 - Tr(rho_A^2))), which measures how mixed the qubit marginal
is. For mixed global states that quantity is a mixedness surrogate
rather than a faithful entanglement measure, so the Wootters mixed-state
concurrence is provided alongside as a diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import PAULI_Y, as_matrix, is_hermitian, kron
from .states import HERM_TOL, PSD_TOL, TRACE_TOL, DensityMatrix, PureState

SCHMIDT_RANK_TOL = 1e-10

_SPIN_FLIP = kron(PAULI_Y, PAULI_Y)
_SPIN_FLIP.setflags(write=False)


@dataclass(frozen=True)
class SchmidtDecomposition:
    """Schmidt form of a bipartite pure state.

    coefficients are the descending nonnegative Schmidt coefficients
    (square roots of the reduced-state eigenvalues); basis_a and basis_b
    hold the matching orthonormal local bases as columns; rank counts
    the coefficients whose squares exceed ``SCHMIDT_RANK_TOL``.
    """

    coefficients: np.ndarray
    basis_a: np.ndarray
    basis_b: np.ndarray
    rank: int


def _check_reduced(m: np.ndarray) -> None:
    if m.shape[0] != m.shape[1]:
        raise ValueError("reduced state must be square")
    if not is_hermitian(m, HERM_TOL):
        raise ValueError("invalid reduced state: not Hermitian within tolerance")
    if abs(complex(np.trace(m)) - 1.0) > TRACE_TOL:
        raise ValueError("invalid reduced state: trace differs from 1")
    if float(np.linalg.eigvalsh(m)[0]) < -PSD_TOL:
        raise ValueError("invalid reduced state: negative eigenvalue")


def concurrence_from_reduced(rho_a) -> float:
    """Concurrence computed from a reduced density matrix.

    Returns sqrt(2 * max(0, 1 - Tr(rho_a^2))): zero when the marginal is
    pure, one when a qubit marginal is maximally mixed. The max() clamp
    absorbs roundoff when Tr(rho_a^2) marginally exceeds 1.
    """
    m = as_matrix(rho_a)
    _check_reduced(m)
    tr2 = float(np.sum(np.abs(m) ** 2))
    return float(np.sqrt(2.0 * max(0.0, 1.0 - tr2)))


def concurrence_pure(psi: PureState) -> float:
    """Two-qubit pure-state concurrence 2 |a00 a11 - a01 a10|."""
    if (psi.dim_a, psi.dim_b) != (2, 2):
        raise ValueError("pure-state concurrence implemented for two qubits only")
    a = psi.amplitudes
    return float(2.0 * abs(a[0] * a[3] - a[1] * a[2]))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def wootters_concurrence(rho: DensityMatrix) -> float:
    """Mixed-state two-qubit concurrence from the spin-flip construction.

    Returns max(0, l1 - l2 - l3 - l4) where the l_i are the descending
    square roots of the eigenvalues of rho (sy x sy) rho* (sy x sy).
    They are computed here as the singular values of
    sqrt(rho) (sy x sy) sqrt(rho*), which has the same spectrum but
    stays accurate for rank-deficient rho, where a direct eigensolve of
    the nonnormal product loses half the working precision.
    """
    if (rho.dim_a, rho.dim_b) != (2, 2):
        raise ValueError("Wootters concurrence implemented for two qubits only")
    s = _psd_sqrt(rho.matrix)
    lam = np.linalg.svd(s @ _SPIN_FLIP @ s.conj(), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def schmidt_decompose(psi: PureState) -> SchmidtDecomposition:
    """Schmidt decomposition via the SVD of the amplitude matrix.

    Coefficients come out real and nonnegative; the phase freedom is
    pushed into the basis_b columns so basis_a columns lead with a real
    positive component whenever possible.
    """
    a = psi.amplitudes.reshape(psi.dim_a, psi.dim_b)
    u, s, vh = np.linalg.svd(a)
    # move column phases of u into the rows of vh
    for k in range(s.size):
        col = u[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            phase = col[nz[0]] / abs(col[nz[0]])
            u[:, k] = col * phase.conj()
            vh[k, :] = vh[k, :] * phase
    rank = int(np.sum(s ** 2 > SCHMIDT_RANK_TOL))
    return SchmidtDecomposition(s, u[:, :s.size], vh[:s.size, :].T, rank)
