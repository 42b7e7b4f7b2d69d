"""Dense complex linear algebra for small quantum systems.

All operations work on plain numpy arrays of complex128. The matrices
involved are tiny (4x4 in the two-qubit scenario), so the Hermitian
eigendecomposition is the workhorse: it gives exact matrix exponentials
and spectrally accurate reconstructions at this scale.
"""

from __future__ import annotations

import numpy as np

ABS_TOL = 1e-12   # algebraic identities
EIG_TOL = 1e-10   # anything downstream of an eigensolve

IDENTITY_2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
for _m in (IDENTITY_2, PAULI_X, PAULI_Y, PAULI_Z):
    _m.setflags(write=False)
del _m


def as_matrix(a) -> np.ndarray:
    """Coerce to a nonempty 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {m.shape}")
    return m


def allclose_abs(a, b, tol: float = ABS_TOL) -> bool:
    """Entrywise equality with an absolute tolerance on real and imaginary parts."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        return False
    d = a - b
    return bool(np.abs(d.real).max(initial=0.0) <= tol
                and np.abs(d.imag).max(initial=0.0) <= tol)


def hermitize(a: np.ndarray) -> np.ndarray:
    """Hermitian part (a + a^dagger) / 2."""
    return 0.5 * (a + a.conj().T)


def is_hermitian(a, tol: float = EIG_TOL) -> bool:
    m = np.asarray(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.abs(m - m.conj().T).max(initial=0.0) <= tol)


def kron(a, b) -> np.ndarray:
    """Kronecker (tensor) product."""
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace_b(m, dim_a: int, dim_b: int) -> np.ndarray:
    """Trace out the second tensor factor of a (dim_a*dim_b)-dimensional operator."""
    m = as_matrix(m)
    d = dim_a * dim_b
    if dim_a < 1 or dim_b < 1 or m.shape != (d, d):
        raise ValueError(
            f"partial trace needs a {d}x{d} matrix for dims ({dim_a},{dim_b}), "
            f"got shape {m.shape}")
    return np.einsum("ikjk->ij", m.reshape(dim_a, dim_b, dim_a, dim_b))


def commutator(a, b) -> np.ndarray:
    """[a, b] = ab - ba for square matrices of equal dimension."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"commutator needs equal square matrices, got {a.shape} and {b.shape}")
    return a @ b - b @ a


def _column_key(col: np.ndarray):
    return tuple((round(float(x.real), 12), round(float(x.imag), 12)) for x in col)


def _canonicalize(w: np.ndarray, v: np.ndarray, tol: float) -> np.ndarray:
    """Deterministic eigenvector matrix: fixed column phases, ties ordered.

    Each column is rotated so its first nonnegligible component is real
    positive; within groups of equal eigenvalues, columns are sorted by
    their component tuples so the output does not depend on LAPACK's
    arbitrary choice of basis ordering.
    """
    v = v.copy()
    for j in range(v.shape[1]):
        col = v[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            pivot = col[nz[0]]
            v[:, j] = col * (pivot.conj() / abs(pivot))
    start = 0
    n = len(w)
    for i in range(1, n + 1):
        if i == n or abs(w[i] - w[start]) > tol:
            if i - start > 1:
                idx = sorted(range(start, i), key=lambda k: _column_key(v[:, k]))
                v[:, start:i] = v[:, idx]
            start = i
    return v


def herm_eig(h, tol: float = EIG_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues, eigenvectors) with real eigenvalues in
    descending order and orthonormal eigenvectors as columns. Output is
    deterministic: degenerate groups are ordered canonically.
    """
    h = as_matrix(h)
    if not is_hermitian(h, tol):
        raise ValueError("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(h)
    w = w[::-1].copy()
    v = _canonicalize(w, v[:, ::-1], ABS_TOL)
    return w, v


def propagator(h, dt: float) -> np.ndarray:
    """Unitary exp(-i*h*dt) for Hermitian h, via the spectral decomposition."""
    w, v = herm_eig(h)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T
