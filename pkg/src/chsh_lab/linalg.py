"""Dense complex linear algebra for the 2-, 4- and 256-dimensional spaces.

Matrices and kets are plain ``numpy`` complex arrays. Kets are 1-D arrays,
operators are square 2-D arrays. The helpers here validate shapes and
Hermiticity and provide a cyclic Jacobi eigensolver so the spectral
analysis does not depend on LAPACK conventions.
"""

from __future__ import annotations

import numpy as np

HERMITIAN_ATOL = 1e-12
NORM_ATOL = 1e-12
IMAG_ATOL = 1e-12
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
MAX_EIGEN_DIM = 256

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


class NotHermitianError(ValueError):
    """Raised when an operator claimed Hermitian fails the tolerance check."""


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def as_state(psi, *, atol: float = NORM_ATOL) -> np.ndarray:
    """Return ``psi`` as a normalized complex ket, rejecting non-unit input."""
    v = np.asarray(psi, dtype=complex)
    if v.ndim != 1 or v.size < 1:
        raise DimensionError(f"expected a 1-D ket, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("ket has non-finite amplitudes")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > atol:
        raise ValueError(f"ket is not normalized (norm {norm!r})")
    return v


def max_norm(m) -> float:
    """Largest entry modulus, the norm used for every matrix tolerance here."""
    a = np.asarray(m)
    return float(np.max(np.abs(a))) if a.size else 0.0


def dagger(m) -> np.ndarray:
    return as_matrix(m).conj().T


def is_hermitian(m, atol: float = HERMITIAN_ATOL) -> bool:
    a = as_matrix(m)
    return a.shape[0] == a.shape[1] and max_norm(a - a.conj().T) <= atol


def require_hermitian(m, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"operator must be square, got {a.shape}")
    dev = max_norm(a - a.conj().T)
    if dev > atol:
        raise NotHermitianError(f"operator is not Hermitian (|M - M^dag|_max = {dev:.3e})")
    return a


def kron(a, b) -> np.ndarray:
    """Kronecker product with the left factor major.

    Entry ``(i*rows_b + k, j*cols_b + l)`` of the result is ``a[i, j] * b[k, l]``.
    1-D inputs are treated as column vectors and a 1-D result is returned,
    so states compose the same way as operators.
    """
    a_arr = np.asarray(a, dtype=complex)
    b_arr = np.asarray(b, dtype=complex)
    if a_arr.ndim == 1 and b_arr.ndim == 1:
        return (a_arr[:, None] * b_arr[None, :]).reshape(-1)
    a_m, b_m = as_matrix(a_arr), as_matrix(b_arr)
    ra, ca = a_m.shape
    rb, cb = b_m.shape
    out = a_m[:, None, :, None] * b_m[None, :, None, :]
    return out.reshape(ra * rb, ca * cb)


def kron_all(*factors) -> np.ndarray:
    out = factors[0]
    for f in factors[1:]:
        out = kron(out, f)
    return np.asarray(out, dtype=complex)


def commutator(a, b) -> np.ndarray:
    a_m, b_m = as_matrix(a), as_matrix(b)
    if a_m.shape[0] != a_m.shape[1] or a_m.shape != b_m.shape:
        raise DimensionError(f"commutator needs equal square shapes, got {a_m.shape} and {b_m.shape}")
    return a_m @ b_m - b_m @ a_m


def expectation(state, obs) -> float:
    """Return the real expectation value of a Hermitian observable."""
    psi = as_state(state)
    op = require_hermitian(obs)
    if op.shape[0] != psi.size:
        raise DimensionError(f"observable of dim {op.shape[0]} does not act on ket of dim {psi.size}")
    value = np.vdot(psi, op @ psi)
    if abs(value.imag) > IMAG_ATOL:
        raise ArithmeticError(f"expectation has imaginary residue {value.imag:.3e}")
    return float(value.real)


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(np.abs(off) ** 2)))


def _rotation(app: float, aqq: float, apq: complex) -> np.ndarray:
    # Unitary J (2x2) such that (J^dag A J)[p, q] == 0 for the Hermitian 2x2 block.
    mag = abs(apq)
    phase = apq / mag
    theta = (aqq - app) / (2.0 * mag)
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    # diag(1, conj(phase)) makes the pivot real, then a real Givens rotation zeroes it
    return np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)


def jacobi_eigh(h, *, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi diagonalization of a Hermitian matrix.

    Returns ``(eigenvalues, vectors, sweeps)`` with eigenvalues ascending and
    eigenvectors as the columns of ``vectors``.
    """
    a = require_hermitian(h).copy()
    n = a.shape[0]
    if n > MAX_EIGEN_DIM:
        raise DimensionError(f"eigensolver is limited to dim <= {MAX_EIGEN_DIM}, got {n}")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(a)))
    sweeps = 0
    while _off_norm(a) > tol * scale:
        if sweeps >= max_sweeps:
            raise ArithmeticError(f"Jacobi did not converge in {max_sweeps} sweeps")
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= 1e-300:
                    continue
                j = _rotation(a[p, p].real, a[q, q].real, a[p, q])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ j
                a[idx, :] = j.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ j
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    evals = np.real(np.diag(a)).copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], v[:, order], sweeps


def hermitian_eigensystem(h) -> tuple[np.ndarray, list[np.ndarray]]:
    """Eigenvalues (ascending) and the matching orthonormal eigenvectors."""
    evals, vecs, _ = jacobi_eigh(h)
    out = []
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        col = col / np.linalg.norm(col)
        # fix the global phase so results are reproducible: largest entry real positive
        pivot = col[np.argmax(np.abs(col))]
        col = col * (abs(pivot) / pivot)
        out.append(col)
    return evals, out


def group_eigenvalues(evals, atol: float = 1e-9) -> list[list[int]]:
    """Group indices of sorted eigenvalues whose neighbours lie within ``atol``."""
    groups: list[list[int]] = []
    for k, lam in enumerate(evals):
        if groups and abs(lam - evals[groups[-1][-1]]) <= atol:
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (m + m.conj().T)


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)
