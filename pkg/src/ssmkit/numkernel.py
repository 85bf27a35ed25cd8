"""Dense complex matrix primitives.

Every routine here is a pure function of its inputs. Vectorization uses
column stacking throughout the package, so that

    vec(A @ X @ B) == kron(B.T, A) @ vec(X)
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InputError, NumericalError
from .tolerances import DEFAULT


def as_cmatrix(x, name="matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex128 array."""
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2:
        raise InputError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} has non-finite entries")
    return a


def dag(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def fro(a) -> float:
    return float(np.linalg.norm(a))


def hs_inner(x: np.ndarray, y: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product Tr(x^dagger y)."""
    return complex(np.vdot(x, y))


def vec(x) -> np.ndarray:
    x = np.asarray(x)
    return x.reshape(-1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim != 1 or v.size != rows * cols:
        raise InputError(f"cannot unvec length-{v.size} vector into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def kron(a, b) -> np.ndarray:
    return np.kron(a, b)


class HermitianEigensystem(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


class NullspaceBasis(NamedTuple):
    vectors: np.ndarray
    rank_threshold_used: float

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def hermiticity_residual(a: np.ndarray) -> float:
    return fro(a - dag(a))


def _check_hermitian(a, tol, what="matrix"):
    a = as_cmatrix(a, what)
    if a.shape[0] != a.shape[1]:
        raise InputError(f"{what} must be square, got shape {a.shape}")
    res = hermiticity_residual(a)
    if res > tol * max(1.0, fro(a)):
        raise NumericalError(
            f"{what} is not Hermitian: ||A - A^dagger||_F = {res:.3e}", residual=res
        )
    return 0.5 * (a + dag(a))


def hermitian_eig(a, herm_tol: float = DEFAULT.herm) -> HermitianEigensystem:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    The input is symmetrized as (A + A^dagger)/2 first; a residual above
    ``herm_tol * max(1, ||A||_F)`` raises `NumericalError`.
    """
    h = _check_hermitian(a, herm_tol)
    w, v = np.linalg.eigh(h)
    return HermitianEigensystem(w, v)


def svd_nullspace(m, rel_tol: float = DEFAULT.nullspace, scale: float = 0.0) -> NullspaceBasis:
    """Orthonormal basis of the numerical nullspace of ``m``.

    Right singular vectors with singular value at most
    ``rel_tol * max(s_max, scale)`` are returned as columns. Passing the
    natural size of the entries as ``scale`` keeps a matrix that is zero up
    to rounding from being read as full rank. A zero matrix yields the
    whole space.
    """
    if not rel_tol > 0:
        raise InputError("rel_tol must be positive")
    m = as_cmatrix(m)
    n = m.shape[1]
    if m.shape[0] == 0 or n == 0:
        return NullspaceBasis(np.eye(n, dtype=complex), 0.0)
    if m.shape[0] > n:
        # tall: an R factor has the same singular values and right vectors
        m = np.linalg.qr(m, mode="r")
    # full_matrices so that wide systems still return every right vector
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    smax = float(s[0]) if s.size else 0.0
    if smax == 0.0:
        return NullspaceBasis(np.eye(n, dtype=complex), 0.0)
    thresh = rel_tol * max(smax, float(scale))
    sv = np.zeros(n)
    sv[: s.size] = s
    keep = sv <= thresh
    return NullspaceBasis(dag(vh)[:, keep].copy(), thresh)


def _psd_eig(a, psd_tol, herm_tol):
    w, v = hermitian_eig(a, herm_tol)
    scale = fro(a)
    if w.size and w[0] < -psd_tol * scale:
        raise NumericalError(
            f"matrix is not positive semidefinite: smallest eigenvalue {w[0]:.3e}",
            residual=float(-w[0]),
        )
    return np.clip(w, 0.0, None), v


def psd_sqrt(a, psd_tol: float = DEFAULT.psd, herm_tol: float = DEFAULT.herm) -> np.ndarray:
    w, v = _psd_eig(a, psd_tol, herm_tol)
    s = (v * np.sqrt(w)) @ dag(v)
    return 0.5 * (s + dag(s))


def psd_pinv_sqrt(
    a, rank_tol: float = 1e-12, psd_tol: float = DEFAULT.psd, herm_tol: float = DEFAULT.herm
) -> np.ndarray:
    """Pseudo-inverse square root on eigenvalues above ``rank_tol * max eig``."""
    w, v = _psd_eig(a, psd_tol, herm_tol)
    if not w.size or w[-1] == 0.0:
        return np.zeros_like(v)
    keep = w > rank_tol * w[-1]
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    t = (v * inv) @ dag(v)
    return 0.5 * (t + dag(t))


def expi_hermitian(k, herm_tol: float = DEFAULT.herm) -> np.ndarray:
    """Unitary exp(iK) for Hermitian K via its eigendecomposition."""
    w, v = hermitian_eig(k, herm_tol)
    return (v * np.exp(1j * w)) @ dag(v)


def orthonormalize_operators(ops, drop_tol: float = DEFAULT.hs_drop) -> list[np.ndarray]:
    """Hilbert-Schmidt orthonormal basis of span(ops).

    Rank-revealing: singular directions below ``drop_tol * s_max`` of the
    stacked vectorized operators are discarded.
    """
    ops = list(ops)
    if not ops:
        return []
    shape = ops[0].shape
    m = np.stack([vec(o) for o in ops], axis=1)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if not s.size or s[0] == 0.0:
        return []
    k = int(np.sum(s > drop_tol * s[0]))
    return [unvec(u[:, i], *shape) for i in range(k)]


def orth_columns(m, rel_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) for the range of ``m``."""
    m = np.asarray(m, dtype=complex)
    if m.size == 0:
        return np.zeros((m.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if not s.size or s[0] == 0.0:
        return np.zeros((m.shape[0], 0), dtype=complex)
    return u[:, s > rel_tol * s[0]]


def subspace_distance(a, b) -> float:
    """Spectral-norm distance between the orthogonal projectors onto two
    column spans (the sine of the largest principal angle, or 1 when the
    dimensions differ)."""
    qa = orth_columns(a)
    qb = orth_columns(b)
    if qa.shape[1] != qb.shape[1]:
        return 1.0
    if qa.shape[1] == 0:
        return 0.0
    diff = qa @ dag(qa) - qb @ dag(qb)
    return float(np.linalg.norm(diff, 2))


def operator_subspace_distance(ops_a, ops_b) -> float:
    """`subspace_distance` between two spans of equally shaped operators."""
    ma = np.stack([vec(o) for o in ops_a], axis=1) if len(ops_a) else None
    mb = np.stack([vec(o) for o in ops_b], axis=1) if len(ops_b) else None
    if ma is None or mb is None:
        return 0.0 if ma is None and mb is None else 1.0
    return subspace_distance(ma, mb)


def span_residual(x, basis) -> float:
    """Frobenius norm of the part of ``x`` outside span(basis).

    ``basis`` must be Hilbert-Schmidt orthonormal.
    """
    x = np.asarray(x, dtype=complex)
    proj = sum((hs_inner(b, x) * b for b in basis), np.zeros_like(x))
    return fro(x - proj)
