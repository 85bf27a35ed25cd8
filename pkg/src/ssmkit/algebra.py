"""Operator *-algebras given by Hilbert-Schmidt orthonormal bases.

The commutant of a generator set is the joint nullspace of the vectorized
commutator equations ``(I (x) A - A^T (x) I) vec(B) = 0`` over every
generator and its dagger. The algebra itself is the double commutant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numkernel as nk
from .errors import InputError, NumericalError
from .model import GeneratorSet
from .tolerances import DEFAULT, Tolerances

NOISE_ALGEBRA = "noise_algebra"
COMMUTANT = "commutant"


@dataclass(frozen=True)
class OperatorAlgebraBasis:
    dim: int
    basis: tuple
    kind: str
    source_generators: GeneratorSet | None = None

    def __len__(self):
        return len(self.basis)

    def project(self, x) -> np.ndarray:
        """Hilbert-Schmidt orthogonal projection of ``x`` onto the span."""
        x = np.asarray(x, dtype=complex)
        return sum((nk.hs_inner(b, x) * b for b in self.basis), np.zeros_like(x))

    def residual(self, x) -> float:
        return nk.span_residual(x, self.basis)

    def matrix(self) -> np.ndarray:
        """Basis as columns of vectorized operators."""
        return np.stack([nk.vec(b) for b in self.basis], axis=1)


def _as_generator_list(gens):
    if isinstance(gens, GeneratorSet):
        return list(gens.generators), gens.dim
    gens = [np.asarray(g, dtype=complex) for g in gens]
    if not gens:
        raise InputError("generator set is empty")
    return gens, gens[0].shape[0]


def commutator_system(gens, r) -> np.ndarray:
    eye = np.eye(r)
    rows = []
    for a in gens:
        for g in (a, nk.dag(a)):
            rows.append(np.kron(eye, g) - np.kron(g.T, eye))
    return np.vstack(rows)


def commutant_basis(gens, tol: Tolerances = DEFAULT) -> OperatorAlgebraBasis:
    """Basis of {B : [A, B] = [A^dagger, B] = 0 for all generators A}."""
    glist, r = _as_generator_list(gens)
    if not glist:
        # commutant of the empty set is everything
        basis = [nk.unvec(v, r, r) for v in np.eye(r * r, dtype=complex).T]
        return OperatorAlgebraBasis(r, tuple(basis), COMMUTANT, gens if isinstance(gens, GeneratorSet) else None)
    scale = max(nk.fro(g) for g in glist)
    null = nk.svd_nullspace(commutator_system(glist, r), tol.nullspace, scale)
    basis = nk.orthonormalize_operators(
        [nk.unvec(null.vectors[:, i], r, r) for i in range(null.dim)], tol.hs_drop
    )
    src = gens if isinstance(gens, GeneratorSet) else GeneratorSet(r, tuple(glist))
    return OperatorAlgebraBasis(r, tuple(basis), COMMUTANT, src)


def algebra_basis(gens, tol: Tolerances = DEFAULT, commutant: OperatorAlgebraBasis | None = None) -> OperatorAlgebraBasis:
    """Basis of the unital *-algebra generated by ``gens``, as (A')'."""
    glist, r = _as_generator_list(gens)
    if commutant is None:
        commutant = commutant_basis([*glist, np.eye(r, dtype=complex)], tol)
    second = commutant_basis(list(commutant.basis), tol)
    src = gens if isinstance(gens, GeneratorSet) else GeneratorSet(r, tuple(glist))
    return OperatorAlgebraBasis(r, second.basis, NOISE_ALGEBRA, src)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_hermitian_element(basis: OperatorAlgebraBasis, seed) -> np.ndarray:
    """Seeded random Hermitian element of a dagger-closed span."""
    if not len(basis):
        raise InputError("basis is empty")
    rng = _rng(seed)
    n = len(basis)
    c = rng.standard_normal(n)
    cp = rng.standard_normal(n)
    h = np.zeros((basis.dim, basis.dim), dtype=complex)
    for ci, cpi, b in zip(c, cp, basis.basis):
        bd = nk.dag(b)
        h += ci * 0.5 * (b + bd) + cpi * 0.5j * (b - bd)
    return 0.5 * (h + nk.dag(h))


def twirl(rho0_restricted, algebra: OperatorAlgebraBasis, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Average of U rho U^dagger over the unitaries of the commutant.

    Computed exactly as the Hilbert-Schmidt orthogonal projection of
    ``rho0_restricted`` onto the algebra.
    """
    if algebra.kind != NOISE_ALGEBRA:
        raise InputError("twirl needs the noise algebra basis, not its commutant")
    rho = np.asarray(rho0_restricted, dtype=complex)
    out = algebra.project(rho)
    out = 0.5 * (out + nk.dag(out))
    w = np.linalg.eigvalsh(out)
    if w[0] < -tol.psd * max(1.0, nk.fro(out)):
        raise NumericalError(
            f"twirled state lost positivity (smallest eigenvalue {w[0]:.3e})", float(-w[0])
        )
    return out


# -- invariant checks -----------------------------------------------------------


def orthonormality_residual(alg: OperatorAlgebraBasis) -> float:
    if not len(alg):
        return 0.0
    m = alg.matrix()
    return nk.fro(nk.dag(m) @ m - np.eye(m.shape[1]))


def closure_residuals(alg: OperatorAlgebraBasis) -> dict:
    """Worst residuals of the dagger, product and identity closure tests."""
    eye = np.eye(alg.dim)
    dagger = max((alg.residual(nk.dag(b)) for b in alg.basis), default=0.0)
    product = 0.0
    for a in alg.basis:
        for b in alg.basis:
            product = max(product, alg.residual(a @ b))
    return {"dagger": dagger, "product": product, "identity": alg.residual(eye)}


def commutation_residual(ops, gens) -> float:
    """max ||[G, B]||_F over B in ``ops`` and G in ``gens`` and their daggers."""
    if isinstance(ops, OperatorAlgebraBasis):
        ops = ops.basis
    if isinstance(gens, GeneratorSet):
        gens = gens.generators
    worst = 0.0
    for g in gens:
        for gg in (g, nk.dag(g)):
            for b in ops:
                worst = max(worst, nk.fro(gg @ b - b @ gg))
    return worst
