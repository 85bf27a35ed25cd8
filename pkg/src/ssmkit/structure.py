"""Block structure of the steady-state manifold.

Given bases of the modified noise algebra ``A`` and its commutant ``A'`` on
the support, a generic Hermitian ``P`` in ``A`` and ``Q`` in ``A'`` have
spectral projections ``I (x) |j><j|`` and ``|i><i| (x) I`` inside every
block ``H_1 (x) H_2``. Products ``Q_i P_j`` are nonzero exactly within one
block, which gives the partition and the dimensions ``(n, d)``; the
rank-one products give the basis vectors ``|i> (x) |j>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import numkernel as nk
from .algebra import (
    COMMUTANT,
    NOISE_ALGEBRA,
    OperatorAlgebraBasis,
    random_hermitian_element,
)
from .errors import InputError, NumericalError
from .model import DensityMatrix, GeneratorSet, SupportSubspace
from .tolerances import DEFAULT, Tolerances

ALIGN_MIN = 1e-8
ALIGN_RETRIES = 16
RANK1_TOL = 1e-6


@dataclass(frozen=True)
class SpectralProjectionSet:
    source: str
    witness: np.ndarray
    eigenvalues: tuple
    projections: tuple

    def __len__(self):
        return len(self.projections)

    @property
    def ranks(self) -> list[int]:
        return [int(round(np.trace(p).real)) for p in self.projections]


class NondegeneracyResult(NamedTuple):
    passed: bool
    residual: float


class PairSearchError(NumericalError):
    def __init__(self, message, residual_p, residual_q):
        self.residual_p = residual_p
        self.residual_q = residual_q
        super().__init__(message, residual=max(residual_p, residual_q))


@dataclass(frozen=True)
class Block:
    p_indices: tuple
    q_indices: tuple

    @property
    def n(self) -> int:
        return len(self.q_indices)

    @property
    def d(self) -> int:
        return len(self.p_indices)


@dataclass(frozen=True)
class SSMBlock:
    n: int
    d: int
    basis: np.ndarray
    rho2: DensityMatrix
    weight: float
    x1: np.ndarray


@dataclass(frozen=True)
class SSMStructure:
    support: SupportSubspace
    blocks: tuple
    ssm_dimension: int
    split_residual: float = 0.0

    @property
    def dims(self) -> list[tuple[int, int]]:
        return [(b.n, b.d) for b in self.blocks]

    def full_basis(self) -> np.ndarray:
        """Concatenated block isometries, an r x r unitary."""
        return np.hstack([b.basis for b in self.blocks])


def spectral_projections(witness, source, cluster_tol: float = DEFAULT.cluster, herm_tol: float = DEFAULT.herm) -> SpectralProjectionSet:
    """Cluster the spectrum of a Hermitian witness into projections.

    Consecutive sorted eigenvalues whose gap is at most
    ``cluster_tol * max(1, ||witness||_F)`` share a projection.
    """
    w, v = nk.hermitian_eig(witness, herm_tol)
    gap = cluster_tol * max(1.0, nk.fro(witness))
    groups = [[0]]
    for k in range(1, w.size):
        if w[k] - w[k - 1] <= gap:
            groups[-1].append(k)
        else:
            groups.append([k])
    projs, vals = [], []
    for g in groups:
        cols = v[:, g]
        projs.append(cols @ nk.dag(cols))
        vals.append(float(np.mean(w[g])))
    return SpectralProjectionSet(source, np.asarray(witness), tuple(vals), tuple(projs))


def is_spectrum_nondegenerate(projs: SpectralProjectionSet, gens, prop_tol: float = DEFAULT.prop) -> NondegeneracyResult:
    """Check P_j G P_j = lambda P_j for every projection and every G.

    ``gens`` is taken together with the daggers of its elements.
    """
    if isinstance(gens, GeneratorSet):
        gens = gens.with_daggers()
    elif isinstance(gens, OperatorAlgebraBasis):
        gens = list(gens.basis)
    else:
        gens = list(gens)
        gens = gens + [nk.dag(g) for g in gens]
    worst = 0.0
    ok = True
    for p in projs.projections:
        trp = np.trace(p).real
        for g in gens:
            lam = np.trace(p @ g) / trp
            res = nk.fro(p @ g @ p - lam * p)
            scaled = res / max(1.0, nk.fro(g))
            worst = max(worst, scaled)
            if scaled > prop_tol:
                ok = False
    return NondegeneracyResult(ok, worst)


def _trivial_projections(source, r):
    eye = np.eye(r, dtype=complex)
    return SpectralProjectionSet(source, eye, (1.0,), (eye,))


def pick_nondegenerate_pair(
    alg: OperatorAlgebraBasis,
    comm: OperatorAlgebraBasis,
    gens: GeneratorSet,
    seed=0,
    max_tries: int = 32,
    tol: Tolerances = DEFAULT,
) -> tuple[SpectralProjectionSet, SpectralProjectionSet]:
    """Draw random Hermitian witnesses until both pass the criterion.

    ``P`` is tested against the generators of the algebra together with its
    basis, ``Q`` against the commutant basis. The two searches use
    independent random streams derived from ``seed``.
    """
    r = alg.dim
    if r == 1:
        return _trivial_projections(NOISE_ALGEBRA, 1), _trivial_projections(COMMUTANT, 1)
    if not isinstance(gens, GeneratorSet):
        gens = GeneratorSet(r, tuple(np.asarray(g, dtype=complex) for g in gens))
    p_tests = [*gens.with_daggers(), *alg.basis]
    q_tests = list(comm.basis)
    rng_p = np.random.default_rng([seed, 1])
    rng_q = np.random.default_rng([seed, 2])
    p_found = q_found = None
    best_p = best_q = np.inf
    for _ in range(max_tries):
        if p_found is None:
            cand = spectral_projections(random_hermitian_element(alg, rng_p), NOISE_ALGEBRA, tol.cluster, tol.herm)
            res = is_spectrum_nondegenerate(cand, p_tests, tol.prop)
            best_p = min(best_p, res.residual)
            if res.passed:
                p_found = cand
        if q_found is None:
            cand = spectral_projections(random_hermitian_element(comm, rng_q), COMMUTANT, tol.cluster, tol.herm)
            res = is_spectrum_nondegenerate(cand, q_tests, tol.prop)
            best_q = min(best_q, res.residual)
            if res.passed:
                q_found = cand
        if p_found is not None and q_found is not None:
            return p_found, q_found
    raise PairSearchError(
        f"no spectrum-nondegenerate pair after {max_tries} tries "
        f"(best residuals P: {best_p:.3e}, Q: {best_q:.3e})",
        float(best_p), float(best_q),
    )


def partition_blocks(p_projs: SpectralProjectionSet, q_projs: SpectralProjectionSet, nz_tol: float = DEFAULT.nz) -> list[Block]:
    """Connected components of the graph with edges Q_i P_j != 0.

    Blocks are sorted by (d, n, Tr(P restricted to the block)) descending.
    """
    np_, nq = len(p_projs), len(q_projs)
    r = p_projs.projections[0].shape[0]
    adj = np.zeros((nq, np_), dtype=bool)
    for i, q in enumerate(q_projs.projections):
        for j, p in enumerate(p_projs.projections):
            adj[i, j] = nk.fro(q @ p) > nz_tol
    graph = np.zeros((nq + np_, nq + np_), dtype=bool)
    graph[:nq, nq:] = adj
    graph[nq:, :nq] = adj.T
    ncomp, labels = connected_components(graph, directed=False)
    blocks = []
    for c in range(ncomp):
        qs = tuple(int(i) for i in np.nonzero(labels[:nq] == c)[0])
        ps = tuple(int(j) for j in np.nonzero(labels[nq:] == c)[0])
        if not qs or not ps:
            raise NumericalError("a spectral projection has no partner in the other set")
        if not adj[np.ix_(qs, ps)].all():
            raise NumericalError(f"block {c} is not complete bipartite")
        blocks.append(Block(ps, qs))
    total = sum(b.n * b.d for b in blocks)
    if total != r:
        raise NumericalError(f"block dimensions sum to {total}, support rank is {r}")

    def weight(b):
        proj = sum(p_projs.projections[j] for j in b.p_indices)
        return float(np.trace(p_projs.witness @ proj).real)

    blocks.sort(key=lambda b: (b.d, b.n, weight(b)), reverse=True)
    return blocks


def _fix_phase(v):
    k = int(np.argmax(np.abs(v) > ALIGN_MIN))
    return v * (abs(v[k]) / v[k])


def _rank_one_vector(q, p):
    prod = q @ p
    h = 0.5 * (prod + nk.dag(prod))
    w, vecs = np.linalg.eigh(h)
    if abs(w[-1] - 1.0) > RANK1_TOL or (w.size > 1 and abs(w[-2]) > RANK1_TOL):
        raise NumericalError(
            f"Q_i P_j is not a rank-one projector (top eigenvalues {w[-2:]})",
            residual=float(max(abs(w[-1] - 1.0), abs(w[-2]) if w.size > 1 else 0.0)),
        )
    return vecs[:, -1]


def _aligned(targets, source_vecs, basis, rng):
    """normalize(target @ X @ source) for one random Hermitian X in basis,
    redrawn while any image is too small."""
    for _ in range(ALIGN_RETRIES):
        x = random_hermitian_element(basis, rng)
        out = []
        for t, s in zip(targets, source_vecs):
            w = t @ (x @ s)
            nw = np.linalg.norm(w)
            if nw < ALIGN_MIN:
                break
            out.append(w / nw)
        else:
            return out
    raise NumericalError("alignment scalar stayed below threshold after retries")


def block_basis(
    block: Block,
    p_projs: SpectralProjectionSet,
    q_projs: SpectralProjectionSet,
    alg: OperatorAlgebraBasis,
    comm: OperatorAlgebraBasis,
    seed=0,
) -> np.ndarray:
    """Isometry whose column ``i * d + j`` is |i> (x) |j> of the block.

    The first vector comes from the unit eigenspace of Q_1 P_1. The rest
    are transported with one commutant element (along i) and one algebra
    element (along j), so every column carries consistent phases and the
    algebra acts as I (x) M in this basis.
    """
    rng = np.random.default_rng(seed)
    qs = [q_projs.projections[i] for i in block.q_indices]
    ps = [p_projs.projections[j] for j in block.p_indices]
    n, d = len(qs), len(ps)
    for q in qs:
        for p in ps:
            _rank_one_vector(q, p)
    v11 = _fix_phase(_rank_one_vector(qs[0], ps[0]))
    first_col = [v11]
    if n > 1:
        first_col += _aligned(qs[1:], [v11] * (n - 1), comm, rng)
    cols = np.zeros((v11.size, n * d), dtype=complex)
    for i in range(n):
        cols[:, i * d] = first_col[i]
    if d > 1:
        targets = [ps[j] for i in range(n) for j in range(1, d)]
        sources = [first_col[i] for i in range(n) for j in range(1, d)]
        moved = _aligned(targets, sources, alg, rng)
        k = 0
        for i in range(n):
            for j in range(1, d):
                cols[:, i * d + j] = moved[k]
                k += 1
    for i in range(n):
        for j in range(d):
            c = cols[:, i * d + j]
            if nk.fro(qs[i] @ (ps[j] @ c) - c) > RANK1_TOL:
                raise NumericalError("aligned vector left the range of Q_i P_j")
    return cols


def _cells(m, n, d):
    """m[(i d + j), (k d + l)] -> cells[i, k] = d x d block (j, l)."""
    return m.reshape(n, d, n, d).transpose(0, 2, 1, 3)


def assemble_structure(blocks, bases, rho0_restricted, support: SupportSubspace, tol: Tolerances = DEFAULT) -> SSMStructure:
    """Per-block fixed factors rho2 and multiplicity factors X1.

    Verifies ``U_a^dagger rho U_b = 0`` for a != b and
    ``U_a^dagger rho U_a = X1 (x) rho2``.
    """
    rho = np.asarray(rho0_restricted, dtype=complex)
    scale = max(1.0, nk.fro(rho))
    worst = 0.0
    out = []
    for a, (blk, u) in enumerate(zip(blocks, bases)):
        n, d = blk.n, blk.d
        for b in range(a + 1, len(bases)):
            worst = max(worst, nk.fro(nk.dag(u) @ rho @ bases[b]))
        m = nk.dag(u) @ rho @ u
        cells = _cells(m, n, d)
        r2 = sum(cells[i, i] for i in range(n))
        r2 = 0.5 * (r2 + nk.dag(r2))
        tr = float(np.trace(r2).real)
        if tr <= 0:
            raise NumericalError("rho0 has no weight on a block")
        r2 = r2 / tr
        norm2 = float(np.vdot(r2, r2).real)
        x1 = np.array([[np.vdot(r2, cells[i, k]) / norm2 for k in range(n)] for i in range(n)])
        x1 = 0.5 * (x1 + nk.dag(x1))
        worst = max(worst, nk.fro(m - np.kron(x1, r2)))
        out.append(SSMBlock(n, d, u, DensityMatrix.normalized(r2), float(np.trace(m).real) / n, x1))
    if worst > tol.split * scale:
        raise NumericalError(
            f"rho0 does not split as X1 (x) rho2 on the blocks (residual {worst:.3e}); "
            "is rho0 really steady?",
            worst,
        )
    dim = sum(b.n ** 2 for b in out)
    return SSMStructure(support, tuple(out), dim, worst)


def trivial_structure(support: SupportSubspace) -> SSMStructure:
    blk = SSMBlock(1, 1, np.ones((1, 1), dtype=complex), DensityMatrix(np.ones((1, 1))), 1.0, np.ones((1, 1)))
    return SSMStructure(support, (blk,), 1, 0.0)


def ssm_element(structure: SSMStructure, factors) -> np.ndarray:
    """V (sum_a U_a (X_a (x) rho2_a) U_a^dagger) V^dagger."""
    factors = list(factors)
    if len(factors) != len(structure.blocks):
        raise InputError(f"need {len(structure.blocks)} factors, got {len(factors)}")
    r = structure.support.rank
    acc = np.zeros((r, r), dtype=complex)
    for blk, x in zip(structure.blocks, factors):
        x = np.asarray(x, dtype=complex)
        if x.shape != (blk.n, blk.n):
            raise InputError(f"factor has shape {x.shape}, expected ({blk.n}, {blk.n})")
        acc += blk.basis @ np.kron(x, blk.rho2.matrix) @ nk.dag(blk.basis)
    return structure.support.embed(acc)


def ssm_operator_basis(structure: SSMStructure) -> list[np.ndarray]:
    """The sum_a n_a^2 operators V U_a (e_i e_k^dagger (x) rho2_a) U_a^dagger V^dagger."""
    out = []
    for blk in structure.blocks:
        for i in range(blk.n):
            for k in range(blk.n):
                e = np.zeros((blk.n, blk.n), dtype=complex)
                e[i, k] = 1.0
                m = blk.basis @ np.kron(e, blk.rho2.matrix) @ nk.dag(blk.basis)
                out.append(structure.support.embed(m))
    return out


def block_diagonal_residuals(structure: SSMStructure, alg: OperatorAlgebraBasis, comm: OperatorAlgebraBasis) -> dict:
    """Worst deviation from I (x) M (algebra) and N (x) I (commutant) form.

    Off-diagonal blocks count towards both.
    """
    bases = [b.basis for b in structure.blocks]

    def worst_for(ops, diag_res):
        worst = 0.0
        for x in ops:
            for a, ua in enumerate(bases):
                for b, ub in enumerate(bases):
                    w = nk.dag(ua) @ x @ ub
                    if a != b:
                        worst = max(worst, nk.fro(w))
                    else:
                        blk = structure.blocks[a]
                        worst = max(worst, diag_res(w, blk.n, blk.d))
        return worst

    def alg_res(w, n, d):
        cells = _cells(w, n, d)
        m = sum(cells[i, i] for i in range(n)) / n
        return nk.fro(w - np.kron(np.eye(n), m))

    def comm_res(w, n, d):
        cells = _cells(w, n, d)
        nmat = np.array([[np.trace(cells[i, k]) / d for k in range(n)] for i in range(n)])
        return nk.fro(w - np.kron(nmat, np.eye(d)))

    return {"algebra": worst_for(alg.basis, alg_res), "commutant": worst_for(comm.basis, comm_res)}


@dataclass
class Decomposition:
    """Every intermediate of the structure computation."""

    generators: GeneratorSet
    commutant: OperatorAlgebraBasis
    algebra: OperatorAlgebraBasis
    p_projs: SpectralProjectionSet
    q_projs: SpectralProjectionSet
    blocks: list
    structure: SSMStructure


def decompose(gens: GeneratorSet, support: SupportSubspace, seed=0, tol: Tolerances = DEFAULT, max_tries: int = 32) -> Decomposition:
    """Commutant, algebra, witness pair, blocks, bases and structure."""
    from .algebra import algebra_basis, commutant_basis

    r = support.rank
    eye = np.eye(r, dtype=complex)
    # an empty generator set (all generators vanished on the support) acts as {I}
    glist = list(gens.generators) or [eye]
    comm = commutant_basis(glist, tol)
    alg = algebra_basis(glist, tol, commutant=commutant_basis([*glist, eye], tol))
    if r == 1:
        p, q = pick_nondegenerate_pair(alg, comm, gens, seed, max_tries, tol)
        return Decomposition(gens, comm, alg, p, q, [Block((0,), (0,))], trivial_structure(support))
    p, q = pick_nondegenerate_pair(alg, comm, gens, seed, max_tries, tol)
    blocks = partition_blocks(p, q, tol.nz)
    bases = [block_basis(b, p, q, alg, comm, seed=[seed, 3, k]) for k, b in enumerate(blocks)]
    structure = assemble_structure(blocks, bases, support.rho0_restricted, support, tol)
    return Decomposition(gens, comm, alg, p, q, blocks, structure)
