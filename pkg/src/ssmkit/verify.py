"""Independent checks: channel application, brute-force fixed spaces and
random models with a prescribed block structure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from . import numkernel as nk
from .algebra import OperatorAlgebraBasis, random_hermitian_element
from .errors import InputError, NumericalError
from .model import (
    KRAUS,
    LINDBLAD,
    TIME_SAMPLED,
    ChannelSpec,
    DensityMatrix,
    SupportSubspace,
    _kraus_apply,
    _lindblad_apply,
    fixed_space_system,
    kraus_superoperator,
    lindblad_superoperator,
    restrict_superoperator,
    steady_residual,
    support_invariance_residual,
    support_of,
)
from .report import VerificationReport
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class Superoperator:
    dim: int
    matrix: np.ndarray

    def apply(self, x) -> np.ndarray:
        return nk.unvec(self.matrix @ nk.vec(np.asarray(x, dtype=complex)), self.dim, self.dim)

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.matrix))))


def _family(spec: ChannelSpec, time_index):
    if spec.kind == LINDBLAD:
        raise InputError("Lindblad dynamics has no Kraus map; use apply_lindblad")
    if spec.kind == KRAUS:
        if time_index not in (None, 0):
            raise InputError("a Kraus spec has a single family (time_index 0)")
        return spec.kraus_ops
    if time_index is None:
        raise InputError("time_index is required for time-sampled dynamics")
    return spec.samples[time_index].kraus


def _check_shape(spec, x):
    x = nk.as_cmatrix(x, "operator")
    if x.shape != (spec.dim, spec.dim):
        raise InputError(f"operator shape {x.shape} does not match dim {spec.dim}")
    return x


def apply_channel(spec: ChannelSpec, x, time_index=None) -> np.ndarray:
    """sum_k E_k X E_k^dagger."""
    return _kraus_apply(_family(spec, time_index), _check_shape(spec, x))


def apply_dual_channel(spec: ChannelSpec, x, time_index=None) -> np.ndarray:
    """sum_k E_k^dagger X E_k."""
    x = _check_shape(spec, x)
    return sum(nk.dag(e) @ x @ e for e in _family(spec, time_index))


def apply_lindblad(h, ops, rho, tol: Tolerances = DEFAULT) -> np.ndarray:
    h = nk.as_cmatrix(h, "hamiltonian")
    res = nk.hermiticity_residual(h)
    if res > tol.herm * max(1.0, nk.fro(h)):
        raise NumericalError(f"Hamiltonian is not Hermitian (residual {res:.3e})", res)
    return _lindblad_apply(h, [np.asarray(a) for a in ops], nk.as_cmatrix(rho, "rho"))


def apply_dynamics(spec: ChannelSpec, x) -> list[np.ndarray]:
    """E(X) for every sample, or [L(X)] for Lindblad dynamics."""
    if spec.kind == LINDBLAD:
        return [_lindblad_apply(spec.hamiltonian, spec.lindblad_ops, x)]
    return [_kraus_apply(f, x) for f in spec.kraus_families()]


def kraus_step(h, ops, rho, dt) -> np.ndarray:
    """One first-order Kraus step: E_0 = I - (iH + 1/2 sum A^dagger A) dt, E_k = A_k sqrt(dt)."""
    d = h.shape[0]
    k = 1j * h + 0.5 * sum((nk.dag(a) @ a for a in ops), np.zeros((d, d), dtype=complex))
    e0 = np.eye(d) - k * dt
    out = e0 @ rho @ nk.dag(e0)
    for a in ops:
        out = out + dt * (a @ rho @ nk.dag(a))
    return out


def first_order_residual(spec: ChannelSpec, rho, dt) -> float:
    """||kraus_step(rho) - (rho + L(rho) dt)||_F."""
    if spec.kind != LINDBLAD:
        raise InputError("first-order consistency needs Lindblad dynamics")
    h, ops = spec.hamiltonian, spec.lindblad_ops
    lhs = kraus_step(h, ops, rho, dt)
    rhs = rho + dt * _lindblad_apply(h, ops, rho)
    return nk.fro(lhs - rhs)


def check_steady(spec: ChannelSpec, x, tol: float = DEFAULT.steady, name="steady") -> VerificationReport:
    rep = VerificationReport()
    rep.add(name, steady_residual(spec, x), tol)
    return rep


def check_cptp_unital(spec: ChannelSpec, tol: Tolerances = DEFAULT) -> VerificationReport:
    """Trace preservation (required) and unitality (informational)."""
    rep = VerificationReport()
    if spec.kind == LINDBLAD:
        eye = np.eye(spec.dim)
        rep.add("trace_preserving", nk.hermiticity_residual(spec.hamiltonian), tol.cptp)
        rep.add("unital", nk.fro(_lindblad_apply(spec.hamiltonian, spec.lindblad_ops, eye)), tol.cptp, required=False)
        return rep
    eye = np.eye(spec.dim)
    tp = max(nk.fro(sum(nk.dag(e) @ e for e in f) - eye) for f in spec.kraus_families())
    un = max(nk.fro(sum(e @ nk.dag(e) for e in f) - eye) for f in spec.kraus_families())
    rep.add("trace_preserving", tp, tol.cptp)
    rep.add("unital", un, tol.cptp, required=False)
    return rep


def superoperator(spec: ChannelSpec, support: SupportSubspace | None = None, time_index=None) -> Superoperator:
    """Superoperator of one Kraus family (or the Liouvillian), optionally
    restricted to the support."""
    if spec.kind == LINDBLAD:
        phi = lindblad_superoperator(spec.hamiltonian, spec.lindblad_ops)
    else:
        phi = kraus_superoperator(_family(spec, 0 if spec.kind == KRAUS else time_index))
    if support is not None:
        phi = restrict_superoperator(phi, support.isometry)
        return Superoperator(support.rank, phi)
    return Superoperator(spec.dim, phi)


@dataclass(frozen=True)
class FixedSpace:
    dim: int
    basis: tuple


def fixed_space_dimension(spec: ChannelSpec, support: SupportSubspace, tol: Tolerances = DEFAULT) -> FixedSpace:
    """Common fixed space of the dynamics restricted to the support, as the
    nullspace of the stacked (Phi - I) (or of the Liouvillian)."""
    inv = support_invariance_residual(spec, support)
    if inv > tol.invariance:
        raise NumericalError(f"support is not invariant under the dynamics (residual {inv:.3e})", inv)
    # Kraus maps have norm of order one, so Phi - I that vanishes up to
    # rounding must not be read as full rank
    scale = 0.0 if spec.kind == LINDBLAD else 1.0
    null = nk.svd_nullspace(fixed_space_system(spec, support.isometry), tol.nullspace, scale)
    r = support.rank
    basis = tuple(nk.unvec(null.vectors[:, i], r, r) for i in range(null.dim))
    return FixedSpace(null.dim, basis)


def cesaro_fixed_projection(spec: ChannelSpec, support: SupportSubspace | None, n_terms: int, time_index=None) -> Superoperator:
    """(1/N) sum_{n=1}^N Phi^n."""
    if spec.kind == LINDBLAD:
        raise InputError("the Cesaro mean needs a Kraus family")
    if n_terms < 1:
        raise InputError("N must be at least 1")
    phi = superoperator(spec, support, time_index)
    power = np.eye(phi.matrix.shape[0], dtype=complex)
    acc = np.zeros_like(power)
    for _ in range(n_terms):
        power = phi.matrix @ power
        acc += power
    return Superoperator(phi.dim, acc / n_terms)


def orthogonal_projector(ops) -> np.ndarray:
    """Superoperator of the Hilbert-Schmidt orthogonal projection onto span(ops)."""
    q = nk.orth_columns(np.stack([nk.vec(o) for o in ops], axis=1))
    return q @ nk.dag(q)


def random_density(dim, rng) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ nk.dag(g)
    return rho / np.trace(rho).real


def _restricted_dynamics(spec, support, x):
    return [support.restrict(y) for y in apply_dynamics(spec, support.embed(x))]


def check_covariance(spec: ChannelSpec, comm: OperatorAlgebraBasis, support: SupportSubspace, seed=0, trials=20, tol: float = DEFAULT.steady) -> VerificationReport:
    """max ||E(U rho U^dagger) - U E(rho) U^dagger||_F over random unitaries
    U = exp(iK) with K Hermitian in the commutant and random states rho on
    the support."""
    rng = np.random.default_rng([seed, 11])
    worst = 0.0
    for _ in range(trials):
        u = nk.expi_hermitian(random_hermitian_element(comm, rng))
        rho = random_density(support.rank, rng)
        lhs = _restricted_dynamics(spec, support, u @ rho @ nk.dag(u))
        rhs = [u @ y @ nk.dag(u) for y in _restricted_dynamics(spec, support, rho)]
        worst = max(worst, max(nk.fro(a - b) for a, b in zip(lhs, rhs)))
    rep = VerificationReport()
    rep.add("covariance", worst, tol)
    return rep


def check_commutant_images(spec: ChannelSpec, comm: OperatorAlgebraBasis, support: SupportSubspace, seed=0, count=5, tol: float = DEFAULT.steady) -> VerificationReport:
    """Every rho~^{1/2} Y rho~^{1/2} with Y in the commutant is steady."""
    rng = np.random.default_rng([seed, 12])
    s = support.sqrt_restricted
    worst = 0.0
    for _ in range(count):
        y = random_hermitian_element(comm, rng) + 1j * random_hermitian_element(comm, rng)
        worst = max(worst, steady_residual(spec, support.embed(s @ y @ s)) / max(1.0, nk.fro(y)))
    rep = VerificationReport()
    rep.add("commutant_image_steady", worst, tol)
    return rep


# -- random models -----------------------------------------------------------


@dataclass(frozen=True)
class RandomModel:
    spec: ChannelSpec
    rho0: DensityMatrix
    expected_blocks: tuple
    support_isometry: np.ndarray


def _haar_unitary(dim, rng):
    if dim == 1:
        return np.exp(2j * np.pi * rng.random()).reshape(1, 1)
    return unitary_group.rvs(dim, random_state=rng)


def _random_kraus_block(d, num_kraus, probs, unital, rng):
    """Kraus operators on C^d: a mixture of Haar unitaries (unital) or a
    generic channel from a Haar-random Stinespring isometry."""
    if unital:
        return [np.sqrt(p) * _haar_unitary(d, rng) for p in probs]
    iso = _haar_unitary(d * num_kraus, rng)[:, :d]
    return [iso[k * d:(k + 1) * d, :] for k in range(num_kraus)]


def _block_fixed_state(kraus):
    d = kraus[0].shape[0]
    w, vecs = np.linalg.eig(kraus_superoperator(kraus))
    x = nk.unvec(vecs[:, int(np.argmin(np.abs(w - 1.0)))], d, d)
    x = x / np.trace(x)
    return 0.5 * (x + nk.dag(x))


def random_model(seed, structure_request, num_kraus=3, embed_dim=None, unital=True, max_retries=8, tol: Tolerances = DEFAULT) -> RandomModel:
    """Random CPTP model whose steady-state manifold has the requested
    blocks ``[(n, d), ...]`` on the support of the returned ``rho0``.

    Kraus operators act as ``W (+)_a I_n (x) M_{k,a} W^dagger`` on the
    support, with ``W`` Haar-random. With ``embed_dim`` larger than
    ``sum n d`` the support sits inside a bigger space whose complement
    decays into it. ``unital=False`` replaces the mixtures of unitaries by
    generic channels, so ``rho0`` is no longer maximally mixed.
    """
    request = [tuple(int(v) for v in b) for b in structure_request]
    if not request or any(n < 1 or d < 1 for n, d in request):
        raise InputError("structure request must be a nonempty list of positive (n, d)")
    r = sum(n * d for n, d in request)
    dim = r if embed_dim is None else int(embed_dim)
    if dim < r:
        raise InputError(f"embed_dim {dim} is smaller than the support dimension {r}")
    rng = np.random.default_rng([seed, 21])
    expected = sum(n * n for n, _ in request)
    for _ in range(max_retries):
        probs = rng.dirichlet(np.ones(num_kraus))
        per_block = [_random_kraus_block(d, num_kraus, probs, unital, rng) for _, d in request]
        w = _haar_unitary(r, rng)
        support_ops = []
        for k in range(num_kraus):
            blocks = [np.kron(np.eye(n), per_block[a][k]) for a, (n, _) in enumerate(request)]
            m = np.zeros((r, r), dtype=complex)
            off = 0
            for b in blocks:
                m[off:off + b.shape[0], off:off + b.shape[0]] = b
                off += b.shape[0]
            support_ops.append(w @ m @ nk.dag(w))
        # steady state on the support
        parts = []
        weights = rng.dirichlet(np.ones(len(request)))
        for a, (n, d) in enumerate(request):
            sigma = np.eye(d) / d if unital else _block_fixed_state(per_block[a])
            x = np.eye(n) / n if unital else random_density(n, rng)
            parts.append(weights[a] * np.kron(x, sigma))
        rho_r = np.zeros((r, r), dtype=complex)
        off = 0
        for p in parts:
            rho_r[off:off + p.shape[0], off:off + p.shape[0]] = p
            off += p.shape[0]
        rho_r = w @ rho_r @ nk.dag(w)

        full = _haar_unitary(dim, rng) if dim > r else np.eye(r, dtype=complex)
        v = full[:, :r]
        ops = [v @ s @ nk.dag(v) for s in support_ops]
        if dim > r:
            c = full[:, r:]
            q = rng.uniform(0.2, 0.6)
            uc = _haar_unitary(dim - r, rng)
            ops = [o + np.sqrt((1 - q) * probs[k]) * (c @ uc @ nk.dag(c)) for k, o in enumerate(ops)]
            for j in range(dim - r):
                t = rng.standard_normal(r) + 1j * rng.standard_normal(r)
                t /= np.linalg.norm(t)
                ops.append(np.sqrt(q) * np.outer(v @ t, c[:, j].conj()))
        spec = ChannelSpec.from_kraus(ops, label=f"random model {request}")
        rho0 = DensityMatrix.normalized(v @ rho_r @ nk.dag(v))
        support = support_of(rho0, tol.support, tol)
        if support.rank != r:
            continue
        fixed = fixed_space_dimension(spec, support, tol)
        if fixed.dim == expected and steady_residual(spec, rho0.matrix) <= tol.steady:
            return RandomModel(spec, rho0, tuple(request), v)
    raise NumericalError(f"could not sample a model with blocks {request} in {max_retries} tries")
