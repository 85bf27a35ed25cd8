"""Dynamics and state representation.

A `ChannelSpec` holds one of three kinds of dynamics:

* ``kraus``: a single Kraus family ``{E_k}``;
* ``lindblad``: a Hamiltonian ``H`` and jump operators ``{A_k}``;
* ``time_sampled``: Kraus families sampled at several time labels.

States on the support of a steady state are handled through a
`SupportSubspace`, which stores an isometry onto the support together with
the restricted state and its (inverse) square roots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numkernel as nk
from .errors import InputError, NumericalError
from .report import VerificationReport
from .tolerances import DEFAULT, Tolerances

KRAUS = "kraus"
LINDBLAD = "lindblad"
TIME_SAMPLED = "time_sampled"
KINDS = (KRAUS, LINDBLAD, TIME_SAMPLED)


@dataclass(frozen=True)
class KrausSample:
    t: float
    kraus: tuple


@dataclass(frozen=True)
class ChannelSpec:
    dim: int
    kind: str
    kraus_ops: tuple = ()
    hamiltonian: np.ndarray | None = None
    lindblad_ops: tuple = ()
    samples: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown channel kind {self.kind!r}")
        if not (isinstance(self.dim, (int, np.integer)) and self.dim >= 1):
            raise InputError(f"dim must be a positive integer, got {self.dim!r}")
        d = int(self.dim)

        def square(op, path):
            a = nk.as_cmatrix(op, path)
            if a.shape != (d, d):
                raise InputError(f"expected shape ({d}, {d}), got {a.shape}", path)
            a = a.copy()
            a.setflags(write=False)
            return a

        if self.kind == KRAUS:
            if not self.kraus_ops:
                raise InputError("Kraus family is empty", "/kraus")
            ops = tuple(square(e, f"/kraus/{i}") for i, e in enumerate(self.kraus_ops))
            object.__setattr__(self, "kraus_ops", ops)
        elif self.kind == LINDBLAD:
            h = self.hamiltonian
            h = np.zeros((d, d)) if h is None else h
            object.__setattr__(self, "hamiltonian", square(h, "/hamiltonian"))
            ops = tuple(square(a, f"/lindblad/{i}") for i, a in enumerate(self.lindblad_ops))
            object.__setattr__(self, "lindblad_ops", ops)
        else:
            if not self.samples:
                raise InputError("no time samples given", "/samples")
            samples = []
            for i, s in enumerate(self.samples):
                if not isinstance(s, KrausSample):
                    t, ops = s
                    s = KrausSample(float(t), tuple(ops))
                if not s.kraus:
                    raise InputError("Kraus family is empty", f"/samples/{i}/kraus")
                ops = tuple(
                    square(e, f"/samples/{i}/kraus/{j}") for j, e in enumerate(s.kraus)
                )
                samples.append(KrausSample(float(s.t), ops))
            object.__setattr__(self, "samples", tuple(samples))

    @classmethod
    def from_kraus(cls, ops, label=""):
        ops = [np.asarray(e, dtype=complex) for e in ops]
        if not ops:
            raise InputError("Kraus family is empty", "/kraus")
        return cls(dim=ops[0].shape[0], kind=KRAUS, kraus_ops=tuple(ops), label=label)

    @classmethod
    def from_lindblad(cls, hamiltonian, lindblad_ops, label=""):
        h = np.asarray(hamiltonian, dtype=complex)
        return cls(
            dim=h.shape[0], kind=LINDBLAD, hamiltonian=h,
            lindblad_ops=tuple(lindblad_ops), label=label,
        )

    @classmethod
    def from_samples(cls, samples, label=""):
        samples = [KrausSample(float(t), tuple(ops)) for t, ops in samples]
        if not samples:
            raise InputError("no time samples given", "/samples")
        d = np.asarray(samples[0].kraus[0]).shape[0]
        return cls(dim=d, kind=TIME_SAMPLED, samples=tuple(samples), label=label)

    def kraus_families(self) -> list[tuple]:
        """Every Kraus family of the spec (one per time sample)."""
        if self.kind == KRAUS:
            return [self.kraus_ops]
        if self.kind == TIME_SAMPLED:
            return [s.kraus for s in self.samples]
        raise InputError("a Lindblad spec has no Kraus family")

    def effective_hamiltonian(self) -> np.ndarray:
        """K = iH + (1/2) sum_k A_k^dagger A_k (Lindblad kind only)."""
        k = 1j * self.hamiltonian
        for a in self.lindblad_ops:
            k = k + 0.5 * nk.dag(a) @ a
        return k


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = nk.as_cmatrix(self.matrix, "density matrix")
        if m.shape[0] != m.shape[1]:
            raise InputError(f"density matrix must be square, got {m.shape}")
        herm = nk.hermiticity_residual(m)
        if herm > DEFAULT.herm * max(1.0, nk.fro(m)):
            raise NumericalError(f"density matrix not Hermitian (residual {herm:.3e})", herm)
        m = 0.5 * (m + nk.dag(m))
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > 1e-10:
            raise NumericalError(f"density matrix trace is {tr!r}, expected 1", abs(tr - 1))
        w = np.linalg.eigvalsh(m)
        if w[0] < -DEFAULT.psd:
            raise NumericalError(f"density matrix has eigenvalue {w[0]:.3e} < 0", -w[0])
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def normalized(cls, m):
        """Build from a PSD matrix by dividing by its trace."""
        m = np.asarray(m, dtype=complex)
        m = 0.5 * (m + nk.dag(m))
        return cls(m / np.trace(m).real)


@dataclass(frozen=True)
class SupportSubspace:
    full_dim: int
    rank: int
    isometry: np.ndarray
    projector: np.ndarray
    rho0_restricted: np.ndarray
    sqrt_restricted: np.ndarray
    pinv_sqrt_restricted: np.ndarray

    def restrict(self, x) -> np.ndarray:
        """V^dagger X V."""
        v = self.isometry
        return nk.dag(v) @ x @ v

    def embed(self, x) -> np.ndarray:
        """V X V^dagger."""
        v = self.isometry
        return v @ x @ nk.dag(v)


@dataclass(frozen=True)
class GeneratorSet:
    dim: int
    generators: tuple
    dagger_closed: bool = True

    def __len__(self):
        return len(self.generators)

    def with_daggers(self) -> list[np.ndarray]:
        out = []
        for g in self.generators:
            out.append(g)
            out.append(nk.dag(g))
        return out


def validate_channel(spec: ChannelSpec, tol: Tolerances = DEFAULT) -> VerificationReport:
    """CPTP-sum residuals (Kraus kinds) or the Hermiticity residual of H."""
    rep = VerificationReport()
    eye = np.eye(spec.dim)
    if spec.kind == LINDBLAD:
        rep.add("hamiltonian_hermitian", nk.hermiticity_residual(spec.hamiltonian), tol.cptp)
        return rep
    for i, fam in enumerate(spec.kraus_families()):
        s = sum(nk.dag(e) @ e for e in fam)
        name = "trace_preserving" if spec.kind == KRAUS else f"trace_preserving[t={spec.samples[i].t!r}]"
        rep.add(name, nk.fro(s - eye), tol.cptp)
    return rep


def support_of(rho0, support_tol: float = DEFAULT.support, tol: Tolerances = DEFAULT) -> SupportSubspace:
    """Support of ``rho0``: eigenvectors with eigenvalue above
    ``support_tol * lambda_max``, ordered by decreasing eigenvalue."""
    m = rho0.matrix if isinstance(rho0, DensityMatrix) else nk.as_cmatrix(rho0, "rho0")
    w, v = nk.hermitian_eig(m, tol.herm)
    if w[-1] <= 0 or nk.fro(m) == 0.0:
        raise NumericalError("rho0 is (numerically) zero; it has no support")
    keep = np.nonzero(w > support_tol * w[-1])[0][::-1]
    iso = v[:, keep]
    # deterministic column phases: largest-magnitude entry real positive
    for c in range(iso.shape[1]):
        col = iso[:, c]
        k = int(np.argmax(np.abs(col) > 0.5 * np.max(np.abs(col))))
        iso[:, c] = col * (abs(col[k]) / col[k])
    rho_r = nk.dag(iso) @ m @ iso
    rho_r = 0.5 * (rho_r + nk.dag(rho_r))
    return SupportSubspace(
        full_dim=m.shape[0],
        rank=iso.shape[1],
        isometry=iso,
        projector=iso @ nk.dag(iso),
        rho0_restricted=rho_r,
        sqrt_restricted=nk.psd_sqrt(rho_r, tol.psd, tol.herm),
        pinv_sqrt_restricted=nk.psd_pinv_sqrt(rho_r, support_tol, tol.psd, tol.herm),
    )


def _dedup_scalar_multiples(ops, rel_tol=1e-10):
    out = []
    norms = []
    for x in ops:
        nx = nk.fro(x)
        if nx == 0.0:
            continue
        dup = False
        for y, ny in zip(out, norms):
            if abs(abs(nk.hs_inner(y, x)) - nx * ny) <= rel_tol * nx * ny:
                dup = True
                break
        if not dup:
            out.append(x)
            norms.append(nx)
    return out


def raw_generators(spec: ChannelSpec) -> list[np.ndarray]:
    """Operators generating the noise algebra (daggers implied).

    Zero operators are dropped and scalar multiples deduplicated.
    """
    if spec.kind == LINDBLAD:
        ops = [spec.hamiltonian, *spec.lindblad_ops]
    else:
        ops = [e for fam in spec.kraus_families() for e in fam]
    return _dedup_scalar_multiples([np.asarray(o) for o in ops])


def modified_generators(raw, support: SupportSubspace, drop_tol: float = DEFAULT.hs_drop) -> GeneratorSet:
    """Map each G to rho~^{-1/2} (V^dagger G V) rho~^{1/2}, dropping zeros."""
    s, t = support.sqrt_restricted, support.pinv_sqrt_restricted
    gens = []
    for g in raw:
        scale = max(1.0, nk.fro(g))
        m = t @ support.restrict(g) @ s
        if nk.fro(m) > drop_tol * scale:
            gens.append(m)
    return GeneratorSet(dim=support.rank, generators=tuple(gens), dagger_closed=True)


def support_invariance_residual(spec: ChannelSpec, support: SupportSubspace) -> float:
    """max ||(I - P) G P||_F over the operators that move the support.

    For Kraus kinds these are the Kraus operators. For Lindblad dynamics
    they are the jump operators and the effective Hamiltonian.
    """
    p = support.projector
    q = np.eye(spec.dim) - p
    if spec.kind == LINDBLAD:
        ops = [*spec.lindblad_ops, spec.effective_hamiltonian()]
    else:
        ops = [e for fam in spec.kraus_families() for e in fam]
    return max((nk.fro(q @ g @ p) for g in ops), default=0.0)


# -- superoperators ---------------------------------------------------------


def kraus_superoperator(ops) -> np.ndarray:
    """Phi with Phi vec(X) = vec(sum_k E_k X E_k^dagger)."""
    return sum(np.kron(e.conj(), e) for e in ops)


def lindblad_superoperator(h, ops) -> np.ndarray:
    d = h.shape[0]
    eye = np.eye(d)
    out = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for a in ops:
        ada = nk.dag(a) @ a
        out = out + np.kron(a.conj(), a) - 0.5 * np.kron(eye, ada) - 0.5 * np.kron(ada.T, eye)
    return out


def restrict_superoperator(phi, iso) -> np.ndarray:
    """Superoperator of X -> V^dagger Phi(V X V^dagger) V."""
    return np.kron(iso.T, nk.dag(iso)) @ phi @ np.kron(iso.conj(), iso)


def superoperators(spec: ChannelSpec) -> list[np.ndarray]:
    """One superoperator per Kraus family, or the Liouvillian."""
    if spec.kind == LINDBLAD:
        return [lindblad_superoperator(spec.hamiltonian, spec.lindblad_ops)]
    return [kraus_superoperator(fam) for fam in spec.kraus_families()]


def fixed_space_system(spec: ChannelSpec, iso=None) -> np.ndarray:
    """Stacked linear system whose nullspace is the common fixed space."""
    blocks = []
    for phi in superoperators(spec):
        if iso is not None:
            phi = restrict_superoperator(phi, iso)
        if spec.kind == LINDBLAD:
            blocks.append(phi)
        else:
            blocks.append(phi - np.eye(phi.shape[0]))
    return np.vstack(blocks)


# -- application -------------------------------------------------------------


def _kraus_apply(ops, x):
    return sum(e @ x @ nk.dag(e) for e in ops)


def _lindblad_apply(h, ops, x):
    out = -1j * (h @ x - x @ h)
    for a in ops:
        ada = nk.dag(a) @ a
        out = out + a @ x @ nk.dag(a) - 0.5 * (ada @ x + x @ ada)
    return out


def steady_residual(spec: ChannelSpec, x) -> float:
    """||E(X) - X||_F (max over samples) or ||L(X)||_F."""
    x = np.asarray(x, dtype=complex)
    if spec.kind == LINDBLAD:
        return nk.fro(_lindblad_apply(spec.hamiltonian, spec.lindblad_ops, x))
    return max(nk.fro(_kraus_apply(fam, x) - x) for fam in spec.kraus_families())


def _positive_part(h):
    w, v = np.linalg.eigh(h)
    w = np.clip(w, 0.0, None)
    return (v * w) @ nk.dag(v)


def find_steady_state(spec: ChannelSpec, tol: Tolerances = DEFAULT) -> DensityMatrix:
    """A steady state of ``spec``, found from its fixed space.

    The orthogonal projection of the identity onto the fixed space is tried
    first (it has positive trace whenever a steady state exists), then the
    fixed-space basis elements. Each candidate is Hermitized and its
    positive and negative parts are tried in turn; the first one passing
    the steadiness check is returned.
    """
    null = nk.svd_nullspace(fixed_space_system(spec), tol.nullspace)
    if null.dim == 0:
        raise NumericalError("fixed space is numerically empty")
    d = spec.dim
    basis = [nk.unvec(null.vectors[:, i], d, d) for i in range(null.dim)]
    eye = np.eye(d)
    proj_id = sum(nk.hs_inner(b, eye) * b for b in basis)
    candidates = [proj_id, *basis]
    best = np.inf
    for x in candidates:
        herm = 0.5 * (x + nk.dag(x))
        anti = 0.5j * (x - nk.dag(x))
        for h in (herm, anti):
            for sign in (1.0, -1.0):
                pos = _positive_part(sign * h)
                tr = float(np.trace(pos).real)
                if tr <= tol.steady:
                    continue
                rho = pos / tr
                res = steady_residual(spec, rho)
                best = min(best, res)
                if res <= tol.steady:
                    return DensityMatrix.normalized(rho)
    raise NumericalError(f"no positive fixed element found (best residual {best:.3e})", best)
