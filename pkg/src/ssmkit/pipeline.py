"""End-to-end analysis: dynamics + one steady state -> manifold structure."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import numkernel as nk
from .algebra import commutation_residual, twirl
from .errors import InputError, NumericalError, StageError
from .examples import builtin_model
from .model import (
    ChannelSpec,
    DensityMatrix,
    find_steady_state,
    modified_generators,
    raw_generators,
    steady_residual,
    support_invariance_residual,
    support_of,
    validate_channel,
)
from .report import VerificationReport
from .structure import Decomposition, block_diagonal_residuals, decompose, ssm_element, ssm_operator_basis
from .tolerances import DEFAULT, Tolerances
from .verify import check_commutant_images, check_covariance, check_cptp_unital, fixed_space_dimension

CHECK_GROUPS = ("cptp", "steady", "structure", "oracle", "twirl", "covariance", "commutant_image")


@dataclass
class AnalysisRequest:
    channel: ChannelSpec
    steady_state: DensityMatrix | None = None
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    checks: list = field(default_factory=lambda: list(CHECK_GROUPS))

    def __post_init__(self):
        unknown = sorted(set(self.checks) - set(CHECK_GROUPS))
        if unknown:
            raise InputError(f"unknown check(s): {', '.join(unknown)}", "/checks")
        if not (isinstance(self.seed, (int, np.integer)) and self.seed >= 0):
            raise InputError(f"seed must be a non-negative integer, got {self.seed!r}", "/seed")
        try:
            DEFAULT.with_overrides(self.tolerances)
        except (KeyError, ValueError) as e:
            raise InputError(str(e).strip("'\""), "/tolerances") from e
        if self.steady_state is not None and self.steady_state.dim != self.channel.dim:
            raise InputError(
                f"steady state has dim {self.steady_state.dim}, channel has dim {self.channel.dim}",
                "/steady_state",
            )

    @property
    def tol(self) -> Tolerances:
        return DEFAULT.with_overrides(self.tolerances)


@dataclass
class BlockReport:
    n: int
    d: int
    basis: np.ndarray
    rho2: np.ndarray
    weight: float


@dataclass
class AnalysisReport:
    label: str
    support_rank: int
    blocks: list
    ssm_dimension: int
    commutant_dimension: int
    algebra_dimension: int
    verification: VerificationReport
    provenance: dict
    ssm_operator_basis: list | None = None

    @property
    def passed(self) -> bool:
        return self.verification.passed

    @property
    def block_dims(self) -> list[tuple[int, int]]:
        return [(b.n, b.d) for b in self.blocks]


@dataclass
class Analysis:
    """Report plus every intermediate, for library callers and tests."""

    report: AnalysisReport
    rho0: DensityMatrix
    decomposition: Decomposition

    @property
    def structure(self):
        return self.decomposition.structure

    @property
    def support(self):
        return self.decomposition.structure.support


def builtin_example(n, **params) -> AnalysisRequest:
    spec, rho0 = builtin_model(int(n), **params)
    return AnalysisRequest(channel=spec, steady_state=rho0)


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, et, ev, tb):
        if ev is not None and not isinstance(ev, StageError) and isinstance(ev, Exception):
            raise StageError(self.name, ev) from ev
        return False


def analyze(req: AnalysisRequest, digest: str = "") -> Analysis:
    """Run the full pipeline and every requested check."""
    tol = req.tol
    spec = req.channel
    seed = int(req.seed)
    rep = VerificationReport()

    with _Stage("validate"):
        valid = validate_channel(spec, tol)
        if not valid.passed:
            worst = max(valid.checks, key=lambda c: c.residual)
            raise InputError(f"{worst.name} residual {worst.residual:.3e} exceeds {worst.tolerance:.1e}")
    with _Stage("steady_state"):
        rho0 = req.steady_state if req.steady_state is not None else find_steady_state(spec, tol)
        rho_res = steady_residual(spec, rho0.matrix)
        if rho_res > tol.steady:
            raise NumericalError(f"rho0 is not steady (residual {rho_res:.3e})", rho_res)
    with _Stage("support"):
        support = support_of(rho0, tol.support, tol)
        inv = support_invariance_residual(spec, support)
        if inv > tol.invariance:
            raise NumericalError(f"support of rho0 is not invariant (residual {inv:.3e})", inv)
    with _Stage("generators"):
        gens = modified_generators(raw_generators(spec), support, tol.hs_drop)
    with _Stage("decomposition"):
        dec = decompose(gens, support, seed=seed, tol=tol)
    s = dec.structure

    with _Stage("verification"):
        if "cptp" in req.checks:
            if spec.kind == "lindblad":
                rep.extend(validate_channel(spec, tol))
            else:
                rep.extend(check_cptp_unital(spec, tol))
        if "steady" in req.checks:
            rep.add("rho0_steady", rho_res, tol.steady)
            rep.add("support_invariant", inv, tol.invariance)
        if "structure" in req.checks:
            bd = block_diagonal_residuals(s, dec.algebra, dec.commutant)
            rep.add("algebra_block_form", bd["algebra"], tol.split)
            rep.add("commutant_block_form", bd["commutant"], tol.split)
            rep.add("commutant_commutes", commutation_residual(dec.commutant, gens), tol.split)
            rep.add("rho0_split", s.split_residual, tol.split)
            u = s.full_basis()
            rep.add("basis_unitary", nk.fro(nk.dag(u) @ u - np.eye(support.rank)), tol.split)
        ops = ssm_operator_basis(s)
        if "oracle" in req.checks:
            fixed = fixed_space_dimension(spec, support, tol)
            rep.add("oracle_dimension", abs(fixed.dim - s.ssm_dimension), 0.0)
            rep.add(
                "oracle_subspace",
                nk.operator_subspace_distance([support.restrict(o) for o in ops], fixed.basis),
                tol.oracle_subspace,
            )
            rep.add("ssm_basis_steady", max(steady_residual(spec, o) for o in ops), tol.steady)
        if "twirl" in req.checks:
            bar = twirl(support.rho0_restricted, dec.algebra, tol)
            rep.add("twirl_steady", steady_residual(spec, support.embed(bar)), tol.steady)
            rep.add("twirl_commutes", commutation_residual(dec.commutant, [bar]), tol.split)
            w = np.linalg.eigvalsh(bar)
            rep.add("twirl_rank_deficit", int(np.sum(w <= tol.support * w[-1])), 0.0)
            weights = [blk.weight * np.eye(blk.n) for blk in s.blocks]
            rep.add("twirl_matches_structure", nk.fro(ssm_element(s, weights) - support.embed(bar)), tol.split)
        if "covariance" in req.checks:
            rep.extend(check_covariance(spec, dec.commutant, support, seed=seed, trials=20, tol=tol.steady))
        if "commutant_image" in req.checks:
            rep.extend(check_commutant_images(spec, dec.commutant, support, seed=seed, count=5, tol=tol.steady))

    blocks = [BlockReport(b.n, b.d, b.basis, b.rho2.matrix, b.weight) for b in s.blocks]
    prov = {
        "seed": seed,
        "tolerances": tol.as_dict(),
        "tool": "ssmkit",
        "version": __version__,
        "input_digest": digest,
        "kind": spec.kind,
        "time_samples": [smp.t for smp in spec.samples] if spec.kind == "time_sampled" else None,
    }
    report = AnalysisReport(
        label=spec.label,
        support_rank=support.rank,
        blocks=blocks,
        ssm_dimension=s.ssm_dimension,
        commutant_dimension=len(dec.commutant),
        algebra_dimension=len(dec.algebra),
        verification=rep,
        provenance=prov,
        ssm_operator_basis=ops,
    )
    return Analysis(report, rho0, dec)


def run_analysis(req: AnalysisRequest, digest: str = "") -> AnalysisReport:
    return analyze(req, digest).report
