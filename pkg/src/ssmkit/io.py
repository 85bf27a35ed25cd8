"""JSON model and report formats.

Complex numbers are ``[re, im]`` pairs and matrices are row-major lists of
rows. Model files are flat::

    {"dim": 4, "kind": "kraus", "kraus": [M, ...], "steady_state": M | null,
     "seed": 0, "tolerances": {"steady": 1e-8}}

The channel fields may also be nested under a ``"channel"`` object.
Errors carry the JSON pointer of the offending value.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .errors import InputError, NumericalError
from .model import KINDS, LINDBLAD, TIME_SAMPLED, KRAUS, ChannelSpec, DensityMatrix, validate_channel
from .pipeline import CHECK_GROUPS, AnalysisReport, AnalysisRequest, BlockReport
from .report import Check, VerificationReport
from .tolerances import DEFAULT


# -- encoding -------------------------------------------------------------------


def _num(x: float) -> float:
    # +0.0 drops the sign of negative zero
    return float(x) + 0.0


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[_num(z.real), _num(z.imag)] for z in row] for row in m]


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


# -- decoding -------------------------------------------------------------------


def _complex(v, path):
    if isinstance(v, bool):
        raise InputError("expected a number or [re, im] pair", path)
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
    ):
        return complex(v[0], v[1])
    raise InputError("expected a number or [re, im] pair", path)


def decode_matrix(v, path, shape=None) -> np.ndarray:
    if not isinstance(v, list) or not v or not all(isinstance(row, list) for row in v):
        raise InputError("expected a nonempty list of rows", path)
    ncols = len(v[0])
    for i, row in enumerate(v):
        if len(row) != ncols:
            raise InputError(f"row {i} has {len(row)} entries, expected {ncols}", path)
    m = np.array(
        [[_complex(z, f"{path}/{i}/{j}") for j, z in enumerate(row)] for i, row in enumerate(v)],
        dtype=complex,
    )
    if shape is not None and m.shape != shape:
        raise InputError(f"expected shape {shape}, got {m.shape}", path)
    return m


def _require(obj, key, path, types):
    if key not in obj:
        raise InputError(f"missing required key {key!r}", path or "/")
    val = obj[key]
    if not isinstance(val, types) or isinstance(val, bool):
        raise InputError(f"wrong type {type(val).__name__}", f"{path}/{key}")
    return val


def _matrix_list(v, path, d):
    if not isinstance(v, list):
        raise InputError("expected a list of matrices", path)
    return [decode_matrix(m, f"{path}/{i}", (d, d)) for i, m in enumerate(v)]


def channel_from_obj(obj, base="") -> ChannelSpec:
    if not isinstance(obj, dict):
        raise InputError("expected an object", base or "/")
    d = _require(obj, "dim", base, int)
    if d < 1:
        raise InputError("dim must be positive", f"{base}/dim")
    kind = _require(obj, "kind", base, str)
    if kind not in KINDS:
        raise InputError(f"kind must be one of {list(KINDS)}", f"{base}/kind")
    label = obj.get("label", "") or ""
    if kind == KRAUS:
        ops = _matrix_list(_require(obj, "kraus", base, list), f"{base}/kraus", d)
        if not ops:
            raise InputError("Kraus family is empty", f"{base}/kraus")
        return ChannelSpec(d, KRAUS, kraus_ops=tuple(ops), label=label)
    if kind == LINDBLAD:
        h = obj.get("hamiltonian")
        h = np.zeros((d, d)) if h is None else decode_matrix(h, f"{base}/hamiltonian", (d, d))
        ops = _matrix_list(obj.get("lindblad", []), f"{base}/lindblad", d)
        return ChannelSpec(d, LINDBLAD, hamiltonian=h, lindblad_ops=tuple(ops), label=label)
    samples = _require(obj, "samples", base, list)
    if not samples:
        raise InputError("no time samples given", f"{base}/samples")
    out = []
    for i, s in enumerate(samples):
        p = f"{base}/samples/{i}"
        if not isinstance(s, dict):
            raise InputError("expected an object", p)
        t = _require(s, "t", p, (int, float))
        out.append((float(t), _matrix_list(_require(s, "kraus", p, list), f"{p}/kraus", d)))
    return ChannelSpec(d, TIME_SAMPLED, samples=tuple(out), label=label)


def parse_model(text) -> AnalysisRequest:
    """Parse and validate a model file into an `AnalysisRequest`."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"invalid JSON: {e}", "/") from e
    if not isinstance(obj, dict):
        raise InputError("top level must be an object", "/")
    if "channel" in obj:
        spec = channel_from_obj(obj["channel"], "/channel")
    else:
        spec = channel_from_obj(obj, "")
    for c in validate_channel(spec).checks:
        if not c.passed:
            raise InputError(
                f"invariant {c.name} violated: residual {c.residual:.3e} exceeds {c.tolerance:.1e}",
                "/channel" if "channel" in obj else "/",
            )
    rho = obj.get("steady_state")
    if rho is not None:
        m = decode_matrix(rho, "/steady_state", (spec.dim, spec.dim))
        try:
            rho = DensityMatrix(m)
        except NumericalError as e:
            raise InputError(f"not a density matrix: {e}", "/steady_state") from e
    seed = obj.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise InputError("seed must be a non-negative integer", "/seed")
    tols = obj.get("tolerances", {}) or {}
    if not isinstance(tols, dict):
        raise InputError("expected an object", "/tolerances")
    for k, v in tols.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise InputError("tolerance must be a number", f"/tolerances/{k}")
    try:
        DEFAULT.with_overrides(tols)
    except (KeyError, ValueError) as e:
        raise InputError(str(e).strip("'\""), "/tolerances") from e
    checks = obj.get("checks", list(CHECK_GROUPS))
    if not isinstance(checks, list) or not all(isinstance(c, str) for c in checks):
        raise InputError("expected a list of check names", "/checks")
    return AnalysisRequest(spec, rho, dict(tols), seed, list(checks))


def channel_to_obj(spec: ChannelSpec) -> dict:
    obj = {"dim": int(spec.dim), "kind": spec.kind, "label": spec.label}
    if spec.kind == KRAUS:
        obj["kraus"] = [encode_matrix(e) for e in spec.kraus_ops]
    elif spec.kind == LINDBLAD:
        obj["hamiltonian"] = encode_matrix(spec.hamiltonian)
        obj["lindblad"] = [encode_matrix(a) for a in spec.lindblad_ops]
    else:
        obj["samples"] = [
            {"t": float(s.t), "kraus": [encode_matrix(e) for e in s.kraus]} for s in spec.samples
        ]
    return obj


def request_to_obj(req: AnalysisRequest) -> dict:
    obj = channel_to_obj(req.channel)
    obj["steady_state"] = None if req.steady_state is None else encode_matrix(req.steady_state.matrix)
    obj["seed"] = int(req.seed)
    obj["tolerances"] = {k: float(v) for k, v in req.tolerances.items()}
    obj["checks"] = list(req.checks)
    return obj


def emit_model(req: AnalysisRequest) -> str:
    return json.dumps(request_to_obj(req), sort_keys=True, indent=1) + "\n"


def input_digest(req: AnalysisRequest) -> str:
    """sha256 of the canonical serialization of the request."""
    return hashlib.sha256(dumps(request_to_obj(req)).encode()).hexdigest()


# -- reports --------------------------------------------------------------------


def report_to_obj(report: AnalysisReport, emit_basis=False) -> dict:
    obj = {
        "label": report.label,
        "support_rank": int(report.support_rank),
        "ssm_dimension": int(report.ssm_dimension),
        "commutant_dimension": int(report.commutant_dimension),
        "algebra_dimension": int(report.algebra_dimension),
        "blocks": [
            {
                "n": int(b.n),
                "d": int(b.d),
                "weight": _num(b.weight),
                "basis": encode_matrix(b.basis),
                "rho2": encode_matrix(b.rho2),
            }
            for b in report.blocks
        ],
        "checks": report.verification.to_list(),
        "passed": report.passed,
        "provenance": report.provenance,
    }
    if emit_basis and report.ssm_operator_basis is not None:
        obj["ssm_operator_basis"] = [encode_matrix(o) for o in report.ssm_operator_basis]
    return obj


def emit_report(report: AnalysisReport, fmt="json", emit_basis=False) -> bytes:
    if fmt == "json":
        return (json.dumps(report_to_obj(report, emit_basis), sort_keys=True, indent=1) + "\n").encode()
    if fmt == "text":
        return format_text(report).encode()
    raise InputError(f"unknown format {fmt!r}")


def format_text(report: AnalysisReport) -> str:
    lines = []
    if report.label:
        lines.append(f"model: {report.label}")
    lines.append(f"support rank: {report.support_rank}")
    lines.append(f"ssm dimension: {report.ssm_dimension}")
    lines.append(f"algebra dimension: {report.algebra_dimension}  commutant dimension: {report.commutant_dimension}")
    lines.append("blocks:")
    for k, b in enumerate(report.blocks):
        lines.append(f"  [{k}] n={b.n} d={b.d} weight={b.weight:.6g}")
    samples = report.provenance.get("time_samples")
    if samples:
        lines.append("steadiness certified at the given time samples only: t = " + ", ".join(f"{t:g}" for t in samples))
    lines.append("checks:")
    for c in report.verification.checks:
        flag = "PASS" if c.passed else ("FAIL" if c.required else "info")
        lines.append(f"  {flag:4s} {c.name:28s} residual={c.residual:.3e} tol={c.tolerance:.1e}")
    lines.append("result: " + ("all checks passed" if report.passed else "CHECK FAILURE"))
    return "\n".join(lines) + "\n"


def parse_report(text) -> AnalysisReport:
    obj = json.loads(text)
    blocks = [
        BlockReport(
            int(b["n"]), int(b["d"]),
            decode_matrix(b["basis"], "/blocks/basis"),
            decode_matrix(b["rho2"], "/blocks/rho2"),
            float(b["weight"]),
        )
        for b in obj["blocks"]
    ]
    rep = VerificationReport(
        [Check(c["name"], float(c["residual"]), float(c["tolerance"]), bool(c.get("required", True))) for c in obj["checks"]]
    )
    basis = obj.get("ssm_operator_basis")
    if basis is not None:
        basis = [decode_matrix(m, "/ssm_operator_basis") for m in basis]
    return AnalysisReport(
        label=obj.get("label", ""),
        support_rank=int(obj["support_rank"]),
        blocks=blocks,
        ssm_dimension=int(obj["ssm_dimension"]),
        commutant_dimension=int(obj.get("commutant_dimension", 0)),
        algebra_dimension=int(obj.get("algebra_dimension", 0)),
        verification=rep,
        provenance=obj.get("provenance", {}),
        ssm_operator_basis=basis,
    )
