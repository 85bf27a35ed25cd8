"""Command line entry point ``ssm``.

Exit codes: 0 when every required check passes, 1 on a check failure or a
failed numerical stage, 2 on input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io
from .errors import InputError, NumericalError, SSMError, StageError
from .model import find_steady_state, validate_channel, steady_residual, support_invariance_residual, support_of
from .pipeline import AnalysisRequest, builtin_example, run_analysis
from .report import VerificationReport
from .verify import check_cptp_unital, fixed_space_dimension, random_model

EXIT_OK, EXIT_CHECK, EXIT_INPUT = 0, 1, 2


def _kv(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def _parse_value(v):
    try:
        return json.loads(v)
    except json.JSONDecodeError:
        return v


def _blocks(text):
    out = []
    try:
        for part in text.split(","):
            n, d = part.lower().split("x")
            out.append((int(n), int(d)))
    except ValueError:
        raise argparse.ArgumentTypeError(f"blocks must look like 2x2,1x4; got {text!r}")
    return out


def _write(data: bytes, out):
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _read_request(path) -> AnalysisRequest:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read model file: {e}", None) from e
    return io.parse_model(text)


def _apply_overrides(req: AnalysisRequest, args) -> AnalysisRequest:
    if getattr(args, "seed", None) is not None:
        req.seed = args.seed
    for k, v in getattr(args, "tol", None) or []:
        try:
            req.tolerances[k] = float(v)
        except ValueError:
            raise InputError(f"tolerance {k!r} needs a number, got {v!r}", "--tol")
    req.__post_init__()
    return req


def _analyze_and_emit(req, args) -> int:
    digest = io.input_digest(req)
    report = run_analysis(req, digest)
    _write(io.emit_report(report, args.format, args.emit_basis), args.output)
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_analyze(args) -> int:
    req = _apply_overrides(_read_request(args.model), args)
    return _analyze_and_emit(req, args)


def cmd_example(args) -> int:
    params = {k: _parse_value(v) for k, v in args.param or []}
    req = builtin_example(args.n, **params)
    req = _apply_overrides(req, args)
    if args.model_only:
        _write(io.emit_model(req).encode(), args.output)
        return EXIT_OK
    return _analyze_and_emit(req, args)


def cmd_verify(args) -> int:
    req = _read_request(args.model)
    spec = req.channel
    tol = req.tol
    rep = VerificationReport()
    if spec.kind == "lindblad":
        rep.extend(validate_channel(spec, tol))
    else:
        rep.extend(check_cptp_unital(spec, tol))
    rho0 = req.steady_state or find_steady_state(spec, tol)
    rep.add("rho0_steady", steady_residual(spec, rho0.matrix), tol.steady)
    support = support_of(rho0, tol.support, tol)
    inv = support_invariance_residual(spec, support)
    rep.add("support_invariant", inv, tol.invariance)
    lines = [f"support rank: {support.rank}"]
    if inv <= tol.invariance:
        fixed = fixed_space_dimension(spec, support, tol)
        lines.append(f"fixed space dimension on support: {fixed.dim}")
    for c in rep.checks:
        flag = "PASS" if c.passed else ("FAIL" if c.required else "info")
        lines.append(f"  {flag:4s} {c.name:24s} residual={c.residual:.3e} tol={c.tolerance:.1e}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_random_model(args) -> int:
    mdl = random_model(
        args.seed, args.blocks, num_kraus=args.num_kraus,
        embed_dim=args.embed_dim, unital=not args.non_unital,
    )
    req = AnalysisRequest(mdl.spec, mdl.rho0, {}, args.seed)
    _write(io.emit_model(req).encode(), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssm", description="Steady-state manifolds of open quantum systems.")
    sub = p.add_subparsers(dest="command", required=True)

    def report_opts(sp):
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--tol", type=_kv, action="append", metavar="NAME=VALUE")
        sp.add_argument("--emit-basis", action="store_true", help="include the SSM operator basis")
        sp.add_argument("-o", "--output")
        sp.add_argument("--format", choices=("json", "text"), default="json")

    a = sub.add_parser("analyze", help="analyze a model file")
    a.add_argument("model")
    report_opts(a)
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("example", help="analyze a built-in reference model")
    e.add_argument("n", type=int, choices=(1, 2, 3))
    e.add_argument("--param", type=_kv, action="append", metavar="K=V")
    e.add_argument("--model-only", action="store_true", help="write the model file instead of a report")
    report_opts(e)
    e.set_defaults(func=cmd_example)

    v = sub.add_parser("verify", help="run the input checks only")
    v.add_argument("model")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("random-model", help="write a random model with prescribed blocks")
    r.add_argument("--blocks", type=_blocks, required=True, help="e.g. 2x2,1x4 (n x d)")
    r.add_argument("--embed-dim", type=int, default=None)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--num-kraus", type=int, default=3)
    r.add_argument("--non-unital", action="store_true")
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_random_model)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageError as e:
        print(f"ssm: {e}", file=sys.stderr)
        return EXIT_INPUT if isinstance(e.cause, InputError) else EXIT_CHECK
    except InputError as e:
        print(f"ssm: input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, SSMError) as e:
        print(f"ssm: {e}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
