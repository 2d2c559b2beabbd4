"""Command-line entry point: validate | solve | generate | verify.

Exit codes: 0 ok, 1 unreadable input, 2 assumption check failed,
3 singular Upsilon (nothing written), 4 certification failed.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import io as sio
from .errors import AssumptionViolated, SingularUpsilon, StochLQError
from .filtration import build_tree
from .game import certify, certify_controls, cost, simulate_feedback
from .instances import NAMED
from .model import Dims, generate_random, validate
from .riccati import solve_backward

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_SINGULAR, EXIT_CERT = 0, 1, 2, 3, 4


def _error(kind: str, message: str, **extra) -> None:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _options(args, options: dict) -> dict:
    opts = dict(options)
    for name in ("delta", "rcond_min", "tol", "seed"):
        val = getattr(args, name, None)
        if val is not None:
            opts[name] = val
    return opts


def cmd_validate(args) -> int:
    spec, options = sio.load_problem(args.input)
    opts = _options(args, options)
    report = validate(spec, opts["delta"])
    _emit(sio.dumps(report.as_dict()), args.output)
    return EXIT_OK if report.passed else EXIT_INVALID


def cmd_solve(args) -> int:
    spec, options = sio.load_problem(args.input)
    opts = _options(args, options)
    report = validate(spec, opts["delta"])
    if not report.passed:
        _error("AssumptionViolated", str(AssumptionViolated(report)), report=report.as_dict())
        return EXIT_INVALID
    try:
        sol = solve_backward(spec, opts["rcond_min"], delta=opts["delta"], check_assumptions=False)
    except SingularUpsilon as exc:
        _error("SingularUpsilon", str(exc), k=exc.k, node=exc.node, rcond=exc.rcond)
        return EXIT_SINGULAR
    traj = simulate_feedback(spec, sol)
    costs = {"J1": cost(spec, traj.controls, 1, traj.x), "J2": cost(spec, traj.controls, 2, traj.x)}
    cert = None
    if not args.no_certify:
        cert = certify(spec, sol, tol=opts["tol"], oracle_tol=opts["oracle_tol"], seed=opts["seed"], traj=traj)
    if args.format == "csv":
        _emit(sio.result_csv(spec, sol, traj), args.output)
    else:
        _emit(sio.dumps(sio.result_document(spec, sol, traj, costs, cert)), args.output)
    if cert is not None and not cert.verdict:
        _error("CertificationFailed", "certification failed", failing=cert.failing())
        return EXIT_CERT
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.instance:
        spec = NAMED[args.instance]()
        _emit(sio.dumps(sio.problem_document(spec, {"preset": "rademacher"})), args.output)
        return EXIT_OK
    dims = Dims(args.n, args.m, args.l, args.N)
    tree = build_tree(args.N, args.preset)
    spec = generate_random(dims, tree, args.seed, args.magnitude)
    doc = sio.problem_document(spec, {"preset": args.preset}, {"delta": 1.0})
    _emit(sio.dumps(doc), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    spec, options = sio.load_problem(args.input)
    opts = _options(args, options)
    with open(args.controls) as fh:
        try:
            cdoc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise sio.InvalidSpec(f"{args.controls}: invalid JSON ({exc})") from None
    controls = sio.parse_controls(spec, cdoc)
    report = validate(spec, opts["delta"])
    if not report.passed:
        _error("AssumptionViolated", str(AssumptionViolated(report)), report=report.as_dict())
        return EXIT_INVALID
    cert = certify_controls(spec, controls, tol=opts["tol"], oracle_tol=opts["oracle_tol"], seed=opts["seed"])
    _emit(sio.dumps(cert.as_dict()), args.output)
    return EXIT_OK if cert.verdict else EXIT_CERT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochlq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", "-i", required=True, help="problem JSON file")
        p.add_argument("--output", "-o", help="write here instead of standard output")

    def numeric(p):
        p.add_argument("--delta", type=float, help="convexity margin for the assumption checks")
        p.add_argument("--tol", type=float, help="residual tolerance for certification")
        p.add_argument("--seed", type=int, help="seed for sampled derivative directions")

    p = sub.add_parser("validate", help="check the standing assumptions")
    common(p)
    p.add_argument("--delta", type=float)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="solve, simulate the feedback equilibrium and certify it")
    common(p)
    numeric(p)
    p.add_argument("--rcond-min", dest="rcond_min", type=float)
    p.add_argument("--no-certify", action="store_true")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("generate", help="write a random problem that satisfies the assumptions")
    common(p, needs_input=False)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--preset", default="rademacher")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--magnitude", type=float, default=1.0)
    p.add_argument("--instance", choices=sorted(NAMED), help="write a named small game instead")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="certify an externally supplied control pair")
    common(p)
    numeric(p)
    p.add_argument("--controls", "-c", required=True, help="controls JSON or a solve result")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (StochLQError, ValueError) as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_PARSE
    except OSError as exc:
        _error("IOError", str(exc))
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
