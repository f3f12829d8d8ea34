"""Command-line front end.

Subcommands: theta, certify, uniqueness, selftest, scenario, export.

Exit codes are a stable contract: 0 success, 1 input error, 2 solver or
certification failure, 3 self-test rejection.  Human-readable output prints
six significant digits; JSON output carries full double precision and is
emitted in canonical form (sorted keys, no whitespace) so repeated runs are
byte-identical.  The only environment variable honored is
THETA_SELFTEST_TOL, the default acceptance tolerance of `selftest`.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from .graphs import (
    WeightedGraph,
    fractional_packing,
    from_json_dict as graph_from_json_dict,
    independence_number,
    to_dot,
    to_json_dict as graph_to_json_dict,
)
from .scenarios import (
    builtin_witness,
    evaluate_witness,
    exclusivity_graph,
    parse_scenario_name,
    realization_from_json_dict,
    realization_to_json_dict,
    reference_realization,
    witness_to_json_dict,
)
from .sdp import SolverError, min_eigenvalue
from .selftest import (
    NotOptimizerError,
    PreconditionError,
    SelfTestError,
    run_selftest,
    selftest_report_to_json_dict,
    verify_selftest_claim,
)
from .graphs import circulant
from .theta import (
    MalformedCertificateError,
    NotPsdError,
    certificate_from_multipliers,
    certificate_to_json_dict,
    chained_dual_certificate,
    chsh_dual_certificate,
    dual_nondegenerate,
    lovasz_theta,
    solve_theta_problem,
    verify_dual_certificate,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVER = 2
EXIT_REJECT = 3


@dataclass(frozen=True)
class RunConfig:
    solver_tol: float = 1e-9
    null_threshold: float = 1e-8
    selftest_tol: float = 1e-7
    as_json: bool = False

    def __post_init__(self):
        for name in ("solver_tol", "null_threshold", "selftest_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def _emit_json(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _load_graph(path: str) -> WeightedGraph:
    with open(path, encoding="utf-8") as fh:
        return graph_from_json_dict(json.load(fh))


def _input_graph(args) -> WeightedGraph:
    if getattr(args, "scenario", None) and getattr(args, "graph", None):
        raise ValueError("give either --scenario or --graph, not both")
    if getattr(args, "scenario", None):
        return exclusivity_graph(builtin_witness(args.scenario))
    if getattr(args, "graph", None):
        return _load_graph(args.graph)
    raise ValueError("one of --scenario or --graph is required")


def _config(args) -> RunConfig:
    env_tol = os.environ.get("THETA_SELFTEST_TOL")
    selftest_tol = (
        args.tol
        if getattr(args, "tol", None) is not None
        else (float(env_tol) if env_tol is not None else 1e-7)
    )
    return RunConfig(
        solver_tol=getattr(args, "solver_tol", 1e-9),
        null_threshold=getattr(args, "threshold", 1e-8),
        selftest_tol=selftest_tol,
        as_json=getattr(args, "json", False),
    )


def cmd_theta(args) -> int:
    cfg = _config(args)
    g = _input_graph(args)
    alpha, _ = independence_number(g)
    theta, _ = lovasz_theta(g, tol=cfg.solver_tol)
    alpha_star = fractional_packing(g)
    sandwich_ok = alpha <= theta + 1e-6 and theta <= alpha_star + 1e-6
    if cfg.as_json:
        _emit_json(
            {
                "alpha": alpha,
                "theta": theta,
                "alpha_star": alpha_star,
                "sandwich_ok": sandwich_ok,
            }
        )
    else:
        print(f"independence number alpha = {_fmt(alpha)}")
        print(f"weighted theta            = {_fmt(theta)}")
        print(f"fractional packing alpha* = {_fmt(alpha_star)}")
        print(
            "sandwich alpha <= theta <= alpha*: "
            + ("OK" if sandwich_ok else "VIOLATED")
        )
    return EXIT_OK if sandwich_ok else EXIT_SOLVER


def _closed_form_certificate(scenario: str):
    """Certificate plus the canonically labeled graph it is written for.

    The chained witness's exclusivity graph is isomorphic to the circulant
    graph but lists vertices in event order; the closed-form certificate uses
    the circulant labeling, so certification runs on that labeling.
    """
    kind, n = parse_scenario_name(scenario)
    if kind == "chsh":
        return chsh_dual_certificate(), circulant(8, (1, 4))
    if kind == "chained":
        return chained_dual_certificate(n), circulant(4 * n, (1, 2 * n))
    raise ValueError(f"no closed-form certificate for scenario '{scenario}'")


def cmd_certify(args) -> int:
    cfg = _config(args)
    cert, g = _closed_form_certificate(args.scenario)
    try:
        verify_dual_certificate(g, cert)
        verified = True
    except (MalformedCertificateError, NotPsdError):
        verified = False
    eig = min_eigenvalue(cert.matrix)
    if cfg.as_json:
        _emit_json(
            {
                "bound": cert.t,
                "min_eigenvalue": eig,
                "verified": verified,
                "certificate": certificate_to_json_dict(cert),
            }
        )
    else:
        print(f"certified bound  = {_fmt(cert.t)}")
        print(f"min eigenvalue   = {_fmt(eig)}")
        print("verification     : " + ("PASS" if verified else "FAIL"))
    return EXIT_OK if verified else EXIT_SOLVER


def cmd_uniqueness(args) -> int:
    cfg = _config(args)
    scenario = getattr(args, "scenario", None)
    kind = parse_scenario_name(scenario)[0] if scenario else None
    if kind in ("chsh", "chained"):
        cert, g = _closed_form_certificate(scenario)
        z = cert.matrix
    else:
        g = _input_graph(args)
        sol = solve_theta_problem(g, tol=cfg.solver_tol)
        z = certificate_from_multipliers(g, sol.dual_multipliers).matrix
    verdict = dual_nondegenerate(g, z, threshold=cfg.null_threshold)
    if cfg.as_json:
        _emit_json(
            {
                "nondegenerate": verdict.nondegenerate,
                "nullspace_dim": verdict.nullspace_dim,
                "residual": verdict.residual,
            }
        )
    else:
        print(
            "dual nondegeneracy: "
            + ("NONDEGENERATE" if verdict.nondegenerate else "DEGENERATE")
        )
        print(f"null-space dimension = {verdict.nullspace_dim}")
        print(f"smallest/largest singular value = {_fmt(verdict.residual)}")
    return EXIT_OK if verdict.nondegenerate else EXIT_SOLVER


def cmd_selftest(args) -> int:
    cfg = _config(args)
    witness = builtin_witness(args.scenario)
    ref = reference_realization(args.scenario)
    if args.candidate:
        with open(args.candidate, encoding="utf-8") as fh:
            cand = realization_from_json_dict(json.load(fh))
    else:
        cand = ref
    report = run_selftest(witness, ref, cand, tol=cfg.selftest_tol)
    verified = verify_selftest_claim(ref, cand, report, cfg.selftest_tol)
    if cfg.as_json:
        payload = selftest_report_to_json_dict(report)
        payload["verified"] = verified
        _emit_json(payload)
    else:
        print(f"conditions: {report.conditions.verdicts}")
        print(f"junk dimensions = {report.junk_dims}")
        print(f"state residual  = {_fmt(report.state_residual)}")
        print(f"max vector residual = {_fmt(float(report.vector_residuals.max()))}")
        print("self-test: " + ("ACCEPT" if verified else "REJECT"))
    return EXIT_OK if verified else EXIT_REJECT


def cmd_scenario(args) -> int:
    witness = builtin_witness(args.scenario)
    ref = reference_realization(args.scenario)
    value, _ = evaluate_witness(witness, ref)
    _emit_json(
        {
            "witness": witness_to_json_dict(witness),
            "realization": realization_to_json_dict(ref),
            "witness_value": value,
        }
    )
    return EXIT_OK


def _export_payload(scenario: str, fmt: str) -> str:
    witness = builtin_witness(scenario)
    g = exclusivity_graph(witness)
    if fmt == "dot":
        return to_dot(g)
    payload = {
        "graph": graph_to_json_dict(g),
        "witness": witness_to_json_dict(witness),
    }
    kind, n = parse_scenario_name(scenario)
    if kind == "chsh":
        payload["certificate"] = certificate_to_json_dict(chsh_dual_certificate())
    elif kind == "chained":
        payload["certificate"] = certificate_to_json_dict(chained_dual_certificate(n))
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def cmd_export(args) -> int:
    text = _export_payload(args.scenario, args.format)
    if args.path:
        with open(args.path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="theta-selftest",
        description=(
            "Weighted Lovasz theta, dual certificates, uniqueness, and "
            "constructive self-testing for exclusivity-graph witnesses."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, scenario_required=True, graph_input=False):
        if graph_input:
            p.add_argument("--scenario", help="built-in scenario name")
            p.add_argument("--graph", help="path to a graph JSON file")
        else:
            p.add_argument(
                "--scenario",
                required=scenario_required,
                help="built-in scenario name (chsh, chained:N, mermin, as4)",
            )
        p.add_argument("--json", action="store_true", help="emit canonical JSON")

    p = sub.add_parser("theta", help="independence number, theta, fractional packing")
    add_common(p, graph_input=True)
    p.add_argument("--solver-tol", type=float, default=1e-9, dest="solver_tol")
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("certify", help="verify a closed-form dual certificate")
    add_common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("uniqueness", help="dual nondegeneracy of the optimizer")
    add_common(p, graph_input=True)
    p.add_argument("--solver-tol", type=float, default=1e-9, dest="solver_tol")
    p.add_argument("--threshold", type=float, default=1e-8)
    p.set_defaults(func=cmd_uniqueness)

    p = sub.add_parser("selftest", help="run the extraction pipeline on a candidate")
    add_common(p)
    p.add_argument("--candidate", help="path to a candidate realization JSON file")
    p.add_argument("--tol", type=float, default=None, help="acceptance tolerance")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("scenario", help="emit witness and reference realization JSON")
    add_common(p)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("export", help="write graph/witness/certificate artifacts")
    add_common(p)
    p.add_argument("--format", required=True, choices=("json", "dot"))
    p.add_argument("--path", help="output file (stdout when omitted)")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; map to the input-error code
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except PreconditionError as exc:
        print(f"self-test rejected (failed precondition): {exc}", file=sys.stderr)
        return EXIT_REJECT
    except NotOptimizerError as exc:
        print(f"self-test rejected: {exc}", file=sys.stderr)
        return EXIT_REJECT
    except SelfTestError as exc:
        print(f"self-test rejected: {exc}", file=sys.stderr)
        return EXIT_REJECT
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
