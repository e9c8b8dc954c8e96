"""Command-line driver: validate problems, run the transfer, emit the witness.

Exit codes: 0 all checks pass, 1 a verification check failed, 2 the input
could not be parsed or violates a precondition.
"""

from __future__ import annotations

import argparse
import random
import sys

from .bv import (
    BVContext,
    delta_bracket_check,
    laplacian,
    qme_residual,
    seven_term_check,
)
from .errors import DivergenceError, PreconditionError, StructuralError
from .graded import hodge_decompose, validate_dg_symplectic
from .qlinf import equivalence_check
from .schema import (
    Problem,
    ProblemFormatError,
    parse_problem,
    report_json,
    series_terms_json,
)
from .series import FormalSeries
from .transfer import (
    effective_action_alt,
    effective_action_feynman,
    effective_action_hpl,
    homotopy_witness,
)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT = 2


def _read_problem(args) -> Problem:
    if args.problem == "-":
        text = sys.stdin.read()
    else:
        with open(args.problem, "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_problem(text, max_weight_override=args.max_weight)


def _emit(args, doc: dict) -> None:
    payload = report_json(doc)
    if args.report and args.report != "-":
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def _random_monomials(rng: random.Random, basis, max_len: int, count: int):
    out = []
    for _ in range(count):
        n = rng.randint(1, max_len)
        mono = tuple(sorted(rng.randrange(basis.dim) for _ in range(n)))
        out.append(mono)
    return out


def _self_test_rows(problem: Problem, seed: int, max_len: int) -> list[dict]:
    """Seeded spot-check of the algebraic identities on random monomials."""
    ctx = BVContext(problem.basis, problem.omega, max(3, problem.max_weight))
    rng = random.Random(seed)
    rows = []
    sq_bad = None
    for mono in _random_monomials(rng, problem.basis, max_len, 12):
        f = FormalSeries.from_terms(problem.basis, ctx.max_weight, [(0, mono, 1)])
        if f.is_zero():
            continue
        if not laplacian(ctx, laplacian(ctx, f)).is_zero():
            sq_bad = mono
            break
    rows.append(
        {"check": "laplacian-squared", "status": "fail" if sq_bad else "pass",
         **({"detail": f"monomial {sq_bad}"} if sq_bad else {})}
    )
    id_bad = None
    for _ in range(6):
        monos = _random_monomials(rng, problem.basis, max(1, max_len - 1), 3)
        fgh = [FormalSeries.from_terms(problem.basis, ctx.max_weight, [(0, m, 1)]) for m in monos]
        if any(s.is_zero() for s in fgh):
            continue
        if not seven_term_check(ctx, *fgh).is_zero():
            id_bad = ("seven-term", monos)
            break
        if not delta_bracket_check(ctx, fgh[0], fgh[1]).is_zero():
            id_bad = ("laplacian-bracket", monos[:2])
            break
    rows.append(
        {"check": "identity-spot-checks", "status": "fail" if id_bad else "pass",
         **({"detail": str(id_bad)} if id_bad else {})}
    )
    return rows


def cmd_check(args) -> int:
    problem = _read_problem(args)
    report = validate_dg_symplectic(problem.basis, problem.q, problem.omega)
    rows = report.as_dicts()
    ok = report.passed
    if ok:
        ctx = BVContext(problem.basis, problem.omega, problem.max_weight)
        residual = qme_residual(ctx, problem.action)
        row = {"check": "master-equation", "status": "pass" if residual.is_zero() else "fail"}
        if not residual.is_zero():
            row["residual"] = series_terms_json(residual)
        rows.append(row)
        ok = ok and residual.is_zero()
        if problem.lambda_ops is not None:
            eq = equivalence_check(problem.lambda_ops, problem.omega, problem.max_weight)
            rows.extend(eq.as_dicts())
            ok = ok and eq.passed
        rows.extend(_self_test_rows(problem, args.seed, args.exhaustive_len))
        ok = ok and all(r["status"] == "pass" for r in rows)
    doc = {
        "command": "check",
        "max_weight": problem.max_weight,
        "checks": rows,
        "status": "pass" if ok else "fail",
    }
    _emit(args, doc)
    return EXIT_PASS if ok else EXIT_FAIL


def _hodge_json(split) -> dict:
    out = {}
    for part, idxs in (("h", split.h_indices), ("b", split.b_indices), ("c", split.c_indices)):
        rows = []
        for a in idxs:
            coords = {
                split.original.name(i): str(v)
                for (i, aa), v in sorted(split.from_adapted.entries.items())
                if aa == a
            }
            rows.append(
                {
                    "name": split.adapted_basis.name(a),
                    "degree": split.adapted_basis.degree(a),
                    "vector": coords,
                }
            )
        out[part] = rows
    return out


def cmd_transfer(args) -> int:
    problem = _read_problem(args)
    valid = validate_dg_symplectic(problem.basis, problem.q, problem.omega)
    if not valid.passed:
        _emit(args, {
            "command": "transfer",
            "max_weight": problem.max_weight,
            "checks": valid.as_dicts(),
            "status": "fail",
        })
        return EXIT_FAIL
    split = hodge_decompose(problem.basis, problem.q, problem.omega)
    ctx = BVContext(problem.basis, problem.omega, problem.max_weight)
    residual = qme_residual(ctx, problem.action)
    if not residual.is_zero():
        _emit(args, {
            "command": "transfer",
            "max_weight": problem.max_weight,
            "checks": [
                {
                    "check": "master-equation",
                    "status": "fail",
                    "residual": series_terms_json(residual),
                }
            ],
            "status": "fail",
        })
        return EXIT_FAIL

    routes = ["hpl", "feynman", "alt"] if args.route == "all" else [args.route]
    runner = {
        "hpl": effective_action_hpl,
        "feynman": effective_action_feynman,
        "alt": effective_action_alt,
    }
    results = {r: runner[r](problem.action, split, problem.max_weight) for r in routes}
    primary = results.get("hpl") or results[routes[0]]
    rows = [
        {"check": f"{name}-{c.name}", "status": "pass" if c.passed else "fail",
         **({"detail": c.detail} if c.detail else {})}
        for name, res in sorted(results.items())
        for c in res.verification.checks
    ]
    if args.route == "all":
        delta_hf = results["hpl"].w - results["feynman"].w
        rows.append({
            "check": "route-delta-hpl-feynman",
            "status": "pass" if delta_hf.is_zero() else "fail",
            **({"residual": series_terms_json(delta_hf)} if not delta_hf.is_zero() else {}),
        })
        delta_ha = results["hpl"].w.without_constants() - results["alt"].w
        rows.append({
            "check": "route-delta-hpl-alt",
            "status": "pass" if delta_ha.is_zero() else "fail",
            **({"residual": series_terms_json(delta_ha)} if not delta_ha.is_zero() else {}),
        })
    ok = all(r["status"] == "pass" for r in rows)
    doc = {
        "command": "transfer",
        "max_weight": problem.max_weight,
        "route": args.route,
        "hodge": _hodge_json(split),
        "checks": rows,
        "result": {
            "effective_action": series_terms_json(primary.interaction),
            "free_energy": series_terms_json(primary.free_energy),
        },
        "status": "pass" if ok else "fail",
    }
    _emit(args, doc)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_homotopy(args) -> int:
    problem = _read_problem(args)
    valid = validate_dg_symplectic(problem.basis, problem.q, problem.omega)
    if not valid.passed:
        _emit(args, {
            "command": "homotopy",
            "max_weight": problem.max_weight,
            "checks": valid.as_dicts(),
            "status": "fail",
        })
        return EXIT_FAIL
    split = hodge_decompose(problem.basis, problem.q, problem.omega)
    ctx = BVContext(problem.basis, problem.omega, problem.max_weight)
    residual = qme_residual(ctx, problem.action)
    if not residual.is_zero():
        _emit(args, {
            "command": "homotopy",
            "max_weight": problem.max_weight,
            "checks": [
                {
                    "check": "master-equation",
                    "status": "fail",
                    "residual": series_terms_json(residual),
                }
            ],
            "status": "fail",
        })
        return EXIT_FAIL
    witness = homotopy_witness(problem.action, split, problem.max_weight)
    rows = [
        {"check": "exactness-residual", "status": "pass" if witness.residual.is_zero() else "fail",
         **({"residual": series_terms_json(witness.residual)}
            if not witness.residual.is_zero() else {})},
        {"check": "projection-annihilates-witness",
         "status": "pass" if witness.p1_residual.is_zero() else "fail"},
        {"check": "homotopy-annihilates-witness",
         "status": "pass" if witness.k1_residual.is_zero() else "fail"},
    ]
    ok = all(r["status"] == "pass" for r in rows)
    doc = {
        "command": "homotopy",
        "max_weight": problem.max_weight,
        "checks": rows,
        "result": {"witness": series_terms_json(witness.f_witness)},
        "status": "pass" if ok else "fail",
    }
    _emit(args, doc)
    return EXIT_PASS if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bvtransfer",
        description="Effective actions on homology for finite-dimensional "
        "odd-symplectic complexes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("problem", help="problem file path, or - for stdin")
        p.add_argument("--max-weight", type=int, default=None,
                       help="override the truncation weight from the file")
        p.add_argument("--report", default=None, help="write the report here instead of stdout")

    p_check = sub.add_parser("check", help="validate the space and the action")
    common(p_check)
    p_check.add_argument("--seed", type=int, default=0, help="seed for the identity spot-checks")
    p_check.add_argument("--exhaustive-len", type=int, default=3,
                         help="monomial length bound for the spot-checks")
    p_check.set_defaults(func=cmd_check)

    p_transfer = sub.add_parser("transfer", help="compute the effective action")
    common(p_transfer)
    p_transfer.add_argument("--route", choices=["hpl", "feynman", "alt", "all"], default="all")
    p_transfer.set_defaults(func=cmd_transfer)

    p_hom = sub.add_parser("homotopy", help="compute the exactness witness")
    common(p_hom)
    p_hom.set_defaults(func=cmd_homotopy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ProblemFormatError, StructuralError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PreconditionError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
