"""Problem-file parsing and report serialization.

A problem is a single JSON document: basis, form entries, differential
entries, an action given either as series terms or as operation tensors,
and the truncation weight.  Coefficients are exact rational strings.
Reports are JSON with stable key order and sorted term lists, so equal
inputs give byte-identical output.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .bv import Action
from .errors import PreconditionError, StructuralError
from .graded import GradedBasis, GradedMap, OddSymplecticForm
from .qlinf import LambdaOps
from .series import FormalSeries


class ProblemFormatError(ValueError):
    """The problem document does not parse into valid data."""


def _fraction(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ProblemFormatError(f"bad rational {text!r}: {exc}") from None


def _require(doc: dict, key: str):
    if key not in doc:
        raise ProblemFormatError(f"missing field {key!r}")
    return doc[key]


class Problem:
    """Parsed problem: the space, the differential, the action, the window."""

    def __init__(self, basis, omega, q, action, max_weight, lambda_ops=None):
        self.basis = basis
        self.omega = omega
        self.q = q
        self.action = action
        self.max_weight = max_weight
        self.lambda_ops = lambda_ops  # set when the action came in tensor form


def free_part_from_q(
    basis: GradedBasis, q: GradedMap, omega: OddSymplecticForm, max_weight: int
) -> FormalSeries:
    """Quadratic action induced by the differential and the form."""
    triples = []
    for j in range(basis.dim):
        qj = q.column(j)
        for i in range(basis.dim):
            acc = Fraction(0)
            for k, v in qj.items():
                acc += omega.value(i, k) * v
            if acc != 0:
                sign = -1 if basis.parity(i) else 1
                triples.append((0, (i, j), Fraction(sign, 2) * acc))
    return FormalSeries.from_terms(basis, max_weight, triples)


def parse_problem(text: str, max_weight_override: int | None = None) -> Problem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"not valid JSON: line {exc.lineno} column {exc.colno}")
    if not isinstance(doc, dict):
        raise ProblemFormatError("problem document must be a JSON object")

    raw_basis = _require(doc, "basis")
    try:
        basis = GradedBasis.make((e["name"], e["degree"]) for e in raw_basis)
    except (KeyError, TypeError, StructuralError) as exc:
        raise ProblemFormatError(f"bad basis: {exc}")

    max_weight = int(doc.get("max_weight", 6))
    if max_weight_override is not None:
        max_weight = int(max_weight_override)
    if max_weight < 3:
        raise ProblemFormatError("max_weight must be at least 3")

    omega_entries: dict[tuple[int, int], Fraction] = {}
    for row in _require(doc, "omega"):
        try:
            i, j = basis.index(row["i"]), basis.index(row["j"])
        except (KeyError, StructuralError) as exc:
            raise ProblemFormatError(f"bad omega row {row!r}: {exc}")
        v = _fraction(row.get("coefficient", "1"))
        if v != 0:
            omega_entries[(i, j)] = omega_entries.get((i, j), Fraction(0)) + v
    # fill the graded-antisymmetric partner for pairs given in one orientation
    for (i, j), v in list(omega_entries.items()):
        if (j, i) not in omega_entries:
            sign = -((-1) ** (basis.parity(i) * basis.parity(j)))
            omega_entries[(j, i)] = sign * v
    omega = OddSymplecticForm(basis, {k: v for k, v in omega_entries.items() if v != 0})

    q_entries: dict[tuple[int, int], Fraction] = {}
    for row in doc.get("q_map", []):
        try:
            i, j = basis.index(row["from"]), basis.index(row["to"])
        except (KeyError, StructuralError) as exc:
            raise ProblemFormatError(f"bad q_map row {row!r}: {exc}")
        v = _fraction(row.get("coefficient", "1"))
        if v != 0:
            q_entries[(j, i)] = q_entries.get((j, i), Fraction(0)) + v
    try:
        q = GradedMap(basis, basis, {k: v for k, v in q_entries.items() if v != 0}, 1)
    except StructuralError as exc:
        raise ProblemFormatError(f"bad differential: {exc}")

    raw_action = doc.get("action", {})
    lambda_ops = None
    if "lambda" in raw_action:
        action, lambda_ops = _parse_lambda_action(raw_action["lambda"], basis, omega, q, max_weight)
    else:
        action = _parse_terms_action(
            raw_action.get("terms", []), basis, omega, q, max_weight
        )
    return Problem(basis, omega, q, action, max_weight, lambda_ops)


def _parse_terms_action(rows, basis, omega, q, max_weight) -> Action:
    triples = []
    for row in rows:
        try:
            idxs = tuple(basis.index(name) for name in row["variables"])
            triples.append((int(row.get("genus", 0)), idxs, _fraction(row["coefficient"])))
        except (KeyError, TypeError, StructuralError) as exc:
            raise ProblemFormatError(f"bad action term {row!r}: {exc}")
    total = FormalSeries.from_terms(basis, max_weight, triples)
    free_given = {k: v for k, v in total.terms.items() if k[0] == 0 and len(k[1]) == 2}
    expected = free_part_from_q(basis, q, omega, max_weight)
    if free_given:
        if free_given != expected.terms:
            raise ProblemFormatError(
                "quadratic genus-0 part of the action does not match the one "
                "induced by the differential and the form"
            )
        rest = {k: v for k, v in total.terms.items() if k not in free_given}
    else:
        rest = dict(total.terms)
    try:
        return Action(expected, FormalSeries(basis, max_weight, rest))
    except PreconditionError as exc:
        raise ProblemFormatError(f"invalid action: {exc}")


def _parse_lambda_action(rows, basis, omega, q, max_weight):
    tensors: dict[tuple[int, int], dict[tuple[tuple[int, ...], int], Fraction]] = {}
    from .qlinf import sort_with_sign

    parities = [basis.parity(i) for i in range(basis.dim)]
    for row in rows:
        try:
            g, n = int(row["g"]), int(row["n"])
            inputs = tuple(basis.index(name) for name in row["inputs"])
            out = basis.index(row["output"])
            coeff = _fraction(row["coefficient"])
        except (KeyError, TypeError, StructuralError) as exc:
            raise ProblemFormatError(f"bad lambda row {row!r}: {exc}")
        if len(inputs) != n:
            raise ProblemFormatError(f"lambda row {row!r} has {len(inputs)} inputs, expected {n}")
        sign, key = sort_with_sign(inputs, parities)
        if sign == 0 or coeff == 0:
            continue
        entry = tensors.setdefault((g, n), {})
        entry[(key, out)] = entry.get((key, out), Fraction(0)) + sign * coeff
    tensors = {
        gn: {k: v for k, v in entries.items() if v != 0}
        for gn, entries in tensors.items()
    }
    tensors = {gn: entries for gn, entries in tensors.items() if entries}

    q_tensor = {((i,), j): v for (j, i), v in q.entries.items()}
    given = tensors.get((0, 1))
    if given is not None:
        if given != q_tensor:
            raise ProblemFormatError(
                "the genus-0 arity-1 operation does not match the differential"
            )
    elif q_tensor:
        tensors[(0, 1)] = q_tensor

    try:
        ops = LambdaOps(basis, omega, tensors)
        cyc = ops.check_cyclic()
        if not cyc.passed:
            raise ProblemFormatError(f"operations are not cyclic: {cyc.failures()[0].detail}")
        from .qlinf import lambda_to_action

        action = lambda_to_action(ops, omega, max_weight)
    except (PreconditionError, StructuralError) as exc:
        raise ProblemFormatError(f"invalid operations: {exc}")
    return action, ops


# ---------------------------------------------------------------------------
# report serialization


def series_terms_json(series: FormalSeries, basis: GradedBasis | None = None) -> list[dict]:
    basis = basis or series.basis
    rows = []
    for (g, mono), c in series.sorted_terms():
        rows.append(
            {
                "genus": g,
                "variables": [basis.name(i) for i in mono],
                "coefficient": str(c),
            }
        )
    return rows


def report_json(report_dict: dict) -> str:
    return json.dumps(report_dict, indent=2) + "\n"
