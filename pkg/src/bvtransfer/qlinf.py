"""Multilinear operations with a genus grading, their packaging into an
action series, and the identity that characterizes consistent families.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .bv import Action, BVContext, qme_residual
from .errors import PreconditionError, StructuralError
from .graded import GradedBasis, OddSymplecticForm
from .report import ValidationReport
from .series import FormalSeries, as_window

Q0 = Fraction(0)
Q1 = Fraction(1)

# tensor storage: (genus, arity) -> {(ascending input indices, output index): coefficient}
TensorDict = dict[tuple[int, int], dict[tuple[tuple[int, ...], int], Fraction]]


def koszul_sign(perm, parities) -> int:
    """Sign of rearranging graded items: one minus per crossing of two odd ones."""
    sign = 1
    for a in range(len(perm)):
        for b in range(a + 1, len(perm)):
            if perm[a] > perm[b] and parities[perm[a]] and parities[perm[b]]:
                sign = -sign
    return sign


def sort_with_sign(indices, parities) -> tuple[int, tuple[int, ...] | None]:
    """Ascending rearrangement of basis indices with its Koszul sign."""
    seq = list(indices)
    sign = 1
    for a in range(1, len(seq)):
        b = a
        while b > 0 and seq[b - 1] > seq[b]:
            if parities[seq[b - 1]] and parities[seq[b]]:
                sign = -sign
            seq[b - 1], seq[b] = seq[b], seq[b - 1]
            b -= 1
    for a in range(1, len(seq)):
        if seq[a - 1] == seq[a] and parities[seq[a]]:
            return 0, None
    return sign, tuple(seq)


def unshuffles(k: int, l: int):
    """Partitions of range(k+l) into two ascending blocks of sizes k and l."""
    universe = range(k + l)
    for first in itertools.combinations(universe, k):
        second = tuple(x for x in universe if x not in first)
        yield first + second


@dataclass
class LambdaOps:
    """Graded-symmetric degree-1 operations indexed by genus and arity.

    Arity zero is excluded; the arity-one genus-zero operation plays the
    role of the differential.  Stored coefficients are on ascending input
    tuples; evaluation on any order sorts with the Koszul sign.
    """

    basis: GradedBasis
    omega: OddSymplecticForm
    tensors: TensorDict = field(default_factory=dict)

    def __post_init__(self):
        par = [self.basis.parity(i) for i in range(self.basis.dim)]
        for (g, n), entries in self.tensors.items():
            if n < 1 or g < 0:
                raise PreconditionError(f"operations need arity >= 1 and genus >= 0, got {(g, n)}")
            for (inputs, out), v in entries.items():
                if len(inputs) != n:
                    raise StructuralError(f"entry arity mismatch in tensor {(g, n)}")
                if list(inputs) != sorted(inputs):
                    raise StructuralError("tensor inputs must be stored ascending")
                if any(
                    inputs[a] == inputs[a + 1] and par[inputs[a]] for a in range(len(inputs) - 1)
                ):
                    raise StructuralError("repeated odd input stored in tensor")
                if v == 0:
                    raise StructuralError("zero entries must not be stored")
                want = sum(self.basis.degree(i) for i in inputs) + 1
                if self.basis.degree(out) != want:
                    raise StructuralError(
                        f"tensor {(g, n)} entry {(inputs, out)} violates degree 1"
                    )
        self._parities = par

    def evaluate(self, g: int, n: int, inputs) -> dict[int, Fraction]:
        """Value on basis vectors in any order, as a sparse output vector."""
        entries = self.tensors.get((g, n))
        if not entries or len(inputs) != n:
            return {}
        sign, key = sort_with_sign(tuple(inputs), self._parities)
        if sign == 0:
            return {}
        out: dict[int, Fraction] = {}
        for (ins, j), v in entries.items():
            if ins == key:
                out[j] = out.get(j, Q0) + sign * v
        return {j: v for j, v in out.items() if v != 0}

    def pair_with(self, v0: int, g: int, n: int, inputs) -> Fraction:
        """Cyclic pairing: sign of the front slot times the form against the value."""
        vec = self.evaluate(g, n, inputs)
        total = Q0
        for l, v in vec.items():
            total += self.omega.value(v0, l) * v
        sign = -1 if self.basis.parity(v0) else 1
        return sign * total

    def check_cyclic(self) -> ValidationReport:
        """Front-slot symmetry of the induced pairing, tensor by tensor."""
        report = ValidationReport()
        par = self._parities
        bad = None
        for (g, n) in sorted(self.tensors):
            for tup in itertools.combinations_with_replacement(range(self.basis.dim), n + 1):
                a, b, rest = tup[0], tup[1], tup[2:]
                lhs = self.pair_with(a, g, n, (b,) + rest)
                swap = (-1) ** (par[a] * par[b])
                rhs = swap * self.pair_with(b, g, n, (a,) + rest)
                if lhs != rhs:
                    bad = (g, n, tup)
                    break
            if bad:
                break
        report.add("cyclicity", bad is None, f"violated at {bad}" if bad else "")
        return report


def lambda_to_action(ops: LambdaOps, omega: OddSymplecticForm, window) -> Action:
    """Package the operations into an action series with factorial weights."""
    window = as_window(window)
    basis = ops.basis
    par = [basis.parity(i) for i in range(basis.dim)]
    triples = []
    for (g, n) in sorted(ops.tensors):
        if 2 * g + n + 1 > window.max_weight:
            continue
        for tup in itertools.combinations_with_replacement(range(basis.dim), n + 1):
            if any(tup[a] == tup[a + 1] and par[tup[a]] for a in range(len(tup) - 1)):
                continue
            s_val = ops.pair_with(tup[0], g, n, tup[1:])
            if s_val == 0:
                continue
            norm = 1
            for _, group in itertools.groupby(tup):
                norm *= math.factorial(sum(1 for _ in group))
            triples.append((g, tup, s_val / norm))
    total = FormalSeries.from_terms(basis, window.max_weight, triples)
    return Action.from_total(total)


def action_to_lambda(action: Action, omega: OddSymplecticForm, window) -> LambdaOps:
    """Recover the operations by iterated left derivatives and the inverse form."""
    window = as_window(window)
    basis = action.basis
    par = [basis.parity(i) for i in range(basis.dim)]
    total = action.total()
    if not omega.nondegenerate:
        raise PreconditionError("recovering operations needs an invertible form")

    by_gn: dict[tuple[int, int], dict[tuple[int, ...], Fraction]] = {}
    for (g, mono), _ in total.terms.items():
        by_gn.setdefault((g, len(mono)), {})

    s_values: dict[tuple[int, int], dict[tuple[int, ...], Fraction]] = {}
    for (g, n) in by_gn:
        vals: dict[tuple[int, ...], Fraction] = {}
        for tup in itertools.combinations_with_replacement(range(basis.dim), n):
            if any(tup[a] == tup[a + 1] and par[tup[a]] for a in range(len(tup) - 1)):
                continue
            d = total
            for idx in tup:
                d = d.derive_left(idx)
                if d.is_zero():
                    break
            val = d.terms.get((g, ()), Q0)
            if val != 0:
                vals[tup] = val
        if vals:
            s_values[(g, n)] = vals

    def s_eval(g, n, indices) -> Fraction:
        vals = s_values.get((g, n))
        if not vals:
            return Q0
        sign, key = sort_with_sign(tuple(indices), par)
        if sign == 0:
            return Q0
        return sign * vals.get(key, Q0)

    tensors: TensorDict = {}
    inv = omega.inverse_entries
    for (g, n), _ in sorted(s_values.items()):
        if n < 2:
            # arity-zero operations are excluded; constant terms carry no operation
            continue
        entries: dict[tuple[tuple[int, ...], int], Fraction] = {}
        for tup in itertools.combinations_with_replacement(range(basis.dim), n - 1):
            if any(tup[a] == tup[a + 1] and par[tup[a]] for a in range(len(tup) - 1)):
                continue
            for (l, i), w in inv.items():
                sign = -1 if par[i] else 1
                val = w * sign * s_eval(g, n, (i,) + tup)
                if val != 0:
                    key = (tup, l)
                    entries[key] = entries.get(key, Q0) + val
        entries = {k: v for k, v in entries.items() if v != 0}
        if entries:
            tensors[(g, n - 1)] = entries
    return LambdaOps(basis, omega, tensors)


def main_identity_residual(
    ops: LambdaOps, omega: OddSymplecticForm, g: int, n: int, inputs
) -> dict[int, Fraction]:
    """Residual vector of the genus-graded Jacobi-type identity at (g, n)."""
    inputs = tuple(inputs)
    if len(inputs) != n:
        raise StructuralError("wrong number of inputs")
    par = [ops.basis.parity(i) for i in range(ops.basis.dim)]
    in_par = [par[i] for i in inputs]
    out: dict[int, Fraction] = {}

    def accumulate(vec: dict[int, Fraction], c: Fraction):
        for j, v in vec.items():
            out[j] = out.get(j, Q0) + c * v

    for g1 in range(g + 1):
        g2 = g - g1
        for k in range(n + 1):
            l = n - k
            if (g2, l) not in ops.tensors or (g1, k + 1) not in ops.tensors:
                continue
            for sigma in unshuffles(k, l):
                eps = koszul_sign(sigma, {p: in_par[p] for p in range(n)})
                moved = sum(in_par[p] for p in sigma[:k])
                eps_tilde = eps * (-1 if moved % 2 else 1)
                inner = ops.evaluate(g2, l, tuple(inputs[p] for p in sigma[k:]))
                first = tuple(inputs[p] for p in sigma[:k])
                for j, cj in inner.items():
                    vec = ops.evaluate(g1, k + 1, first + (j,))
                    if vec:
                        accumulate(vec, eps_tilde * cj)

    if g >= 1 and (g - 1, n + 2) in ops.tensors:
        for (r, s), w in omega.inverse_entries.items():
            vec = ops.evaluate(g - 1, n + 2, (s, r) + inputs)
            if vec:
                sign = -1 if par[s] else 1
                accumulate(vec, Fraction(1, 2) * sign * w)

    return {j: v for j, v in out.items() if v != 0}


def evaluate_symmetric(series: FormalSeries, genus: int, vectors) -> Fraction:
    """Value of the genus part on basis vectors through the symmetrization pairing.

    Averages over all matchings of the monomial against the vectors, with
    the Koszul sign of rearranging the vectors.
    """
    vectors = tuple(vectors)
    m = len(vectors)
    par = [series.basis.parity(i) for i in range(series.basis.dim)]
    vec_par = [par[v] for v in vectors]
    total = Q0
    for (g, mono), c in series.terms.items():
        if g != genus or len(mono) != m:
            continue
        if sorted(mono) != sorted(vectors):
            continue
        acc = Q0
        for sigma in itertools.permutations(range(m)):
            if any(mono[k] != vectors[sigma[k]] for k in range(m)):
                continue
            eps = koszul_sign(sigma, {p: vec_par[p] for p in range(m)})
            acc += eps
        total += c * acc / math.factorial(m)
    return total


def equivalence_check(ops: LambdaOps, omega: OddSymplecticForm, window) -> ValidationReport:
    """Per-(genus, arity) comparison of the identity residuals with the
    master-equation coefficients, including the exact pairing between them."""
    window = as_window(window)
    basis = ops.basis
    par = [basis.parity(i) for i in range(basis.dim)]
    ctx = BVContext(basis, omega, window)
    action = lambda_to_action(ops, omega, window)
    residual = qme_residual(ctx, action)
    report = ValidationReport()

    pairs = []
    g = 0
    while 2 * g + 1 <= window.max_weight:
        n = 0
        while 2 * g + n + 1 <= window.max_weight:
            pairs.append((g, n))
            n += 1
        g += 1

    for g, n in pairs:
        mi_results = {}
        for tup in itertools.combinations_with_replacement(range(basis.dim), n):
            if any(tup[a] == tup[a + 1] and par[tup[a]] for a in range(len(tup) - 1)):
                continue
            mi_results[tup] = main_identity_residual(ops, omega, g, n, tup)
        mi_zero = all(not v for v in mi_results.values())
        qme_zero = not any(
            gg == g and len(mono) == n + 1 for (gg, mono) in residual.terms
        )
        report.add(
            f"matched-{g}-{n}",
            mi_zero == qme_zero,
            f"identity residual zero: {mi_zero}, master-equation coefficient zero: {qme_zero}",
        )

        norm = Fraction(-1, math.factorial(n + 1))
        bad = None
        for tup, vec in mi_results.items():
            for v0 in range(basis.dim):
                rhs = norm * sum(
                    (omega.value(v0, l) * v for l, v in vec.items()), Q0
                )
                lhs = evaluate_symmetric(residual, g, (v0,) + tup)
                if lhs != rhs:
                    bad = (v0, tup, lhs, rhs)
                    break
            if bad:
                break
        report.add(
            f"pairing-{g}-{n}", bad is None, f"mismatch at {bad}" if bad else ""
        )
    return report
