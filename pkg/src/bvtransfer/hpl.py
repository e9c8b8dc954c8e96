"""Deformation retracts on function spaces and their perturbations.

The unperturbed retract contracts the function space of the adapted basis
onto the function space of the homology part.  Perturbing by the
genus-weighted Laplacian, or by the Laplacian plus the interaction bracket,
produces the transferred data; all perturbed operators are geometric series
evaluated lazily per input.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .bv import BVContext, bracket, laplacian
from .errors import DivergenceError, StructuralError
from .graded import HodgeSplit
from .report import ValidationReport
from .series import FormalSeries, WeightWindow, as_window, substitute

Operator = Callable[[FormalSeries], FormalSeries]

Q0 = Fraction(0)


@dataclass
class RetractData:
    """Projection, inclusion, and homotopy between two function spaces."""

    big_ctx: BVContext
    small_ctx: BVContext
    window: WeightWindow
    d_big: Operator
    d_small: Operator
    project: Operator
    include: Operator
    homotopy: Operator


def to_adapted(split: HodgeSplit, f: FormalSeries) -> FormalSeries:
    """Transport a series from the original basis to the adapted one."""
    if f.basis != split.original:
        raise StructuralError("series not over the split's original basis")
    expansion: dict[int, list[tuple[int, Fraction]]] = {}
    for (i, a), v in split.from_adapted.entries.items():
        expansion.setdefault(i, []).append((a, v))
    return substitute(f, expansion, split.adapted_basis)


def from_adapted(split: HodgeSplit, f: FormalSeries) -> FormalSeries:
    """Transport a series from the adapted basis back to the original one."""
    if f.basis != split.adapted_basis:
        raise StructuralError("series not over the split's adapted basis")
    expansion: dict[int, list[tuple[int, Fraction]]] = {}
    for (a, i), v in split.change_of_basis.entries.items():
        expansion.setdefault(a, []).append((i, v))
    return substitute(f, expansion, split.original)


def big_context(split: HodgeSplit, window) -> BVContext:
    return BVContext(split.adapted_basis, split.omega_adapted, as_window(window))


def small_context(split: HodgeSplit, window) -> BVContext:
    return BVContext(split.small_basis, split.omega_small, as_window(window))


def sfree_of(split: HodgeSplit, window) -> FormalSeries:
    """The quadratic action whose bracket action on duals is minus the transpose
    of the differential."""
    window = as_window(window)
    basis = split.adapted_basis
    triples = []
    for j in range(basis.dim):
        qj = split.q_adapted.column(j)
        for i in range(basis.dim):
            acc = Q0
            for k, v in qj.items():
                acc += split.omega_adapted.value(i, k) * v
            if acc != 0:
                sign = -1 if basis.parity(i) else 1
                triples.append((0, (i, j), Fraction(sign, 2) * acc))
    return FormalSeries.from_terms(basis, window.max_weight, triples)


def build_function_sdr(split: HodgeSplit, window) -> RetractData:
    """The special deformation retract between the adapted function space and
    the function space of the homology part.

    The big differential substitutes one boundary variable at a time, the
    homotopy inverts it with a normalization by the number of boundary and
    coexact variables in the monomial, and the projection kills every
    monomial containing such a variable.
    """
    window = as_window(window)
    w = window.max_weight
    basis = split.adapted_basis
    ctx_big = big_context(split, window)
    ctx_small = small_context(split, window)
    beta_vars = list(split.b_indices)
    gamma_vars = list(split.c_indices)
    bg_set = set(beta_vars) | set(gamma_vars)
    small_of_big = {a: k for k, a in enumerate(split.h_indices)}
    big_of_small = {k: a for k, a in enumerate(split.h_indices)}

    q_cols: dict[int, list[tuple[int, Fraction]]] = {}
    for (k_loc, i_loc), v in split.q_block.items():
        q_cols.setdefault(i_loc, []).append((k_loc, v))
    qinv_cols: dict[int, list[tuple[int, Fraction]]] = {}
    for (i_loc, k_loc), v in split.q_block_inv.items():
        qinv_cols.setdefault(i_loc, []).append((k_loc, v))

    def d_big(f: FormalSeries) -> FormalSeries:
        out = FormalSeries.zero(basis, w)
        for i_loc, col in q_cols.items():
            gamma = FormalSeries.variable(basis, w, gamma_vars[i_loc])
            for k_loc, v in col:
                d = f.derive_left(beta_vars[k_loc])
                if d.is_zero():
                    continue
                out = out + gamma.multiply(d).scale(-v)
        return out

    def homotopy(f: FormalSeries) -> FormalSeries:
        buckets: dict[int, dict] = {}
        for (g, mono), c in f.terms.items():
            nbg = sum(1 for x in mono if x in bg_set)
            if nbg == 0:
                continue
            buckets.setdefault(nbg, {})[(g, mono)] = c
        out = FormalSeries.zero(basis, w)
        for nbg, terms in buckets.items():
            piece = FormalSeries(basis, w, terms)
            acc = FormalSeries.zero(basis, w)
            for i_loc, col in qinv_cols.items():
                d = piece.derive_left(gamma_vars[i_loc])
                if d.is_zero():
                    continue
                for k_loc, v in col:
                    beta = FormalSeries.variable(basis, w, beta_vars[k_loc])
                    acc = acc + beta.multiply(d).scale(v)
            out = out + acc.scale(Fraction(1, nbg))
        return out

    def project(f: FormalSeries) -> FormalSeries:
        terms = {}
        for (g, mono), c in f.terms.items():
            if any(x in bg_set for x in mono):
                continue
            terms[(g, tuple(small_of_big[x] for x in mono))] = c
        return FormalSeries(split.small_basis, w, terms)

    def include(g_series: FormalSeries) -> FormalSeries:
        if g_series.basis != split.small_basis:
            raise StructuralError("inclusion expects a series over the homology basis")
        terms = {}
        for (g, mono), c in g_series.terms.items():
            terms[(g, tuple(big_of_small[x] for x in mono))] = c
        return FormalSeries(basis, w, terms)

    def d_small(g_series: FormalSeries) -> FormalSeries:
        return FormalSeries.zero(split.small_basis, w)

    return RetractData(
        big_ctx=ctx_big,
        small_ctx=ctx_small,
        window=window,
        d_big=d_big,
        d_small=d_small,
        project=project,
        include=include,
        homotopy=homotopy,
    )


@dataclass
class Perturbation:
    """Degree-1 deformation of the big differential.

    kind "delta1" is the genus-weighted Laplacian; kind "delta2" adds the
    bracket with the interaction part (given over the adapted basis).
    """

    kind: str
    ctx: BVContext
    s_int: FormalSeries | None = None

    def __post_init__(self):
        if self.kind not in ("delta1", "delta2"):
            raise StructuralError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == "delta2" and self.s_int is None:
            raise StructuralError("delta2 needs the interaction part")

    def __call__(self, f: FormalSeries) -> FormalSeries:
        out = laplacian(self.ctx, f).genus_shift(1)
        if self.kind == "delta2":
            out = out + bracket(self.ctx, self.s_int, f)
        return out


def neumann(step: Operator, x: FormalSeries, cap: int) -> FormalSeries:
    """Sum of step^n(x) for n >= 0, stopping when a power vanishes."""
    acc = x
    cur = x
    for _ in range(cap):
        cur = step(cur)
        if cur.is_zero():
            return acc
        acc = acc + cur
    raise DivergenceError(f"operator series did not stabilize within {cap} iterations")


def _cap(window: WeightWindow) -> int:
    # delta2 steps either raise the weight or cut the polynomial degree by
    # two at fixed weight, so (w+2)^2 safely dominates any surviving chain
    return (window.max_weight + 2) ** 2


def perturb(retract: RetractData, pert: Perturbation) -> RetractData:
    """Transported retract along a perturbation of the big differential."""
    if pert.ctx.basis != retract.big_ctx.basis:
        raise StructuralError("perturbation lives on a different basis")
    window = retract.window
    cap = _cap(window)
    d, e = retract.d_big, retract.d_small
    p, i, k = retract.project, retract.include, retract.homotopy

    def dk_series(x):
        return neumann(lambda y: pert(k(y)), x, cap)

    def kd_series(x):
        return neumann(lambda y: k(pert(y)), x, cap)

    def d_big_new(f):
        return d(f) + pert(f)

    def project_new(f):
        return p(dk_series(f))

    def include_new(g):
        return kd_series(i(g))

    def homotopy_new(f):
        return k(dk_series(f))

    def d_small_new(g):
        return e(g) + p(pert(kd_series(i(g))))

    return RetractData(
        big_ctx=retract.big_ctx,
        small_ctx=retract.small_ctx,
        window=window,
        d_big=d_big_new,
        d_small=d_small_new,
        project=project_new,
        include=include_new,
        homotopy=homotopy_new,
    )


def _monomials(basis, max_len, window):
    """All normal-ordered genus-0 monomials up to the given length."""
    out = [()]
    frontier = [()]
    for _ in range(min(max_len, window.max_weight)):
        nxt = []
        for mono in frontier:
            start = mono[-1] if mono else 0
            for v in range(start, basis.dim):
                if basis.parity(v) and mono and mono[-1] == v:
                    continue
                nxt.append(mono + (v,))
        out.extend(nxt)
        frontier = nxt
    return out


def verify_sdr(
    retract: RetractData,
    samples: list[FormalSeries] | None = None,
    exhaustive_len: int = 3,
    upto_weight: int | None = None,
) -> ValidationReport:
    """Evaluate every retract axiom on sample series plus a monomial sweep.

    With upto_weight, residuals are only required to vanish up to that
    weight; used when the perturbation data carries margin beyond the
    window of interest.
    """
    window = retract.window
    w = window.max_weight
    cutoff = w if upto_weight is None else min(w, upto_weight)
    big = [
        FormalSeries(retract.big_ctx.basis, w, {(0, m): Fraction(1)})
        for m in _monomials(retract.big_ctx.basis, exhaustive_len, window)
    ]
    small = [
        FormalSeries(retract.small_ctx.basis, w, {(0, m): Fraction(1)})
        for m in _monomials(retract.small_ctx.basis, exhaustive_len, window)
    ]
    for s in samples or []:
        if s.basis == retract.big_ctx.basis:
            big.append(s)
        elif s.basis == retract.small_ctx.basis:
            small.append(s)
        else:
            raise StructuralError("sample over neither side of the retract")

    d, e = retract.d_big, retract.d_small
    p, i, k = retract.project, retract.include, retract.homotopy
    report = ValidationReport()

    def sweep(name, inputs, residual):
        for x in inputs:
            r = residual(x)
            if cutoff < w:
                r = FormalSeries(r.basis, cutoff, r.terms)
            if not r.is_zero():
                report.add(name, False, f"counterexample {x!r} -> {r!r}")
                return
        report.add(name, True)

    sweep("d-big-squared", big, lambda x: d(d(x)))
    sweep("d-small-squared", small, lambda x: e(e(x)))
    sweep("project-chain-map", big, lambda x: p(d(x)) - e(p(x)))
    sweep("include-chain-map", small, lambda x: d(i(x)) - i(e(x)))
    sweep("project-include-identity", small, lambda x: p(i(x)) - x)
    sweep("homotopy-equation", big, lambda x: i(p(x)) - x - d(k(x)) - k(d(x)))
    sweep("project-kills-homotopy", big, lambda x: p(k(x)))
    sweep("homotopy-kills-inclusion", small, lambda x: k(i(x)))
    sweep("homotopy-squared", big, lambda x: k(k(x)))
    return report
