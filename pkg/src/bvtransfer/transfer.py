"""Effective actions on the homology side, computed three ways, together with
the normalized projection, the transferred differential, the exactness
witness, and the morphism check for the projection.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .bv import Action, BVContext, bracket, laplacian, qme_residual, qme_residual_of_series
from .errors import DivergenceError, PreconditionError
from .graded import HodgeSplit
from .hpl import (
    Perturbation,
    RetractData,
    build_function_sdr,
    neumann,
    perturb,
    sfree_of,
    to_adapted,
)
from .report import ValidationReport
from .series import (
    FormalSeries,
    WeightWindow,
    as_window,
    exp_series,
    invert_series,
    log_series,
)

Q0 = Fraction(0)
Q1 = Fraction(1)


@dataclass
class TransferResult:
    """Effective action over the homology basis plus its verification rows."""

    w: FormalSeries
    route: str
    window: WeightWindow
    verification: ValidationReport

    @property
    def free_energy(self) -> FormalSeries:
        return self.w.constant_part()

    @property
    def interaction(self) -> FormalSeries:
        return self.w.without_constants()


@dataclass
class PropagatorOperator:
    """Second-order operator pairing coexact variables through the inverse
    boundary pairing and the inverted differential block."""

    pairs: list[tuple[int, int, Fraction]]  # (gamma index i, gamma index l, coefficient)
    basis_dim: int

    @classmethod
    def from_split(cls, split: HodgeSplit) -> "PropagatorOperator":
        gamma_vars = list(split.c_indices)
        coeffs: dict[tuple[int, int], Fraction] = {}
        for (i_loc, j_loc), om in split.omega_bc_inv.items():
            sign = -1 if split.adapted_basis.parity(gamma_vars[i_loc]) else 1
            for (l_loc, jj_loc), qv in split.q_block_inv.items():
                if jj_loc != j_loc:
                    continue
                key = (gamma_vars[i_loc], gamma_vars[l_loc])
                coeffs[key] = coeffs.get(key, Q0) + sign * om * qv
        pairs = [(i, l, v) for (i, l), v in sorted(coeffs.items()) if v != 0]
        return cls(pairs, split.adapted_basis.dim)

    def apply(self, f: FormalSeries) -> FormalSeries:
        out = FormalSeries.zero(f.basis, f.max_weight)
        for i, l, v in self.pairs:
            d = f.derive_left(l)
            if d.is_zero():
                continue
            d = d.derive_left(i)
            if d.is_zero():
                continue
            out = out + d.scale(v)
        return out


@dataclass
class HomotopyWitness:
    """Exactness data connecting the included effective action to the original one."""

    f_witness: FormalSeries
    lhs: FormalSeries
    rhs: FormalSeries
    residual: FormalSeries
    p1_residual: FormalSeries
    k1_residual: FormalSeries


@dataclass
class _Prepared:
    split: HodgeSplit
    window: WeightWindow
    ctx_big: BVContext
    ctx_small: BVContext
    s_free_ad: FormalSeries
    s_int_ad: FormalSeries
    exp_sint: FormalSeries
    retract: RetractData
    cap: int

    def pert1(self) -> Perturbation:
        return Perturbation("delta1", self.ctx_big)

    def pert2(self) -> Perturbation:
        return Perturbation("delta2", self.ctx_big, self.s_int_ad)


def _prepare(action: Action, split: HodgeSplit, window) -> _Prepared:
    window = as_window(window)
    if action.max_weight != window.max_weight:
        action = Action(
            FormalSeries(action.s_free.basis, window.max_weight, action.s_free.terms),
            FormalSeries(action.s_int.basis, window.max_weight, action.s_int.terms),
        )
    ctx_orig = BVContext(split.original, split.omega_original, window)
    residual = qme_residual(ctx_orig, action)
    if not residual.is_zero():
        raise PreconditionError(
            f"action does not solve the master equation on the window: {residual!r}"
        )
    s_free_ad = to_adapted(split, action.s_free)
    expected = sfree_of(split, window)
    if s_free_ad != expected:
        raise PreconditionError("free part of the action is not the one induced by the split")
    s_int_ad = to_adapted(split, action.s_int)
    exp_sint = exp_series(s_int_ad.genus_shift(-1))
    retract = build_function_sdr(split, window)
    return _Prepared(
        split=split,
        window=window,
        ctx_big=retract.big_ctx,
        ctx_small=retract.small_ctx,
        s_free_ad=s_free_ad,
        s_int_ad=s_int_ad,
        exp_sint=exp_sint,
        retract=retract,
        cap=(window.max_weight + 2) ** 2,
    )


def _verify_w(ctx_small: BVContext, w: FormalSeries) -> ValidationReport:
    report = ValidationReport()
    report.add(
        "hbar-positivity",
        w.min_genus >= 0,
        "" if w.min_genus >= 0 else f"negative genus terms present (min {w.min_genus})",
    )
    residual = qme_residual_of_series(ctx_small, w)
    report.add(
        "qme-homology",
        residual.is_zero(),
        "" if residual.is_zero() else f"residual {residual!r}",
    )
    return report


def effective_action_hpl(action: Action, split: HodgeSplit, window) -> TransferResult:
    """Effective action through the perturbed projection of the retract."""
    pre = _prepare(action, split, window)
    pert = pre.pert1()
    k = pre.retract.homotopy
    y = neumann(lambda x: pert(k(x)), pre.exp_sint, pre.cap)
    w_exp = pre.retract.project(y)
    w = log_series(w_exp).genus_shift(1)
    return TransferResult(w, "hpl", pre.window, _verify_w(pre.ctx_small, w))


def effective_action_feynman(action: Action, split: HodgeSplit, window) -> TransferResult:
    """Effective action through the exponential of the propagator operator."""
    pre = _prepare(action, split, window)
    prop = PropagatorOperator.from_split(split)

    acc = pre.exp_sint
    cur = pre.exp_sint
    m = 0
    while True:
        m += 1
        cur = prop.apply(cur).genus_shift(1).scale(Fraction(1, 2 * m))
        if cur.is_zero():
            break
        acc = acc + cur
    w_exp = pre.retract.project(acc)
    w = log_series(w_exp).genus_shift(1)
    return TransferResult(w, "feynman", pre.window, _verify_w(pre.ctx_small, w))


def effective_action_alt(action: Action, split: HodgeSplit, window) -> TransferResult:
    """Effective action through the variable-counting formula.

    Blind to monomial-free constants: the result carries polynomial degree
    one and up only.
    """
    pre = _prepare(action, split, window)
    pert = pre.pert2()
    k = pre.retract.homotopy
    p = pre.retract.project

    total = pre.s_free_ad + pre.s_int_ad
    h_vars = set(pre.split.h_indices)
    seeded = FormalSeries(
        total.basis,
        total.max_weight,
        {
            (g, mono): c * sum(1 for x in mono if x in h_vars)
            for (g, mono), c in total.terms.items()
        },
    )
    acc = FormalSeries.zero(pre.ctx_small.basis, pre.window.max_weight)
    cur = seeded
    for _ in range(pre.cap):
        acc = acc + p(cur)
        cur = pert(k(cur))
        if cur.is_zero():
            break
    else:
        raise DivergenceError("variable-counting expansion did not stabilize")
    w = FormalSeries(
        acc.basis,
        acc.max_weight,
        {(g, mono): c / len(mono) for (g, mono), c in acc.terms.items() if mono},
    )
    return TransferResult(w, "alt", pre.window, _verify_w(pre.ctx_small, w))


def path_integral_z(action: Action, split: HodgeSplit, f: FormalSeries, window) -> FormalSeries:
    """Normalized effective observable of f (given over the original basis).

    Runs at the action's own window when wider than the requested one and
    truncates the result, so that actions solving the master equation with
    margin give edge-exact values.
    """
    window = as_window(window)
    work = max(window.max_weight, action.max_weight)
    pre = _prepare(action, split, work)
    f = FormalSeries(f.basis, work, f.terms)
    f_ad = to_adapted(split, f) if f.basis == split.original else f
    pert = pre.pert1()
    k = pre.retract.homotopy
    p = pre.retract.project

    def p1(x):
        return p(neumann(lambda y: pert(k(y)), x, pre.cap))

    w_exp = p1(pre.exp_sint)
    numer = p1(pre.exp_sint.multiply(f_ad))
    out = invert_series(w_exp).multiply(numer)
    return FormalSeries(out.basis, window.max_weight, out.terms)


def transferred_differential(
    action: Action, split: HodgeSplit, window
) -> Callable[[FormalSeries], FormalSeries]:
    """The differential induced on the homology function space by the full
    perturbation.

    Computed at the action's own window when wider than the requested one,
    with inputs lifted and outputs truncated accordingly.
    """
    window = as_window(window)
    work = max(window.max_weight, action.max_weight)
    pre = _prepare(action, split, work)
    perturbed = perturb(pre.retract, pre.pert2())
    if work == window.max_weight:
        return perturbed.d_small

    def e2(g: FormalSeries) -> FormalSeries:
        lifted = FormalSeries(g.basis, work, g.terms)
        out = perturbed.d_small(lifted)
        return FormalSeries(out.basis, window.max_weight, out.terms)

    return e2


def homotopy_witness(action: Action, split: HodgeSplit, window) -> HomotopyWitness:
    """Witness making the included effective action exact against the original.

    The exponential of the included effective action is realized on the
    window as the inclusion of the perturbed projection output; this is the
    only window-exact reading, since re-exponentiating the truncated
    logarithm would need terms from above the window.

    Runs at the action's own window when that is wider than the requested
    one, then truncates.  The exactness identity feeds the master-equation
    residual back through a genus division, so the exponential weight is
    closed on the requested window only when the action solves the master
    equation two weights beyond it; actions given without that margin and
    not exactly closed are rejected.
    """
    window = as_window(window)
    work = max(window.max_weight, action.max_weight)
    pre = _prepare(action, split, work)
    pert = pre.pert1()
    k = pre.retract.homotopy
    p = pre.retract.project
    i = pre.retract.include
    d = pre.retract.d_big

    def cut(s: FormalSeries) -> FormalSeries:
        return FormalSeries(s.basis, window.max_weight, s.terms)

    closure = cut(d(pre.exp_sint) + pert(pre.exp_sint))
    if not closure.is_zero():
        raise PreconditionError(
            "exponential weight is not closed on the window; the witness needs an "
            "action solving the master equation two weights past the window"
        )

    def dk_series(x):
        return neumann(lambda y: pert(k(y)), x, pre.cap)

    def p1(x):
        return p(dk_series(x))

    def k1(x):
        return k(dk_series(x))

    f_w = k1(pre.exp_sint)
    lhs = i(p1(pre.exp_sint)) - pre.exp_sint
    rhs = d(f_w) + pert(f_w)
    return HomotopyWitness(
        f_witness=cut(f_w),
        lhs=cut(lhs),
        rhs=cut(rhs),
        residual=cut(lhs - rhs),
        p1_residual=cut(p1(f_w)),
        k1_residual=cut(k1(f_w)),
    )


def morphism_check_projection(
    action: Action, w: TransferResult, split: HodgeSplit, samples: list[FormalSeries]
) -> ValidationReport:
    """Check that the projection intertwines the two twisted differentials and
    respects the brackets, on the given homology-side samples."""
    pre = _prepare(action, split, window=w.window)
    ctx_big, ctx_small = pre.ctx_big, pre.ctx_small
    i = pre.retract.include
    iw = i(w.w)
    potential = pre.s_free_ad + iw
    report = ValidationReport()

    bad = None
    for g1 in samples:
        for g2 in samples:
            lhs = bracket(ctx_big, i(g1), i(g2))
            rhs = i(bracket(ctx_small, g1, g2))
            if lhs != rhs:
                bad = (g1, g2)
                break
        if bad:
            break
    report.add("poisson", bad is None, f"counterexample {bad!r}" if bad else "")

    bad = None
    for g in samples:
        lhs = laplacian(ctx_big, i(g)).genus_shift(1) + bracket(ctx_big, potential, i(g))
        rhs = i(laplacian(ctx_small, g).genus_shift(1) + bracket(ctx_small, w.w, g))
        if lhs != rhs:
            bad = g
            break
    report.add("intertwine", bad is None, f"counterexample {bad!r}" if bad else "")
    return report


def twist_action(ctx: BVContext, action: Action, r: FormalSeries) -> Action:
    """New master-equation solution obtained by an exact shift of the
    exponential weight along a degree minus-one generator of positive weight."""
    if r.degree() % 2 != 1:
        raise PreconditionError("twist generator must have odd degree")
    if any(2 * g + len(m) < 1 for (g, m) in r.terms):
        raise PreconditionError("twist generator must have positive weight")
    e = exp_series(action.s_int.genus_shift(-1))
    flow = laplacian(ctx, r.multiply(e)).genus_shift(1) + bracket(ctx, action.s_free, r.multiply(e))
    new_exp = e + flow
    new_int = log_series(new_exp).genus_shift(1)
    return Action(action.s_free, new_int)
