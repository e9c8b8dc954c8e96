"""The odd Laplacian, the antibracket, master-equation residuals, and the
algebraic identity checkers that cross-validate them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import PreconditionError, StructuralError
from .graded import GradedBasis, OddSymplecticForm
from .series import FormalSeries, WeightWindow, as_window

Q0 = Fraction(0)


@dataclass
class BVContext:
    """A basis with an invertible odd form and a truncation window."""

    basis: GradedBasis
    omega: OddSymplecticForm
    window: WeightWindow
    _inv_items: list = field(default=None, repr=False)

    def __post_init__(self):
        if self.omega.basis != self.basis:
            raise StructuralError("omega must live on the context basis")
        if not self.omega.nondegenerate:
            raise PreconditionError("context needs a nondegenerate form")
        self.window = as_window(self.window)
        self._inv_items = sorted(self.omega.inverse_entries.items())

    @property
    def max_weight(self) -> int:
        return self.window.max_weight

    def zero(self) -> FormalSeries:
        return FormalSeries.zero(self.basis, self.max_weight)

    def one(self) -> FormalSeries:
        return FormalSeries.one(self.basis, self.max_weight)

    def series(self, triples) -> FormalSeries:
        return FormalSeries.from_terms(self.basis, self.max_weight, triples)


def laplacian(ctx: BVContext, f: FormalSeries) -> FormalSeries:
    """Second-order odd Laplacian: half the inverse-form trace of two left derivatives.

    The inner derivative is taken by the second index; the caller supplies
    the genus factor separately (see qme_residual and twisted_differential).
    """
    if f.basis != ctx.basis:
        raise StructuralError("series not over the context basis")
    out = ctx.zero()
    half = Fraction(1, 2)
    for (i, j), w in ctx._inv_items:
        d = f.derive_left(j)
        if d.is_zero():
            continue
        d = d.derive_left(i)
        if d.is_zero():
            continue
        sign = -1 if ctx.basis.parity(i) else 1
        out = out + d.scale(half * sign * w)
    return out


def bracket(ctx: BVContext, f: FormalSeries, g: FormalSeries) -> FormalSeries:
    """Degree-1 biderivation induced by the Laplacian."""
    if f.basis != ctx.basis or g.basis != ctx.basis:
        raise StructuralError("series not over the context basis")
    out = ctx.zero()
    for (i, j), w in ctx._inv_items:
        df = f.derive_right(i)
        if df.is_zero():
            continue
        dg = g.derive_left(j)
        if dg.is_zero():
            continue
        out = out + df.multiply(dg).scale(w)
    return out


@dataclass
class Action:
    """Quadratic free part plus an interaction part of weight three and more."""

    s_free: FormalSeries
    s_int: FormalSeries

    def __post_init__(self):
        if self.s_free.basis != self.s_int.basis:
            raise StructuralError("action parts live on different bases")
        if self.s_free.max_weight != self.s_int.max_weight:
            raise StructuralError("action parts have different windows")
        for (g, mono) in self.s_free.terms:
            if g != 0 or len(mono) != 2:
                raise PreconditionError("free part must be genus 0 and quadratic")
            if self.s_free.mono_degree(mono) != 0:
                raise PreconditionError("free part must have degree 0")
        for (g, mono), _ in self.s_int.terms.items():
            if g < 0:
                raise PreconditionError("interaction part cannot have negative genus")
            if 2 * (g - 1) + len(mono) < 1:
                raise PreconditionError(
                    f"interaction term (genus {g}, degree {len(mono)}) is below weight 3"
                )
            if self.s_int.mono_degree(mono) != 0:
                raise PreconditionError("interaction part must have degree 0")

    @property
    def basis(self) -> GradedBasis:
        return self.s_free.basis

    @property
    def max_weight(self) -> int:
        return self.s_free.max_weight

    def total(self) -> FormalSeries:
        return self.s_free + self.s_int

    @classmethod
    def from_total(cls, s: FormalSeries) -> "Action":
        free = {k: v for k, v in s.terms.items() if k[0] == 0 and len(k[1]) == 2}
        rest = {k: v for k, v in s.terms.items() if k not in free}
        return cls(
            FormalSeries(s.basis, s.max_weight, free),
            FormalSeries(s.basis, s.max_weight, rest),
        )


def qme_residual(ctx: BVContext, s: Action) -> FormalSeries:
    """Master-equation residual of the action, constants dropped.

    Zero on the window exactly when the action defines a consistent
    structure up to that weight.
    """
    total = s.total()
    r = laplacian(ctx, total).genus_shift(1) + bracket(ctx, total, total).scale(Fraction(1, 2))
    return r.without_constants()


def qme_residual_of_series(ctx: BVContext, s: FormalSeries) -> FormalSeries:
    """Same residual for a raw degree-0 series, without the Action shape checks."""
    r = laplacian(ctx, s).genus_shift(1) + bracket(ctx, s, s).scale(Fraction(1, 2))
    return r.without_constants()


def twisted_differential(ctx: BVContext, a: FormalSeries, f: FormalSeries) -> FormalSeries:
    """Genus-weighted Laplacian twisted by a degree-0 potential."""
    return laplacian(ctx, f).genus_shift(1) + bracket(ctx, a, f)


def _max_term_weight(s: FormalSeries) -> int:
    return max((2 * g + len(m) for (g, m) in s.terms), default=0)


def _lift(ctx: BVContext, *series: FormalSeries):
    """Widen the window so products of the inputs never truncate.

    The identity checkers compare expressions whose intermediate weights
    differ; inside the original window that asymmetry would corrupt the
    residual, so they are evaluated where everything fits.
    """
    need = sum(_max_term_weight(s) for s in series)
    if need <= ctx.max_weight:
        return ctx, series
    wide = BVContext(ctx.basis, ctx.omega, need)
    return wide, tuple(FormalSeries(s.basis, need, s.terms) for s in series)


def seven_term_check(
    ctx: BVContext, f: FormalSeries, g: FormalSeries, h: FormalSeries
) -> FormalSeries:
    """Residual of the second-order Leibniz identity on three homogeneous inputs."""
    ctx, (f, g, h) = _lift(ctx, f, g, h)
    pf, pg, ph = f.parity(), g.parity(), h.parity()
    lhs = laplacian(ctx, f * g * h)
    rhs = (
        laplacian(ctx, f * g) * h
        + (laplacian(ctx, f * h) * g).scale((-1) ** (pg * ph))
        + (laplacian(ctx, g * h) * f).scale((-1) ** (pf * (pg + ph)))
        - laplacian(ctx, f) * g * h
        - (f * laplacian(ctx, g) * h).scale((-1) ** pf)
        - (f * g * laplacian(ctx, h)).scale((-1) ** (pf + pg))
    )
    return lhs - rhs


def delta_bracket_check(ctx: BVContext, f: FormalSeries, g: FormalSeries) -> FormalSeries:
    """Residual of the compatibility of the Laplacian with the bracket."""
    ctx, (f, g) = _lift(ctx, f, g)
    pf = f.parity()
    lhs = laplacian(ctx, bracket(ctx, f, g))
    rhs = bracket(ctx, laplacian(ctx, f), g) + bracket(ctx, f, laplacian(ctx, g)).scale(
        (-1) ** (pf + 1)
    )
    return lhs - rhs


def leibniz_check(ctx: BVContext, f: FormalSeries, g: FormalSeries) -> FormalSeries:
    """Residual of the product rule relating the Laplacian and the bracket."""
    ctx, (f, g) = _lift(ctx, f, g)
    pf = f.parity()
    lhs = laplacian(ctx, f * g)
    rhs = (
        laplacian(ctx, f) * g
        + (f * laplacian(ctx, g)).scale((-1) ** pf)
        + bracket(ctx, f, g).scale((-1) ** pf)
    )
    return lhs - rhs
