"""Sparse graded-commutative formal series in dual variables with a genus grading.

A monomial is an ascending tuple of dual-variable indices; odd variables
appear at most once (an odd square is the zero monomial).  A series maps
(genus, monomial) to a nonzero rational coefficient and is truncated by the
weight 2*genus + polynomial_degree at every operation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import PreconditionError, StructuralError
from .graded import GradedBasis

Q0 = Fraction(0)
Q1 = Fraction(1)

Monomial = tuple[int, ...]


@dataclass(frozen=True)
class WeightWindow:
    """Truncation window; everything of weight above max_weight is dropped."""

    max_weight: int

    def __post_init__(self):
        if self.max_weight < 3:
            raise StructuralError("max_weight below 3 leaves no room for interactions")


def as_window(window) -> WeightWindow:
    if isinstance(window, WeightWindow):
        return window
    return WeightWindow(int(window))


def normal_order(indices, parities) -> tuple[int, Monomial | None]:
    """Sort variable indices ascending, tracking the Koszul sign.

    Returns (sign, monomial); (0, None) when an odd variable repeats.
    """
    seq = list(indices)
    sign = 1
    # insertion sort; each adjacent swap of two odd variables flips the sign
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


def merge_monomials(m1: Monomial, m2: Monomial, parities) -> tuple[int, Monomial | None]:
    """Normal-ordered product of two normal-ordered monomials."""
    sign = 1
    for x in m1:
        if not parities[x]:
            continue
        for y in m2:
            if parities[y]:
                if x == y:
                    return 0, None
                if x > y:
                    sign = -sign
    merged = sorted(m1 + m2)
    return sign, tuple(merged)


class FormalSeries:
    """Weight-truncated element of the function space on a graded basis."""

    __slots__ = ("basis", "max_weight", "terms", "_parities")

    def __init__(self, basis: GradedBasis, max_weight: int, terms=None):
        self.basis = basis
        self.max_weight = int(max_weight)
        self._parities = tuple(basis.parity(i) for i in range(basis.dim))
        clean: dict[tuple[int, Monomial], Fraction] = {}
        for (g, mono), c in (terms or {}).items():
            if c == 0:
                continue
            if 2 * g + len(mono) > self.max_weight:
                continue
            clean[(g, mono)] = c
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, basis, max_weight) -> "FormalSeries":
        return cls(basis, max_weight, {})

    @classmethod
    def one(cls, basis, max_weight) -> "FormalSeries":
        return cls(basis, max_weight, {(0, ()): Q1})

    @classmethod
    def variable(cls, basis, max_weight, i: int, genus: int = 0) -> "FormalSeries":
        return cls(basis, max_weight, {(genus, (i,)): Q1})

    @classmethod
    def from_terms(cls, basis, max_weight, triples) -> "FormalSeries":
        """Build from (genus, variable index sequence, coefficient) triples."""
        parities = tuple(basis.parity(i) for i in range(basis.dim))
        terms: dict[tuple[int, Monomial], Fraction] = {}
        for g, seq, c in triples:
            c = Fraction(c)
            if c == 0:
                continue
            sign, mono = normal_order(seq, parities)
            if sign == 0:
                continue
            key = (int(g), mono)
            terms[key] = terms.get(key, Q0) + sign * c
        return cls(basis, max_weight, terms)

    # -- inspection --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    @property
    def min_genus(self) -> int:
        return min((g for g, _ in self.terms), default=0)

    def mono_degree(self, mono: Monomial) -> int:
        return -sum(self.basis.degree(i) for i in mono)

    def degree(self) -> int:
        """Common cohomological degree of all terms; 0 for the zero series."""
        degs = {self.mono_degree(m) for _, m in self.terms}
        if not degs:
            return 0
        if len(degs) > 1:
            raise PreconditionError(f"series not homogeneous: degrees {sorted(degs)}")
        return degs.pop()

    def parity(self) -> int:
        return self.degree() % 2

    def coefficient(self, genus: int, seq) -> Fraction:
        sign, mono = normal_order(seq, self._parities)
        if sign == 0:
            return Q0
        return sign * self.terms.get((genus, mono), Q0)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (kv[0][0], kv[0][1]))

    def constant_part(self) -> "FormalSeries":
        return FormalSeries(
            self.basis, self.max_weight, {k: v for k, v in self.terms.items() if not k[1]}
        )

    def without_constants(self) -> "FormalSeries":
        return FormalSeries(
            self.basis, self.max_weight, {k: v for k, v in self.terms.items() if k[1]}
        )

    def genus_part(self, g: int) -> "FormalSeries":
        return FormalSeries(
            self.basis, self.max_weight, {k: v for k, v in self.terms.items() if k[0] == g}
        )

    def poly_part(self, n: int) -> "FormalSeries":
        return FormalSeries(
            self.basis, self.max_weight, {k: v for k, v in self.terms.items() if len(k[1]) == n}
        )

    # -- ring operations ---------------------------------------------------

    def _check_compatible(self, other: "FormalSeries") -> None:
        if self.basis != other.basis:
            raise StructuralError("series live on different bases")
        if self.max_weight != other.max_weight:
            raise StructuralError("series have different weight windows")

    def __eq__(self, other) -> bool:
        if not isinstance(other, FormalSeries):
            return NotImplemented
        return (
            self.basis == other.basis
            and self.max_weight == other.max_weight
            and self.terms == other.terms
        )

    def __add__(self, other: "FormalSeries") -> "FormalSeries":
        self._check_compatible(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, Q0) + v
        return FormalSeries(self.basis, self.max_weight, terms)

    def __sub__(self, other: "FormalSeries") -> "FormalSeries":
        return self + (-other)

    def __neg__(self) -> "FormalSeries":
        return FormalSeries(self.basis, self.max_weight, {k: -v for k, v in self.terms.items()})

    def scale(self, c) -> "FormalSeries":
        c = Fraction(c)
        return FormalSeries(self.basis, self.max_weight, {k: c * v for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, FormalSeries):
            return self.multiply(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        return self.scale(Q1 / Fraction(other))

    def multiply(self, other: "FormalSeries") -> "FormalSeries":
        self._check_compatible(other)
        w = self.max_weight
        terms: dict[tuple[int, Monomial], Fraction] = {}
        for (g1, m1), c1 in self.terms.items():
            for (g2, m2), c2 in other.terms.items():
                g = g1 + g2
                if 2 * g + len(m1) + len(m2) > w:
                    continue
                sign, mono = merge_monomials(m1, m2, self._parities)
                if sign == 0:
                    continue
                key = (g, mono)
                acc = terms.get(key, Q0) + sign * c1 * c2
                if acc == 0:
                    terms.pop(key, None)
                else:
                    terms[key] = acc
        return FormalSeries(self.basis, w, terms)

    # -- derivatives -------------------------------------------------------

    def derive_left(self, i: int) -> "FormalSeries":
        """Left derivative by the dual variable i."""
        p = self._parities
        terms: dict[tuple[int, Monomial], Fraction] = {}
        for (g, mono), c in self.terms.items():
            pos = None
            mult = 0
            for k, x in enumerate(mono):
                if x == i:
                    mult += 1
                    if pos is None:
                        pos = k
            if pos is None:
                continue
            sign = 1
            if p[i]:
                crossed = sum(p[x] for x in mono[:pos])
                sign = -1 if crossed % 2 else 1
            else:
                sign = mult
            key = (g, mono[:pos] + mono[pos + 1 :])
            acc = terms.get(key, Q0) + sign * c
            if acc == 0:
                terms.pop(key, None)
            else:
                terms[key] = acc
        return FormalSeries(self.basis, self.max_weight, terms)

    def derive_right(self, i: int) -> "FormalSeries":
        """Right derivative by the dual variable i."""
        p = self._parities
        terms: dict[tuple[int, Monomial], Fraction] = {}
        for (g, mono), c in self.terms.items():
            pos = None
            mult = 0
            for k, x in enumerate(mono):
                if x == i:
                    mult += 1
                    pos = k
            if pos is None:
                continue
            if p[i]:
                crossed = sum(p[x] for x in mono[pos + 1 :])
                sign = -1 if crossed % 2 else 1
            else:
                sign = mult
            key = (g, mono[:pos] + mono[pos + 1 :])
            acc = terms.get(key, Q0) + sign * c
            if acc == 0:
                terms.pop(key, None)
            else:
                terms[key] = acc
        return FormalSeries(self.basis, self.max_weight, terms)

    # -- genus bookkeeping ---------------------------------------------------

    def genus_shift(self, k: int) -> "FormalSeries":
        """Multiply or divide by the genus marker; overweight terms fall out."""
        if k == 0:
            return self
        return FormalSeries(
            self.basis, self.max_weight, {(g + k, m): c for (g, m), c in self.terms.items()}
        )

    def __repr__(self) -> str:
        if not self.terms:
            return "FormalSeries(0)"
        bits = []
        for (g, mono), c in self.sorted_terms():
            vars_ = "*".join(self.basis.name(i) for i in mono) or "1"
            bits.append(f"{c}*h^{g}*{vars_}" if g else f"{c}*{vars_}")
        return "FormalSeries(" + " + ".join(bits) + ")"


# ---------------------------------------------------------------------------
# module-level operations


def multiply(f: FormalSeries, g: FormalSeries) -> FormalSeries:
    return f.multiply(g)


def derive_left(f: FormalSeries, i: int) -> FormalSeries:
    return f.derive_left(i)


def derive_right(f: FormalSeries, i: int) -> FormalSeries:
    return f.derive_right(i)


def genus_shift(f: FormalSeries, k: int) -> FormalSeries:
    return f.genus_shift(k)


def exp_series(a: FormalSeries) -> FormalSeries:
    """Exponential, defined because every term of a has weight >= 1."""
    bad = [k for (g, m) in a.terms for k in [(g, m)] if 2 * g + len(m) < 1]
    if bad:
        raise PreconditionError(f"exp needs weight >= 1 terms, got {bad}")
    result = FormalSeries.one(a.basis, a.max_weight)
    power = result
    for k in range(1, a.max_weight + 1):
        power = power.multiply(a)
        if power.is_zero():
            break
        result = result + power.scale(Fraction(1, math.factorial(k)))
    return result


def log_series(f: FormalSeries) -> FormalSeries:
    """Logarithm of 1 + (terms of weight >= 1)."""
    if f.terms.get((0, ())) != Q1:
        raise PreconditionError("log needs constant term exactly 1")
    x = f - FormalSeries.one(f.basis, f.max_weight)
    if any(2 * g + len(m) < 1 for (g, m) in x.terms):
        raise PreconditionError("log needs the rest of the series in weight >= 1")
    result = FormalSeries.zero(f.basis, f.max_weight)
    power = FormalSeries.one(f.basis, f.max_weight)
    for k in range(1, f.max_weight + 1):
        power = power.multiply(x)
        if power.is_zero():
            break
        result = result + power.scale(Fraction((-1) ** (k + 1), k))
    return result


def invert_series(f: FormalSeries) -> FormalSeries:
    """Multiplicative inverse of 1 + (terms of weight >= 1)."""
    if f.terms.get((0, ())) != Q1:
        raise PreconditionError("inverse needs constant term exactly 1")
    x = f - FormalSeries.one(f.basis, f.max_weight)
    if any(2 * g + len(m) < 1 for (g, m) in x.terms):
        raise PreconditionError("inverse needs the rest of the series in weight >= 1")
    result = FormalSeries.one(f.basis, f.max_weight)
    power = FormalSeries.one(f.basis, f.max_weight)
    for k in range(1, f.max_weight + 1):
        power = power.multiply(x)
        if power.is_zero():
            break
        result = result + power.scale(Fraction((-1) ** k))
    return result


def substitute(
    f: FormalSeries, expansion: dict[int, list[tuple[int, Fraction]]], new_basis: GradedBasis
) -> FormalSeries:
    """Rewrite f under a degree-0 linear change of dual variables.

    expansion[i] lists (new index, coefficient) pairs expressing the old
    variable i in the new ones; parities must match entry by entry.
    """
    w = f.max_weight
    for i, pieces in expansion.items():
        for a, _ in pieces:
            if f.basis.parity(i) != new_basis.parity(a):
                raise StructuralError("substitution must preserve parity")
    out = FormalSeries.zero(new_basis, w)
    lin_cache: dict[int, FormalSeries] = {}
    for (g, mono), c in f.terms.items():
        # keep the genus attached so the weight window never clips a
        # negative-genus term whose polynomial degree exceeds max_weight
        image = FormalSeries(new_basis, w, {(g, ()): c})
        for i in mono:
            lin = lin_cache.get(i)
            if lin is None:
                lin = FormalSeries(
                    new_basis, w, {(0, (a,)): Fraction(v) for a, v in expansion.get(i, []) if v != 0}
                )
                lin_cache[i] = lin
            image = image.multiply(lin)
            if image.is_zero():
                break
        out = out + image
    return out
