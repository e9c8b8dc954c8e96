"""Graded vector spaces over Q, degree-1 differentials, odd symplectic forms,
and the constructive splitting of a complex into homology plus a contractible
symplectic complement.

All coefficients are exact rationals.  Matrices small enough for dense
Gaussian elimination (the intended regime is dim V <= 8 or so).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InternalError, PreconditionError, StructuralError
from .report import ValidationReport

Q0 = Fraction(0)
Q1 = Fraction(1)


# ---------------------------------------------------------------------------
# dense exact linear algebra helpers


def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form with leftmost pivots; returns (rows, pivot columns)."""
    rows = [list(r) for r in rows]
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, nrows) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return [row for row in rows if any(x != 0 for x in row)], pivots


def _matrix_inverse(mat: list[list[Fraction]]) -> list[list[Fraction]] | None:
    n = len(mat)
    aug = [list(mat[i]) + [Q1 if j == i else Q0 for j in range(n)] for i in range(n)]
    reduced, pivots = _rref(aug)
    if pivots != list(range(n)):
        return None
    return [row[n:] for row in reduced]


def _solve(mat: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction] | None:
    """One exact solution of mat @ x = rhs (free variables set to zero), or None."""
    nrows = len(mat)
    ncols = len(mat[0]) if mat else 0
    aug = [list(mat[i]) + [rhs[i]] for i in range(nrows)]
    reduced, pivots = _rref(aug)
    for row in reduced:
        if all(x == 0 for x in row[:ncols]) and row[ncols] != 0:
            return None
    x = [Q0] * ncols
    for r, c in enumerate(pivots):
        if c < ncols:
            x[c] = reduced[r][ncols]
        elif reduced[r][ncols] != 0:
            return None
    return x


def _nullspace(mat: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Basis of the kernel of mat, one vector per free column, in column order."""
    reduced, pivots = _rref(mat) if mat else ([], [])
    pivot_set = set(pivots)
    basis = []
    for c in range(ncols):
        if c in pivot_set:
            continue
        v = [Q0] * ncols
        v[c] = Q1
        for r, pc in enumerate(pivots):
            v[pc] = -reduced[r][c]
        basis.append(v)
    return basis


# ---------------------------------------------------------------------------
# basis, maps, forms


@dataclass(frozen=True)
class GradedBasis:
    """Ordered basis of a graded vector space: (name, degree) pairs.

    The list order is the canonical index order for every matrix built on top.
    Dual variables inherit the index and the name; the dual degree is the
    negative of the element degree (same parity).
    """

    elements: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.elements]
        if len(set(names)) != len(names):
            raise StructuralError("basis names must be unique")

    @property
    def dim(self) -> int:
        return len(self.elements)

    def name(self, i: int) -> str:
        return self.elements[i][0]

    def degree(self, i: int) -> int:
        return self.elements[i][1]

    def parity(self, i: int) -> int:
        return self.elements[i][1] % 2

    def index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.elements):
            if n == name:
                return i
        raise StructuralError(f"unknown basis element {name!r}")

    @classmethod
    def make(cls, pairs) -> "GradedBasis":
        return cls(tuple((str(n), int(d)) for n, d in pairs))


@dataclass(frozen=True)
class GradedMap:
    """Sparse linear map of homogeneous degree between graded bases.

    entries maps (codomain index j, domain index i) to the coefficient of
    e_j in the image of e_i.  Entries must be compatible with the declared
    degree; that is enforced here, while properties like Q^2 = 0 are left
    to validators.
    """

    domain: GradedBasis
    codomain: GradedBasis
    entries: dict[tuple[int, int], Fraction]
    degree: int

    def __post_init__(self):
        for (j, i), v in self.entries.items():
            if not (0 <= i < self.domain.dim and 0 <= j < self.codomain.dim):
                raise StructuralError(f"entry ({j},{i}) outside matrix shape")
            if v == 0:
                raise StructuralError("zero entries must not be stored")
            if self.codomain.degree(j) != self.domain.degree(i) + self.degree:
                raise StructuralError(
                    f"entry ({j},{i}) violates degree {self.degree}: "
                    f"{self.codomain.degree(j)} != {self.domain.degree(i)} + {self.degree}"
                )

    def column(self, i: int) -> dict[int, Fraction]:
        return {j: v for (j, ii), v in self.entries.items() if ii == i}

    def apply(self, vec: dict[int, Fraction]) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for (j, i), v in self.entries.items():
            if i in vec:
                out[j] = out.get(j, Q0) + v * vec[i]
        return {j: v for j, v in out.items() if v != 0}

    def compose(self, other: "GradedMap") -> "GradedMap":
        """self after other."""
        if other.codomain != self.domain:
            raise StructuralError("composition domain mismatch")
        entries: dict[tuple[int, int], Fraction] = {}
        for (j, k), v in self.entries.items():
            for (kk, i), w in other.entries.items():
                if kk == k:
                    key = (j, i)
                    entries[key] = entries.get(key, Q0) + v * w
        entries = {k: v for k, v in entries.items() if v != 0}
        return GradedMap(other.domain, self.codomain, entries, self.degree + other.degree)

    def is_zero(self) -> bool:
        return not self.entries

    def dense(self) -> list[list[Fraction]]:
        m = [[Q0] * self.domain.dim for _ in range(self.codomain.dim)]
        for (j, i), v in self.entries.items():
            m[j][i] = v
        return m

    @classmethod
    def zero(cls, basis: GradedBasis, degree: int = 1) -> "GradedMap":
        return cls(basis, basis, {}, degree)

    @classmethod
    def from_dense(cls, domain, codomain, rows, degree) -> "GradedMap":
        entries = {
            (j, i): Fraction(rows[j][i])
            for j in range(codomain.dim)
            for i in range(domain.dim)
            if rows[j][i] != 0
        }
        return cls(domain, codomain, entries, degree)


@dataclass
class OddSymplecticForm:
    """Degree -1 bilinear form given by its coefficient matrix omega_{ij}.

    The inverse matrix is computed once; it stays None when the form is
    degenerate, so that validators can report the failure instead of the
    constructor refusing the data.
    """

    basis: GradedBasis
    entries: dict[tuple[int, int], Fraction]
    inverse_entries: dict[tuple[int, int], Fraction] | None = field(default=None)

    def __post_init__(self):
        n = self.basis.dim
        for (i, j), v in self.entries.items():
            if not (0 <= i < n and 0 <= j < n):
                raise StructuralError(f"omega entry ({i},{j}) outside matrix shape")
            if v == 0:
                raise StructuralError("zero entries must not be stored")
        if self.inverse_entries is None:
            dense = [[Q0] * n for _ in range(n)]
            for (i, j), v in self.entries.items():
                dense[i][j] = v
            inv = _matrix_inverse(dense)
            if inv is not None:
                self.inverse_entries = {
                    (i, j): inv[i][j] for i in range(n) for j in range(n) if inv[i][j] != 0
                }

    def value(self, i: int, j: int) -> Fraction:
        return self.entries.get((i, j), Q0)

    def pair(self, u: dict[int, Fraction], v: dict[int, Fraction]) -> Fraction:
        total = Q0
        for (i, j), w in self.entries.items():
            if i in u and j in v:
                total += u[i] * w * v[j]
        return total

    @property
    def nondegenerate(self) -> bool:
        return self.inverse_entries is not None

    @classmethod
    def from_pairs(cls, basis: GradedBasis, pairs) -> "OddSymplecticForm":
        """Build from a list of (i, j, value) with graded antisymmetry filled in."""
        entries: dict[tuple[int, int], Fraction] = {}
        for i, j, v in pairs:
            v = Fraction(v)
            if v == 0:
                continue
            entries[(i, j)] = entries.get((i, j), Q0) + v
            sign = -((-1) ** (basis.parity(i) * basis.parity(j)))
            entries[(j, i)] = entries.get((j, i), Q0) + sign * v
        return cls(basis, {k: v for k, v in entries.items() if v != 0})


# ---------------------------------------------------------------------------
# validation


def validate_dg_symplectic(
    basis: GradedBasis, q: GradedMap, omega: OddSymplecticForm
) -> ValidationReport:
    """Check all axioms of a dg odd-symplectic space; failures become report rows."""
    if q.domain != basis or q.codomain != basis:
        raise StructuralError("q must be an endomorphism of the given basis")
    if omega.basis != basis:
        raise StructuralError("omega must live on the given basis")

    report = ValidationReport()
    report.add("q-degree", q.degree == 1, f"declared degree {q.degree}")

    q2 = q.compose(q)
    report.add("q-squared", q2.is_zero(), f"nonzero at {sorted(q2.entries)}" if q2.entries else "")

    bad_deg = [
        (i, j) for (i, j) in omega.entries if basis.degree(i) + basis.degree(j) != 1
    ]
    report.add("omega-degree", not bad_deg, f"degree sum != 1 at {sorted(bad_deg)}" if bad_deg else "")

    bad_sym = []
    seen = set()
    for i in range(basis.dim):
        for j in range(basis.dim):
            if (i, j) in seen:
                continue
            seen.add((i, j))
            seen.add((j, i))
            sign = -((-1) ** (basis.parity(i) * basis.parity(j)))
            if omega.value(i, j) != sign * omega.value(j, i):
                bad_sym.append((j, i) if i < j else (i, j))
    report.add(
        "omega-antisymmetry", not bad_sym, f"violated at {sorted(bad_sym)}" if bad_sym else ""
    )

    report.add("omega-nondegenerate", omega.nondegenerate)

    bad_compat = []
    for i in range(basis.dim):
        qi = q.column(i)
        for j in range(basis.dim):
            qj = q.column(j)
            lhs = sum((v * omega.value(k, j) for k, v in qi.items()), Q0)
            rhs = sum((v * omega.value(i, k) for k, v in qj.items()), Q0)
            if lhs + (-1) ** basis.parity(i) * rhs != 0:
                bad_compat.append((i, j))
    report.add(
        "omega-q-compatibility",
        not bad_compat,
        f"omega(Qx,y)+(-1)^|x| omega(x,Qy) != 0 at {bad_compat}" if bad_compat else "",
    )
    return report


# ---------------------------------------------------------------------------
# Hodge decomposition


@dataclass
class HodgeSplit:
    """Adapted basis splitting V into homology, boundaries, and a coexact part.

    The adapted basis is ordered H-part, then B-part, then C-part.  The
    differential vanishes on the H and B parts and maps the C part
    isomorphically onto the B part with matrix q_block.  The form is block
    diagonal: omega_h on H, and the off-diagonal pairing omega_bc between
    B and C.
    """

    original: GradedBasis
    omega_original: OddSymplecticForm
    adapted_basis: GradedBasis
    h_indices: tuple[int, ...]
    b_indices: tuple[int, ...]
    c_indices: tuple[int, ...]
    change_of_basis: GradedMap  # original coords -> adapted coords
    from_adapted: GradedMap  # adapted coords -> original coords
    q_block: dict[tuple[int, int], Fraction]  # Q(c_i) = sum_k q_block[k,i] b_k
    q_block_inv: dict[tuple[int, int], Fraction]
    omega_h: dict[tuple[int, int], Fraction]
    omega_bc: dict[tuple[int, int], Fraction]  # omega(b_k, c_i)
    omega_bc_inv: dict[tuple[int, int], Fraction]  # (c, b) indexed inverse
    omega_adapted: OddSymplecticForm
    small_basis: GradedBasis
    omega_small: OddSymplecticForm
    q_adapted: GradedMap

    @property
    def dim_h(self) -> int:
        return len(self.h_indices)


def _homogeneous(vec: list[Fraction], basis: GradedBasis) -> int:
    degs = {basis.degree(i) for i, v in enumerate(vec) if v != 0}
    if len(degs) != 1:
        raise InternalError(f"vector not homogeneous: degrees {degs}")
    return degs.pop()


def hodge_decompose(
    basis: GradedBasis, q: GradedMap, omega: OddSymplecticForm
) -> HodgeSplit:
    """Split (V, Q, omega) into H + B + C with Lagrangian B and C.

    Deterministic: image and kernel bases come from Gaussian elimination
    with leftmost pivots, H is the reduction of the kernel basis against
    the image, C starts from the pivot-column preimages and is corrected
    first into the omega-complement of H and then, pair by pair, into a
    Lagrangian complement of B.
    """
    check = validate_dg_symplectic(basis, q, omega)
    if not check.passed:
        names = ", ".join(c.name for c in check.failures())
        raise PreconditionError(f"not a valid dg symplectic space: {names}")

    n = basis.dim
    qd = q.dense()

    # B = Im Q: row echelon basis of the columns of Q.
    cols = [[qd[r][c] for r in range(n)] for c in range(n)]
    b_rows, _ = _rref([col for col in cols if any(x != 0 for x in col)])

    # Ker Q, then H = kernel vectors reduced against B (nonzero remainders).
    kernel = _nullspace(qd, n)
    h_rows: list[list[Fraction]] = []
    for v in kernel:
        rem = _reduce_against(v, b_rows + h_rows)
        if any(x != 0 for x in rem):
            h_rows.append(rem)

    # C candidates: pivot columns of Q give a complement of the kernel.
    _, pivot_domain = _rref(qd)
    c_rows = [[Q1 if i == c else Q0 for i in range(n)] for c in pivot_domain]

    # Push candidates into the omega-complement of H (does not move Q-images).
    if h_rows:
        gram = [[omega.pair(_as_vec(hj), _as_vec(hk)) for hj in h_rows] for hk in h_rows]
        for idx, d in enumerate(c_rows):
            rhs = [omega.pair(_as_vec(d), _as_vec(hk)) for hk in h_rows]
            coeffs = _solve([[gram[k][j] for j in range(len(h_rows))] for k in range(len(h_rows))], rhs)
            if coeffs is None:
                raise InternalError("omega restricted to H is degenerate")
            c_rows[idx] = [
                d[i] - sum((coeffs[j] * h_rows[j][i] for j in range(len(h_rows))), Q0)
                for i in range(n)
            ]

    # Make the candidates Lagrangian by symplectic Gram-Schmidt with
    # corrections from B (adding boundaries changes neither Q-images nor
    # the pairing against B, since omega vanishes on B).
    accepted: list[list[Fraction]] = []
    for d in c_rows:
        if accepted:
            rows = [[omega.pair(_as_vec(bj), _as_vec(ci)) for bj in b_rows] for ci in accepted]
            rhs = [omega.pair(_as_vec(d), _as_vec(ci)) for ci in accepted]
            t = _solve(rows, rhs)
            if t is None:
                raise InternalError("Lagrangian correction system unsolvable")
            d = [d[i] - sum((t[j] * b_rows[j][i] for j in range(len(b_rows))), Q0) for i in range(n)]
        accepted.append(d)
    c_rows = accepted

    # Assemble the adapted basis: H then B then C, with fresh names.
    vectors = h_rows + b_rows + c_rows
    if len(vectors) != n:
        raise InternalError("adapted basis has wrong dimension")
    names = (
        [f"a{i + 1}" for i in range(len(h_rows))]
        + [f"b{i + 1}" for i in range(len(b_rows))]
        + [f"c{i + 1}" for i in range(len(c_rows))]
    )
    degrees = [_homogeneous(v, basis) for v in vectors]
    adapted = GradedBasis.make(list(zip(names, degrees)))
    nh, nb, nc = len(h_rows), len(b_rows), len(c_rows)
    h_idx = tuple(range(nh))
    b_idx = tuple(range(nh, nh + nb))
    c_idx = tuple(range(nh + nb, n))

    # from_adapted columns are the adapted vectors in original coordinates.
    m_dense = [[vectors[a][i] for a in range(n)] for i in range(n)]
    t_dense = _matrix_inverse(m_dense)
    if t_dense is None:
        raise InternalError("adapted basis is singular")
    from_adapted = GradedMap.from_dense(adapted, basis, m_dense, 0)
    change_of_basis = GradedMap.from_dense(basis, adapted, t_dense, 0)

    # Transported form and differential.
    om_ad: dict[tuple[int, int], Fraction] = {}
    for a in range(n):
        for b in range(n):
            val = omega.pair(_as_vec(vectors[a]), _as_vec(vectors[b]))
            if val != 0:
                om_ad[(a, b)] = val
    omega_adapted = OddSymplecticForm(adapted, om_ad)
    if not omega_adapted.nondegenerate:
        raise InternalError("transported form is degenerate")

    q_ad = change_of_basis.compose(q.compose(from_adapted))

    for (j, i) in q_ad.entries:
        if i not in c_idx or j not in b_idx:
            raise InternalError("differential does not map C into B in the adapted basis")
    for (a, b) in om_ad:
        in_h = (a in h_idx, b in h_idx)
        if in_h == (True, False) or in_h == (False, True):
            raise InternalError("H is not omega-orthogonal to B+C")
        if a in b_idx and b in b_idx:
            raise InternalError("omega does not vanish on B")
        if a in c_idx and b in c_idx:
            raise InternalError("omega does not vanish on C")

    q_block = {(j - nh, i - nh - nb): v for (j, i), v in q_ad.entries.items()}
    q_inv_dense = _matrix_inverse(_dense_from(q_block, nb, nc))
    if q_inv_dense is None:
        raise InternalError("Q restricted to C is singular")
    q_block_inv = _sparse_from(q_inv_dense)

    omega_h = {
        (a, b): v for (a, b), v in om_ad.items() if a in h_idx and b in h_idx
    }
    omega_bc = {
        (a - nh, b - nh - nb): v
        for (a, b), v in om_ad.items()
        if a in b_idx and b in c_idx
    }
    bc_inv_dense = _matrix_inverse(_dense_from(omega_bc, nb, nc))
    if bc_inv_dense is None:
        raise InternalError("omega pairing between B and C is degenerate")
    omega_bc_inv = _sparse_from(bc_inv_dense)

    small_basis = GradedBasis(adapted.elements[:nh])
    omega_small = OddSymplecticForm(small_basis, dict(omega_h))
    if nh and not omega_small.nondegenerate:
        raise InternalError("omega restricted to H is degenerate")

    return HodgeSplit(
        original=basis,
        omega_original=omega,
        adapted_basis=adapted,
        h_indices=h_idx,
        b_indices=b_idx,
        c_indices=c_idx,
        change_of_basis=change_of_basis,
        from_adapted=from_adapted,
        q_block=q_block,
        q_block_inv=q_block_inv,
        omega_h=omega_h,
        omega_bc=omega_bc,
        omega_bc_inv=omega_bc_inv,
        omega_adapted=omega_adapted,
        small_basis=small_basis,
        omega_small=omega_small,
        q_adapted=q_ad,
    )


def _as_vec(row: list[Fraction]) -> dict[int, Fraction]:
    return {i: v for i, v in enumerate(row) if v != 0}


def _reduce_against(v: list[Fraction], rows: list[list[Fraction]]) -> list[Fraction]:
    v = list(v)
    for row in rows:
        lead = next((i for i, x in enumerate(row) if x != 0), None)
        if lead is not None and v[lead] != 0:
            f = v[lead] / row[lead]
            v = [x - f * y for x, y in zip(v, row)]
    return v


def _dense_from(sparse: dict[tuple[int, int], Fraction], nrows: int, ncols: int):
    m = [[Q0] * ncols for _ in range(nrows)]
    for (j, i), v in sparse.items():
        m[j][i] = v
    return m


def _sparse_from(dense) -> dict[tuple[int, int], Fraction]:
    return {
        (j, i): dense[j][i]
        for j in range(len(dense))
        for i in range(len(dense[0]))
        if dense[j][i] != 0
    }


def contracting_homotopy(split: HodgeSplit) -> GradedMap:
    """Degree -1 map with ip - 1 = Qk + kQ: sends each boundary to minus its preimage."""
    nh, nb = len(split.h_indices), len(split.b_indices)
    entries: dict[tuple[int, int], Fraction] = {}
    for (i_loc, k_loc), v in split.q_block_inv.items():
        entries[(nh + nb + i_loc, nh + k_loc)] = -v
    return GradedMap(split.adapted_basis, split.adapted_basis, entries, -1)
