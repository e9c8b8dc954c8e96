"""Shared fixtures: the two pinned small complexes and random generators."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from bvtransfer import (
    Action,
    BVContext,
    FormalSeries,
    GradedBasis,
    GradedMap,
    OddSymplecticForm,
    from_adapted,
    hodge_decompose,
    sfree_of,
    twist_action,
)
from bvtransfer.graded import _matrix_inverse


@pytest.fixture
def f1():
    """Contractible two-element complex: one boundary, one preimage."""
    basis = GradedBasis.make([("b", 1), ("c", 0)])
    q = GradedMap(basis, basis, {(0, 1): Fraction(1)}, 1)
    omega = OddSymplecticForm.from_pairs(basis, [(0, 1, 1)])
    return basis, q, omega


@pytest.fixture
def f2():
    """Two homology generators next to a contractible pair."""
    basis = GradedBasis.make([("a1", 0), ("a2", 1), ("b", 1), ("c", 0)])
    q = GradedMap(basis, basis, {(2, 3): Fraction(1)}, 1)
    omega = OddSymplecticForm.from_pairs(basis, [(0, 1, 1), (2, 3, 1)])
    return basis, q, omega


def f1_cubic_action(basis, max_weight, t=Fraction(1)):
    """Interaction t * c^3 on the contractible fixture; solves the master
    equation for every t (no boundary-dual variable appears)."""
    s_free = FormalSeries.from_terms(basis, max_weight, [(0, (1, 1), Fraction(-1, 2))])
    s_int = FormalSeries.from_terms(basis, max_weight, [(0, (1, 1, 1), t)])
    return Action(s_free, s_int)


def f2_cubic_action(basis, max_weight, t=Fraction(1)):
    """Interaction t * a1 * c^2 coupling a homology direction to the pair."""
    s_free = FormalSeries.from_terms(basis, max_weight, [(0, (3, 3), Fraction(-1, 2))])
    s_int = FormalSeries.from_terms(basis, max_weight, [(0, (0, 3, 3), t)])
    return Action(s_free, s_int)


def random_space(rng, n_hpairs=1, n_blocks2=1, n_quads=1, dmin=-2, dmax=2, conjugate=True):
    """Random valid complex with a compatible form, built from valid blocks
    and hidden behind a random degree-0 change of basis."""
    elements, q_entries, om_pairs = [], {}, []

    def add(name, deg):
        elements.append((name, deg))
        return len(elements) - 1

    for t in range(n_hpairs):
        d = rng.randint(dmin, dmax)
        i = add(f"h{t}p", d)
        j = add(f"h{t}m", 1 - d)
        om_pairs.append((i, j, Fraction(rng.choice([1, -1, 2]))))
    for t in range(n_blocks2):
        c = add(f"s{t}c", 0)
        b = add(f"s{t}b", 1)
        q_entries[(b, c)] = Fraction(rng.choice([1, 2, -1]))
        om_pairs.append((b, c, Fraction(rng.choice([1, -1, 3]))))
    for t in range(n_quads):
        d = rng.randint(dmin, dmax)
        c = add(f"q{t}c", d)
        b = add(f"q{t}b", d + 1)
        cb = add(f"q{t}C", -d)
        bb = add(f"q{t}B", 1 - d)
        q1 = Fraction(rng.choice([1, 2, -1]))
        q2 = Fraction(rng.choice([1, -1]))
        r = Fraction(rng.choice([1, -1, 2]))
        q_entries[(b, c)] = q1
        q_entries[(bb, cb)] = q2
        om_pairs.append((b, cb, r))
        om_pairs.append((c, bb, Fraction(-((-1) ** (d % 2))) * q1 * r / q2))

    basis = GradedBasis.make(elements)
    n = basis.dim
    q = GradedMap(basis, basis, dict(q_entries), 1)
    omega = OddSymplecticForm.from_pairs(basis, om_pairs)
    if not conjugate:
        return basis, q, omega

    s = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    same_deg = [
        (i, j)
        for i in range(n)
        for j in range(n)
        if i != j and basis.degree(i) == basis.degree(j)
    ]
    for _ in range(2 * n):
        if not same_deg:
            break
        i, j = rng.choice(same_deg)
        f = Fraction(rng.choice([1, -1, 2]))
        for k in range(n):
            s[k][i] += f * s[k][j]
    s_inv = _matrix_inverse(s)
    qd = q.dense()
    q_new = [
        [
            sum(s_inv[a][b] * sum(qd[b][c] * s[c][d] for c in range(n)) for b in range(n))
            for d in range(n)
        ]
        for a in range(n)
    ]
    om_new = {}
    for i in range(n):
        for j in range(n):
            v = sum(s[k][i] * omega.value(k, l) * s[l][j] for k in range(n) for l in range(n))
            if v:
                om_new[(i, j)] = v
    return (
        basis,
        GradedMap.from_dense(basis, basis, q_new, 1),
        OddSymplecticForm(basis, om_new),
    )


def random_omega(rng, dim_pairs=2, dmin=-2, dmax=2, conjugate=True):
    """Random nondegenerate degree minus-one form (no differential)."""
    basis, _, omega = random_space(
        rng, n_hpairs=dim_pairs, n_blocks2=0, n_quads=0, dmin=dmin, dmax=dmax,
        conjugate=conjugate,
    )
    return basis, omega


def monomial_pool(basis, max_len, parities=None):
    """All normal-ordered monomials up to the given length (the empty one included)."""
    parities = parities or [basis.parity(i) for i in range(basis.dim)]
    pool = [()]
    for n in range(1, max_len + 1):
        for tup in itertools.combinations_with_replacement(range(basis.dim), n):
            if any(tup[a] == tup[a + 1] and parities[tup[a]] for a in range(n - 1)):
                continue
            pool.append(tup)
    return pool


def random_twist_generator(rng, basis, max_weight, count=2, min_weight=1):
    """Random odd-degree positive-weight series used to deform solutions."""
    par = [basis.parity(i) for i in range(basis.dim)]
    deg = [basis.degree(i) for i in range(basis.dim)]
    cands = []
    for n in range(1, 4):
        for tup in itertools.combinations_with_replacement(range(basis.dim), n):
            if any(tup[a] == tup[a + 1] and par[tup[a]] for a in range(n - 1)):
                continue
            if -sum(deg[i] for i in tup) != -1:
                continue
            for g in range(0, 2):
                if min_weight <= 2 * g + n <= max_weight:
                    cands.append((g, tup))
    rng.shuffle(cands)
    triples = [
        (g, tup, Fraction(rng.choice([1, -1, 2]), rng.choice([1, 2, 3])))
        for g, tup in cands[:count]
    ]
    return FormalSeries.from_terms(basis, max_weight, triples)


def twisted_solution(rng, basis, q, omega, max_weight, rounds=2):
    """Master-equation solution generated by deforming the free action."""
    split = hodge_decompose(basis, q, omega)
    ctx = BVContext(basis, omega, max_weight)
    action = Action(
        from_adapted(split, sfree_of(split, max_weight)),
        FormalSeries.zero(basis, max_weight),
    )
    for _ in range(rounds):
        gen = random_twist_generator(rng, basis, max_weight)
        if not gen.is_zero():
            action = twist_action(ctx, action, gen)
    return split, action


def exact_conjugated_solution(rng, max_weight, n_hpairs=1, n_blocks2=1, n_quads=1):
    """Polynomial-exact master-equation solution in disguised coordinates.

    Built on an unconjugated block space from dual variables whose pairing
    partners never appear (so every residual term vanishes identically),
    then pushed through a random degree-0 change of basis.
    """
    basis, q, omega = random_space(
        rng, n_hpairs, n_blocks2, n_quads, dmin=-1, dmax=1, conjugate=False
    )
    deg = [basis.degree(i) for i in range(basis.dim)]
    par = [basis.parity(i) for i in range(basis.dim)]
    # safe duals: homology halves and preimage-type vectors; their pairing
    # partners (the other halves and the boundary duals) are never used
    safe = [i for i, (name, _) in enumerate(basis.elements) if name.endswith(("p", "c", "C"))]
    cands = []
    for n in (3, 4):
        for tup in itertools.combinations_with_replacement(safe, n):
            if any(tup[a] == tup[a + 1] and par[tup[a]] for a in range(n - 1)):
                continue
            if sum(deg[i] for i in tup) != 0:
                continue
            cands.append((0, tup))
    for i in safe:
        if deg[i] == 0:
            cands.append((1, (i,)))
    rng.shuffle(cands)
    triples = [
        (g, tup, Fraction(rng.choice([1, -1, 2]), rng.choice([1, 2, 3])))
        for g, tup in cands[: rng.randint(1, 3)]
    ]
    s_int = FormalSeries.from_terms(basis, max_weight, triples)

    # conjugate the whole problem by a random degree-preserving map
    n = basis.dim
    s = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    same_deg = [
        (i, j) for i in range(n) for j in range(n) if i != j and deg[i] == deg[j]
    ]
    for _ in range(2 * n):
        if not same_deg:
            break
        i, j = rng.choice(same_deg)
        f = Fraction(rng.choice([1, -1, 2]))
        for k in range(n):
            s[k][i] += f * s[k][j]
    s_inv = _matrix_inverse(s)
    qd = q.dense()
    q_new = [
        [
            sum(s_inv[a][b] * sum(qd[b][c] * s[c][d] for c in range(n)) for b in range(n))
            for d in range(n)
        ]
        for a in range(n)
    ]
    om_new = {}
    for i in range(n):
        for j in range(n):
            v = sum(s[k][i] * omega.value(k, l) * s[l][j] for k in range(n) for l in range(n))
            if v:
                om_new[(i, j)] = v
    q2 = GradedMap.from_dense(basis, basis, q_new, 1)
    om2 = OddSymplecticForm(basis, om_new)
    expansion = {i: [(a, s[i][a]) for a in range(n) if s[i][a] != 0] for i in range(n)}
    from bvtransfer.series import substitute

    s_int2 = substitute(s_int, expansion, basis)
    split2 = hodge_decompose(basis, q2, om2)
    s_free2 = from_adapted(split2, sfree_of(split2, max_weight))
    return basis, q2, om2, Action(s_free2, s_int2), split2


def seeded_rng(seed):
    return random.Random(seed)
