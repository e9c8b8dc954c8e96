"""Operation tensors, the action dictionary, and the identity equivalence."""

import itertools
from fractions import Fraction

import pytest

from bvtransfer import (
    Action,
    BVContext,
    FormalSeries,
    GradedBasis,
    LambdaOps,
    OddSymplecticForm,
    PreconditionError,
    action_to_lambda,
    equivalence_check,
    hodge_decompose,
    lambda_to_action,
    main_identity_residual,
    qme_residual,
    sfree_of,
)
from bvtransfer.series import normal_order
from conftest import (
    exact_conjugated_solution,
    f1_cubic_action,
    monomial_pool,
    seeded_rng,
)

W = 6


def f1_data():
    basis = GradedBasis.make([("b", 1), ("c", 0)])
    omega = OddSymplecticForm.from_pairs(basis, [(0, 1, 1)])
    return basis, omega


def q_ops(basis, omega):
    """Only the differential: inputs c, output b."""
    return LambdaOps(basis, omega, {(0, 1): {((1,), 0): Fraction(1)}})


def test_convention_lock_differential_gives_free_action(f1):
    basis, q, omega = f1
    ops = q_ops(basis, omega)
    action = lambda_to_action(ops, omega, W)
    split = hodge_decompose(basis, q, omega)
    assert action.s_free.terms == sfree_of(split, W).terms
    assert action.s_int.is_zero()


def test_zero_ops_give_zero_action():
    basis, omega = f1_data()
    ops = LambdaOps(basis, omega, {})
    action = lambda_to_action(ops, omega, W)
    assert action.s_free.is_zero() and action.s_int.is_zero()


def test_arity_zero_is_rejected():
    basis, omega = f1_data()
    with pytest.raises(PreconditionError):
        LambdaOps(basis, omega, {(1, 0): {((), 0): Fraction(1)}})


def test_degree_violations_are_rejected():
    basis, omega = f1_data()
    from bvtransfer import StructuralError

    with pytest.raises(StructuralError):
        # output degree must be input degree plus one
        LambdaOps(basis, omega, {(0, 1): {((0,), 0): Fraction(1)}})


def test_cubic_coefficients_match_bruteforce_isomorphism():
    """The multiset shortcut in the packaging equals the full ordered sum."""
    basis, omega = f1_data()
    ops = LambdaOps(
        basis, omega,
        {(0, 1): {((1,), 0): Fraction(1)}, (0, 2): {((1, 1), 0): Fraction(5, 7)}},
    )
    action = lambda_to_action(ops, omega, W)
    parities = [basis.parity(i) for i in range(basis.dim)]
    for n, g in ((2, 0), (3, 0)):
        brute = {}
        for tup in itertools.product(range(basis.dim), repeat=n):
            s_val = ops.pair_with(tup[0], g, n - 1, tup[1:])
            if s_val == 0:
                continue
            sign, mono = normal_order(tup, parities)
            if sign == 0:
                continue
            key = (g, mono)
            brute[key] = brute.get(key, Fraction(0)) + sign * s_val
        brute = {
            k: v / Fraction(__import__("math").factorial(n))
            for k, v in brute.items()
            if v != 0
        }
        got = {
            k: v for k, v in action.total().terms.items() if k[0] == g and len(k[1]) == n
        }
        assert got == brute, (g, n)


def test_ops_round_trip_through_the_action():
    rng = seeded_rng(42)
    for _ in range(6):
        basis, q, omega, action, _ = exact_conjugated_solution(rng, W)
        ops = action_to_lambda(action, omega, W)
        assert ops.check_cyclic().passed
        back = lambda_to_action(ops, omega, W)
        # constants and linear terms carry no operations; none are present here
        assert back.total() == action.total()
        again = action_to_lambda(back, omega, W)
        assert again.tensors == ops.tensors


def test_action_to_lambda_recovers_the_differential(f1):
    basis, q, omega = f1
    action = f1_cubic_action(basis, W, Fraction(0))
    ops = action_to_lambda(action, omega, W)
    assert ops.tensors[(0, 1)] == {((1,), 0): Fraction(1)}


def test_zero_action_gives_zero_ops(f1):
    basis, _, omega = f1
    action = Action(FormalSeries.zero(basis, W), FormalSeries.zero(basis, W))
    assert action_to_lambda(action, omega, W).tensors == {}


def test_reconstructed_pairing_is_symmetric_in_all_slots():
    rng = seeded_rng(43)
    basis, q, omega, action, _ = exact_conjugated_solution(rng, W)
    ops = action_to_lambda(action, omega, W)
    par = [basis.parity(i) for i in range(basis.dim)]
    for (g, n) in ops.tensors:
        for tup in itertools.combinations_with_replacement(range(basis.dim), n + 1):
            base = ops.pair_with(tup[0], g, n, tup[1:])
            # swap every adjacent pair once
            for k in range(n):
                seq = list(tup)
                seq[k], seq[k + 1] = seq[k + 1], seq[k]
                swapped = ops.pair_with(seq[0], g, n, tuple(seq[1:]))
                sign = (-1) ** (par[tup[k]] * par[tup[k + 1]])
                assert swapped == sign * base, (g, n, tup, k)


def test_non_cyclic_tensor_is_detected():
    basis = GradedBasis.make([("x", 0), ("y", 1), ("u", 0), ("v", 1)])
    omega = OddSymplecticForm.from_pairs(basis, [(0, 1, 1), (2, 3, 1)])
    # lambda(x) = v is degree-legal but pairs asymmetrically
    ops = LambdaOps(basis, omega, {(0, 1): {((0,), 3): Fraction(1)}})
    assert not ops.check_cyclic().passed


def test_main_identity_differential_squares(f1):
    basis, _, omega = f1
    ops = q_ops(basis, omega)
    for v in range(basis.dim):
        assert main_identity_residual(ops, omega, 0, 1, (v,)) == {}


def test_main_identity_is_the_derivation_property_at_two_inputs():
    """At genus zero with two inputs the identity is the product rule of the
    differential over the binary operation, written out by hand."""
    basis, omega = f1_data()
    ops = LambdaOps(
        basis, omega,
        {(0, 1): {((1,), 0): Fraction(1)}, (0, 2): {((1, 1), 0): Fraction(5, 7)}},
    )
    par = [basis.parity(i) for i in range(basis.dim)]

    def vec_add(acc, vec, c):
        for k, v in vec.items():
            acc[k] = acc.get(k, Fraction(0)) + c * v
        return {k: v for k, v in acc.items() if v != 0}

    for v1 in range(basis.dim):
        for v2 in range(basis.dim):
            got = main_identity_residual(ops, omega, 0, 2, (v1, v2))
            expected: dict = {}
            inner = ops.evaluate(0, 2, (v1, v2))
            for j, c in inner.items():
                expected = vec_add(expected, ops.evaluate(0, 1, (j,)), c)
            for j, c in ops.evaluate(0, 1, (v1,)).items():
                expected = vec_add(expected, ops.evaluate(0, 2, (j, v2)), c)
            sign = (-1) ** par[v1]
            for j, c in ops.evaluate(0, 1, (v2,)).items():
                expected = vec_add(expected, ops.evaluate(0, 2, (v1, j)), sign * c)
            assert got == expected, (v1, v2)


def test_main_identity_loop_term_at_genus_one():
    """With no compositions available the genus-one scalar identity is the
    halved trace of the binary operation through the inverse form."""
    basis, omega = f1_data()
    lam2 = {((1, 1), 0): Fraction(3, 4)}
    ops = LambdaOps(basis, omega, {(0, 2): lam2})
    got = main_identity_residual(ops, omega, 1, 0, ())
    par = [basis.parity(i) for i in range(basis.dim)]
    expected: dict = {}
    for (r, s), w in omega.inverse_entries.items():
        vec = ops.evaluate(0, 2, (s, r))
        for j, v in vec.items():
            c = Fraction(1, 2) * ((-1) ** par[s]) * w * v
            expected[j] = expected.get(j, Fraction(0)) + c
    expected = {k: v for k, v in expected.items() if v != 0}
    assert got == expected


def test_equivalence_on_solutions():
    rng = seeded_rng(44)
    for _ in range(5):
        basis, q, omega, action, _ = exact_conjugated_solution(rng, 5)
        ops = action_to_lambda(action, omega, 5)
        report = equivalence_check(ops, omega, 5)
        assert report.passed, [c.name for c in report.failures()]
        # a solution: every identity residual and every coefficient vanish
        for c in report.checks:
            if c.name.startswith("matched-"):
                assert "zero: True" in c.detail


def test_equivalence_pattern_on_non_solutions():
    """Residuals and coefficients vanish together, never one-sidedly."""
    basis = GradedBasis.make([("x", -1), ("y", 2), ("b", 1), ("c", 0)])
    omega = OddSymplecticForm.from_pairs(basis, [(0, 1, 1), (2, 3, 1)])
    w = 5
    s_free = FormalSeries.from_terms(basis, w, [(0, (3, 3), Fraction(-1, 2))])
    rng = seeded_rng(45)
    found_failing = 0
    for _ in range(8):
        pool = [
            m for m in monomial_pool(basis, 4)
            if len(m) >= 3 and FormalSeries.from_terms(basis, w, [(0, m, 1)]).degree() == 0
        ]
        triples = [
            (0, rng.choice(pool), Fraction(rng.randint(-2, 2) or 1))
            for _ in range(rng.randint(1, 3))
        ]
        action = Action(s_free, FormalSeries.from_terms(basis, w, triples))
        ops = action_to_lambda(action, omega, w)
        report = equivalence_check(ops, omega, w)
        assert report.passed, [c.detail for c in report.failures()]
        ctx = BVContext(basis, omega, w)
        if not qme_residual(ctx, lambda_to_action(ops, omega, w)).is_zero():
            found_failing += 1
    assert found_failing > 0  # the sweep saw genuine non-solutions


def test_equivalence_trivial_beyond_differential(f2):
    basis, q, omega = f2
    ops = LambdaOps(basis, omega, {(0, 1): {((3,), 2): Fraction(1)}})
    report = equivalence_check(ops, omega, 5)
    assert report.passed
    for c in report.checks:
        if c.name.startswith("matched-"):
            assert "zero: True" in c.detail
