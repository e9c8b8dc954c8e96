"""Validation, splitting, and the contracting homotopy on the vector-space side."""

from fractions import Fraction

import pytest

from bvtransfer import (
    GradedBasis,
    GradedMap,
    OddSymplecticForm,
    PreconditionError,
    StructuralError,
    contracting_homotopy,
    hodge_decompose,
    validate_dg_symplectic,
)
from conftest import random_space, seeded_rng


def test_zero_differential_passes(f2):
    basis, _, omega = f2
    q = GradedMap.zero(basis)
    assert validate_dg_symplectic(basis, q, omega).passed


def test_f1_passes(f1):
    assert validate_dg_symplectic(*f1).passed


def test_broken_antisymmetry_is_reported(f1):
    basis, q, _ = f1
    bad = OddSymplecticForm(basis, {(0, 1): Fraction(1), (1, 0): Fraction(1)})
    report = validate_dg_symplectic(basis, q, bad)
    row = report["omega-antisymmetry"]
    assert not row.passed
    assert "(1, 0)" in row.detail


def test_malformed_matrix_is_structural_error(f1):
    basis, _, _ = f1
    with pytest.raises(StructuralError):
        GradedMap(basis, basis, {(5, 0): Fraction(1)}, 1)
    with pytest.raises(StructuralError):
        # entry incompatible with the declared degree
        GradedMap(basis, basis, {(1, 0): Fraction(1)}, 1)


def test_degenerate_form_is_reported():
    basis = GradedBasis.make([("x", 0), ("y", 1), ("u", 0), ("v", 1)])
    omega = OddSymplecticForm.from_pairs(basis, [(0, 1, 1)])
    report = validate_dg_symplectic(basis, GradedMap.zero(basis), omega)
    assert not report["omega-nondegenerate"].passed


def test_hodge_zero_differential_keeps_everything(f2):
    basis, _, omega = f2
    split = hodge_decompose(basis, GradedMap.zero(basis), omega)
    assert len(split.h_indices) == basis.dim
    assert not split.b_indices and not split.c_indices


def test_hodge_f1_contractible(f1):
    split = hodge_decompose(*f1)
    assert not split.h_indices
    assert split.q_block == {(0, 0): Fraction(1)}
    assert split.omega_bc == {(0, 0): Fraction(1)}


def test_hodge_f2_by_hand(f2):
    # worked through the elimination by hand: a1, a2 span the homology,
    # b spans the image, c the complement, with unit blocks
    split = hodge_decompose(*f2)
    names = [split.adapted_basis.name(i) for i in split.h_indices]
    assert names == ["a1", "a2"]
    assert split.q_block == {(0, 0): Fraction(1)}
    assert split.omega_h == {(0, 1): Fraction(1), (1, 0): Fraction(-1)}


def test_hodge_requires_valid_input(f1):
    basis, q, _ = f1
    bad = OddSymplecticForm(basis, {(0, 1): Fraction(1), (1, 0): Fraction(1)})
    with pytest.raises(PreconditionError):
        hodge_decompose(basis, q, bad)


def test_contracting_homotopy_zero_differential(f2):
    basis, _, omega = f2
    split = hodge_decompose(basis, GradedMap.zero(basis), omega)
    assert contracting_homotopy(split).is_zero()


def test_contracting_homotopy_f1(f1):
    split = hodge_decompose(*f1)
    k = contracting_homotopy(split)
    b_global = split.b_indices[0]
    c_global = split.c_indices[0]
    assert k.entries == {(c_global, b_global): Fraction(-1)}
    assert k.degree == -1


def test_contracting_homotopy_f2(f2):
    split = hodge_decompose(*f2)
    k = contracting_homotopy(split)
    assert all(j in split.c_indices and i in split.b_indices for (j, i) in k.entries)


def _identity(basis):
    return GradedMap(
        basis, basis, {(i, i): Fraction(1) for i in range(basis.dim)}, 0
    )


def _dense_equal(m, entries):
    return m.entries == {k: v for k, v in entries.items() if v != 0}


@pytest.mark.parametrize("seed", range(10))
def test_projectors_split_identity(seed):
    """The three projectors are idempotent, orthogonal, and sum to one."""
    rng = seeded_rng(seed)
    basis, q, omega = random_space(
        rng, n_hpairs=rng.randint(0, 2), n_blocks2=rng.randint(0, 1), n_quads=1
    )
    split = hodge_decompose(basis, q, omega)
    ad = split.adapted_basis
    k = contracting_homotopy(split)
    q_ad = split.q_adapted

    ip = GradedMap(
        ad, ad, {(i, i): Fraction(1) for i in split.h_indices}, 0
    )
    minus_kq = k.compose(q_ad)
    minus_kq = GradedMap(ad, ad, {kk: -v for kk, v in minus_kq.entries.items()}, 0)
    minus_qk = q_ad.compose(k)
    minus_qk = GradedMap(ad, ad, {kk: -v for kk, v in minus_qk.entries.items()}, 0)

    projectors = [ip, minus_kq, minus_qk]
    total = {}
    for p in projectors:
        assert p.compose(p).entries == p.entries
        for kk, v in p.entries.items():
            total[kk] = total.get(kk, Fraction(0)) + v
    for a in projectors:
        for b in projectors:
            if a is not b:
                assert a.compose(b).is_zero()
    assert total == _identity(ad).entries

    # homotopy equation on the vector-space side
    lhs = {}
    for kk, v in q_ad.compose(k).entries.items():
        lhs[kk] = lhs.get(kk, Fraction(0)) + v
    for kk, v in k.compose(q_ad).entries.items():
        lhs[kk] = lhs.get(kk, Fraction(0)) + v
    expected = dict(ip.entries)
    for i in range(ad.dim):
        expected[(i, i)] = expected.get((i, i), Fraction(0)) - 1
    assert {kk: v for kk, v in lhs.items() if v != 0} == {
        kk: v for kk, v in expected.items() if v != 0
    }


@pytest.mark.parametrize("seed", range(10))
def test_block_structure_and_compatibility(seed):
    rng = seeded_rng(seed + 100)
    basis, q, omega = random_space(rng, n_hpairs=1, n_blocks2=1, n_quads=1)
    split = hodge_decompose(basis, q, omega)
    ad = split.adapted_basis
    assert split.change_of_basis.degree == 0

    # exact inverse
    comp = split.change_of_basis.compose(split.from_adapted)
    assert comp.entries == {(i, i): Fraction(1) for i in range(ad.dim)}

    # conjugated form has the displayed block structure
    h, b, c = set(split.h_indices), set(split.b_indices), set(split.c_indices)
    for (i, j), v in split.omega_adapted.entries.items():
        in_h = (i in h) + (j in h)
        assert in_h in (0, 2)
        if in_h == 0:
            assert not (i in b and j in b)
            assert not (i in c and j in c)
    # the lower-left block is minus the transpose of the upper-right one
    nh, nb = len(split.h_indices), len(split.b_indices)
    for (k_loc, i_loc), v in split.omega_bc.items():
        assert split.omega_adapted.value(nh + nb + i_loc, nh + k_loc) == -v

    # differential compatibility with the form survives the change of basis
    for i in range(ad.dim):
        qi = split.q_adapted.column(i)
        for j in range(ad.dim):
            qj = split.q_adapted.column(j)
            lhs = sum(
                (v * split.omega_adapted.value(kk, j) for kk, v in qi.items()),
                Fraction(0),
            )
            rhs = sum(
                (v * split.omega_adapted.value(i, kk) for kk, v in qj.items()),
                Fraction(0),
            )
            assert lhs + (-1) ** ad.parity(i) * rhs == 0
