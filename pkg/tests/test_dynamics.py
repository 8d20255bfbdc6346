"""Nilmanifold actions, reduction, sampling, and test functions."""

import math
from fractions import Fraction

import numpy as np
import pytest

from nilflow.dynamics import (
    NilPoint,
    NilSystem,
    TestFunction,
    act,
    act_array,
    eval_fn,
    eval_fn_array,
    function_from_json_dict,
    function_to_json_dict,
    fundamental_distance,
    haar_array,
    heisenberg3,
    reduce_array,
    reduce_point,
    sample_haar,
    system_from_json_dict,
    system_to_json_dict,
    torus,
)
from nilflow.lie_core import GroupElement, bch_product, identity, make_builtin

H3 = make_builtin("heisenberg", dim=3)


def h3_elt(x=0, y=0, z=0):
    return GroupElement(H3, (Fraction(x), Fraction(y), Fraction(z)))


def torus_elt(*coords):
    alg = make_builtin("abelian", dim=len(coords))
    return GroupElement(alg, tuple(Fraction(c) for c in coords))


# ----------------------------------------------------------------------
# construction and points


def test_system_kinds():
    assert torus(2).dim == 2
    assert heisenberg3().dim == 3
    with pytest.raises(ValueError):
        NilSystem("klein_bottle")
    with pytest.raises(ValueError):
        NilSystem("heisenberg3", acting_matrix=[[1], [0], [0]])


def test_nilpoint_rejects_out_of_domain():
    with pytest.raises(ValueError):
        NilPoint((0.5, 1.0))
    with pytest.raises(ValueError):
        NilPoint((-0.1,))


# ----------------------------------------------------------------------
# action


def test_torus_rotation():
    sys = torus(1)
    out = act(sys, torus_elt(Fraction(1, 4)), NilPoint((0.9,)))
    assert abs(out.coords[0] - 0.15) < 1e-12


def test_identity_fixes_points():
    for sys in (torus(2), heisenberg3()):
        x = sample_haar(sys, seed=5, n=1)[0]
        assert act(sys, identity(sys.algebra), x) == x


def test_action_matches_bch_product():
    sys = heisenberg3()
    gx = h3_elt(x=1)
    gy = h3_elt(y=Fraction(1, 3))
    for x in sample_haar(sys, seed=9, n=20):
        split = act(sys, gx, act(sys, gy, x))
        joined = act(sys, bch_product(gx, gy), x)
        assert fundamental_distance(sys, split, joined) < 1e-12


def test_action_law_on_random_elements():
    sys = heisenberg3()
    rng = np.random.default_rng(31)
    pts = haar_array(sys, seed=8, n=50)
    for _ in range(10):
        g = GroupElement(H3, tuple(Fraction(v).limit_denominator(64) for v in rng.uniform(-2, 2, 3)))
        h = GroupElement(H3, tuple(Fraction(v).limit_denominator(64) for v in rng.uniform(-2, 2, 3)))
        split = act_array(sys, g, act_array(sys, h, pts))
        joined = act_array(sys, bch_product(g, h), pts)
        gaps = np.abs(split - joined)
        gaps = np.minimum(gaps, 1.0 - gaps)
        assert gaps.max() < 1e-10


def test_algebra_mismatch_rejected():
    with pytest.raises(ValueError):
        act(torus(2), torus_elt(Fraction(1, 2)), NilPoint((0.1, 0.2)))


def test_acting_matrix_drives_two_frequencies():
    sys = torus(2, acting_matrix=[[1], [2]])
    aux = torus_elt(Fraction(1, 8))
    out = act(sys, aux, NilPoint((0.0, 0.0)))
    assert abs(out.coords[0] - 0.125) < 1e-15
    assert abs(out.coords[1] - 0.25) < 1e-15


# ----------------------------------------------------------------------
# reduction


def test_reduction_is_exactly_idempotent():
    for sys in (torus(3), heisenberg3()):
        pts = np.random.default_rng(12).uniform(-4, 4, size=(200, sys.dim))
        once = reduce_array(sys, pts)
        twice = reduce_array(sys, once)
        assert np.array_equal(once, twice)
        assert np.all((once >= 0.0) & (once < 1.0))


def test_reduction_kills_lattice_translates():
    sys = heisenberg3()
    pts = haar_array(sys, seed=3, n=40)
    for gamma in ((1, 0, 0), (0, 1, 0), (0, 0, 1), (2, -1, 3)):
        a, b, c = (float(v) for v in gamma)
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        shifted = np.stack(
            [x + a, y + b, z + c + 0.5 * (x * b - y * a)],
            axis=1,
        )
        reduced = reduce_array(sys, shifted)
        gaps = np.abs(reduced - pts)
        gaps = np.minimum(gaps, 1.0 - gaps)
        assert gaps.max() < 1e-12


def test_reduce_point_wraps_negatives():
    p = reduce_point(torus(1), [-0.25])
    assert abs(p.coords[0] - 0.75) < 1e-15


# ----------------------------------------------------------------------
# Haar sampling


def test_sample_haar_counts_and_determinism():
    sys = torus(2)
    assert sample_haar(sys, seed=1, n=0) == []
    a = haar_array(sys, seed=7, n=100)
    b = haar_array(sys, seed=7, n=100)
    assert np.array_equal(a, b)


def test_character_mean_is_small():
    sys = torus(1)
    n = 100_000
    pts = haar_array(sys, seed=2, n=n)
    vals = eval_fn_array(TestFunction("torus_character", (1,)), pts)
    assert abs(vals.mean()) <= 4 / math.sqrt(n)


def test_haar_invariance_under_fixed_translation():
    sys = heisenberg3()
    n = 50_000
    pts = haar_array(sys, seed=4, n=n)
    f = TestFunction("heis_abelian", (1, 1))
    g = h3_elt(x=Fraction(2, 7), y=Fraction(1, 5), z=Fraction(3, 11))
    before = eval_fn_array(f, pts)
    after = eval_fn_array(f, act_array(sys, g, pts))
    diff = after - before
    se = diff.std(ddof=1) / math.sqrt(n)
    assert abs(diff.mean()) <= 5 * se + 1e-12


# ----------------------------------------------------------------------
# test functions


def test_zero_frequency_is_constant_one():
    f = TestFunction("torus_character", (0, 0))
    assert eval_fn(f, NilPoint((0.3, 0.8))) == 1.0
    assert not f.mean_zero


def test_character_values():
    f = TestFunction("torus_character", (1,))
    assert abs(eval_fn(f, NilPoint((0.25,)))) < 1e-15
    g = TestFunction("torus_character", (2, 3))
    assert abs(eval_fn(g, NilPoint((0.5, 0.5))) - (-1.0)) < 1e-12


def test_functions_are_bounded_by_one():
    pts2 = haar_array(torus(2), seed=6, n=500)
    pts3 = haar_array(heisenberg3(), seed=6, n=500)
    cases = [
        (TestFunction("torus_character", (3, -2), "sin"), pts2),
        (TestFunction("heis_abelian", (1, 4)), pts3),
        (TestFunction("heis_vertical", (0, 1, 2), "sin"), pts3),
    ]
    for f, pts in cases:
        vals = eval_fn_array(f, pts)
        assert np.all(np.abs(vals) <= 1.0 + 1e-15)


def test_vertical_function_uses_central_coordinate():
    f = TestFunction("heis_vertical", (0, 0, 1))
    assert abs(eval_fn(f, NilPoint((0.9, 0.9, 0.0))) - 1.0) < 1e-15
    assert abs(eval_fn(f, NilPoint((0.9, 0.9, 0.5))) - (-1.0)) < 1e-12


def test_fn_arity_validation():
    with pytest.raises(ValueError):
        TestFunction("heis_abelian", (1, 2, 3))
    with pytest.raises(ValueError):
        TestFunction("torus_character", (1,), "tan")
    with pytest.raises(ValueError):
        eval_fn(TestFunction("torus_character", (1, 2)), NilPoint((0.1,)))


# ----------------------------------------------------------------------
# JSON round trips


def test_system_json_round_trip():
    for sys in (torus(2), heisenberg3(), torus(2, acting_matrix=[["1/2"], ["3"]])):
        again = system_from_json_dict(system_to_json_dict(sys))
        assert again == sys


def test_function_json_round_trip():
    f = TestFunction("heis_vertical", (1, 0, 2), "sin")
    assert function_from_json_dict(function_to_json_dict(f)) == f
    assert function_from_json_dict({"kind": "heis_vertical", "freq": [1, 0, 2], "part": "sin"}) == f
