import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simplecoarse.asdim import (
    arc_cover,
    build_collar_cover,
    check_certificates,
    diagonal_escape,
    interval_cover,
    lebesgue_radius,
    shrinking_arc_covers,
    slice_check,
    table_function,
    verify_uniform_cover,
)
from simplecoarse.coarsemaps import CollarSpace
from simplecoarse.errors import DepthError, DimensionWitnessError, InputError, PreconditionError, SizingError
from simplecoarse.largescale import Cover
from simplecoarse.space import FiniteMetricSpace, cycle_space

POINT = FiniteMetricSpace(("p",), np.zeros((1, 1)))
A8 = cycle_space(8)
TWO = FiniteMetricSpace((0, 1), np.array([[0.0, 1.0], [1.0, 0.0]]))


def shrinking_boxes(A):
    def cols(j):
        return arc_cover(A, max(1, min(len(A), int(len(A) / (2 * j))))).elements

    return cols


def test_arc_cover_on_cycle():
    V = arc_cover(A8, 3)
    assert len(V) == 4
    w = verify_uniform_cover(A8, V, 1)
    assert w.multiplicity == 2
    assert w.mesh == pytest.approx(0.25)


def test_whole_space_cover():
    w = verify_uniform_cover(A8, [frozenset(A8.points)], 0)
    assert w.multiplicity == 1
    assert w.lebesgue == float("inf")


def test_singletons_of_two_points():
    w = verify_uniform_cover(TWO, [frozenset({0}), frozenset({1})], 0)
    assert w.lebesgue == 1.0
    assert w.covers_balls(0.5)
    assert not w.covers_balls(1.0)


def test_verify_uniform_cover_errors():
    with pytest.raises(InputError):
        verify_uniform_cover(TWO, [frozenset({0})], 0)
    with pytest.raises(DimensionWitnessError) as info:
        verify_uniform_cover(A8, arc_cover(A8, 3, step=1), 1)
    assert info.value.multiplicity == 3


def test_lebesgue_matches_ball_scan():
    V = arc_cover(A8, 4).elements
    leb = lebesgue_radius(A8, V)
    w = verify_uniform_cover(A8, V, 1)
    # every ball strictly below the bound fits, the ball at the bound does not
    assert w.covers_balls(leb - 1e-9)
    assert not w.covers_balls(leb)


def run_collar(A, k):
    C = CollarSpace(A, 64)
    Vs = shrinking_arc_covers(A, k, 64)
    U = interval_cover(C, shrinking_boxes(A))
    return C, U, build_collar_cover(A, Vs, U, k, C)


def independent_checks(A, C, U, plan):
    grid = [(a, t) for t in C.depths if t > plan.w_floor for a in A.points]
    W = plan.elements(C.grid())
    mult = max(sum(p in w for w in W) for p in grid)
    assert mult <= 3 * plan.k + 3
    assert mult == plan.multiplicity
    assert all(a > b for a, b in zip(plan.mu, plan.mu[1:]))
    assert all(a < b for a, b in zip(plan.alpha, plan.alpha[1:]))
    covered = 0
    for e in U:
        if max(t for _, t in e) > plan.covered[0]:
            covered += 1
            assert any(e <= w for w in W)
    assert covered == plan.coarsening["checked"]


def test_collar_cover_over_point():
    C, U, plan = run_collar(POINT, 0)
    assert plan.multiplicity <= 3
    independent_checks(POINT, C, U, plan)


def test_collar_cover_over_cycle():
    C, U, plan = run_collar(A8, 1)
    assert plan.multiplicity <= 6
    independent_checks(A8, C, U, plan)
    assert plan.trace[0]["gap_reading"] == "absolute difference of consecutive levels"


def test_band_form_cover_coarsens_itself():
    C, U, plan = run_collar(POINT, 0)
    W = [w for w in plan.elements(C.grid()) if w]
    again = build_collar_cover(POINT, shrinking_arc_covers(POINT, 0, 64), Cover(tuple(W)), 0, C)
    assert again.multiplicity <= 3


def fixed_mesh_cover(A, depth):
    """Full slices plus vertical links: mesh 1/2 at every depth."""
    rows = [frozenset((a, 1 / j) for a in A.points) for j in range(1, depth + 1)]
    links = [frozenset({(a, 1 / j), (a, 1 / (j + 1))}) for a in A.points for j in range(1, depth)]
    return Cover(tuple(rows + links))


def test_collar_cover_preconditions():
    C = CollarSpace(A8, 16)
    fixed = fixed_mesh_cover(A8, 16)
    with pytest.raises(PreconditionError):
        build_collar_cover(A8, shrinking_arc_covers(A8, 1, 16), fixed, 1, C)
    with pytest.raises(DepthError):
        build_collar_cover(A8, shrinking_arc_covers(A8, 1, 16), interval_cover(C, shrinking_boxes(A8)), 1, C, steps=50)
    with pytest.raises(InputError):
        build_collar_cover(A8, shrinking_arc_covers(A8, 1, 4), interval_cover(C), 0, C)


def test_slice_check_examples():
    C = CollarSpace(A8, 64)
    U = interval_cover(C, shrinking_boxes(A8))
    v = slice_check(U, A8, 2, 1, C)
    assert v.equivalent and v.evidence["multiplicity"] <= 2
    P = CollarSpace(POINT, 16)
    # consecutive boxes overlap on every slice
    v = slice_check(interval_cover(P), POINT, 3, 0, P)
    assert v.distinguished and v.witness["multiplicity"] == 2
    assert slice_check(interval_cover(P), POINT, 3, 1, P).equivalent
    with pytest.raises(DepthError):
        slice_check(fixed_mesh_cover(A8, 16), A8, 4, 1, CollarSpace(A8, 16))


def test_diagonal_examples():
    res = diagonal_escape([lambda i, R: 0], 1)
    assert res.xi[0, 0] == 2
    assert res.certificates[0]["gap"] == 2
    two = diagonal_escape([lambda i, R: 0, lambda i, R: 5], 2)
    assert {(c["member"], c["R"]): c["gap"] for c in two.certificates} == {(0, 1): 2, (0, 2): 3, (1, 1): 2, (1, 2): 3}
    idx = diagonal_escape([lambda i, R: i], 4, rows=3)
    assert idx.xi.tolist() == [[i + R + 1 for R in range(1, 5)] for i in range(1, 4)]


def test_diagonal_errors():
    with pytest.raises(SizingError):
        diagonal_escape([lambda i, R: 0] * 3, 2, rows=2)
    with pytest.raises(InputError):
        diagonal_escape([], 2)
    with pytest.raises(InputError):
        diagonal_escape([lambda i, R: -1], 2)


# properties


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_diagonal_certificates_exact(size, rmax, seed):
    rng = np.random.default_rng(seed)
    S = [table_function(rng.integers(0, 1000, size=(size, rmax)).tolist()) for _ in range(size)]
    res = diagonal_escape(S, rmax)
    assert check_certificates(res, S)
    for c in res.certificates:
        i, R = c["cell"]
        # re-evaluate from the tables, independently of the stored values
        assert res.xi[i - 1, R - 1] - S[c["member"]](i, R) == R + 1


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 12), st.integers(1, 3))
def test_verify_uniform_cover_is_exhaustive(n, width):
    A = cycle_space(n)
    width = min(width, n)
    V = arc_cover(A, width)
    w = verify_uniform_cover(A, V, 2)
    brute = max(sum(p in e for e in V) for p in A.points)
    assert w.multiplicity == brute
    assert w.mesh == max(A.diameter(e) for e in V)


@settings(max_examples=10, deadline=None)
@given(st.sampled_from([1.0, 1.5, 2.0, 3.0]), st.sampled_from([0.5, 0.75, 0.9]))
def test_slice_check_monotone_in_radius(r, frac):
    # on a fixed slice, larger balls are easier to refine
    C = CollarSpace(A8, 64)
    U = interval_cover(C, shrinking_boxes(A8))
    v = slice_check(U, A8, r, 1, C)
    if v.equivalent:
        w = slice_check(U, A8, r * frac, 1, C)
        if (w.evidence or w.witness)["slice"] == v.evidence["slice"]:
            assert w.equivalent


@settings(max_examples=6, deadline=None)
@given(st.sampled_from([4, 6, 8, 10]))
def test_collar_cover_on_cycles(n):
    A = cycle_space(n)
    C, U, plan = run_collar(A, 1)
    independent_checks(A, C, U, plan)
