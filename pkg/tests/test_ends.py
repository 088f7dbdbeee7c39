import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simplecoarse.coarsemaps import CollarSpace
from simplecoarse.ends import (
    Budget,
    EndRelation,
    Ray,
    RelationKind,
    Verdict,
    axis_ray,
    conjunction,
    end_class_count,
    end_tree,
    equivalent,
    extend_ray,
    ray_from_function,
    EQUIVALENT,
    INCONCLUSIVE,
    DISTINGUISHED,
)
from simplecoarse.errors import ExtensionError, InputError, NotASimpleEndError
from simplecoarse.higson import sin_log_field
from simplecoarse.space import FiniteGraph, FreeGroupGraph, ZdGraph, cycle_space

Z = ZdGraph(1)
Z2 = ZdGraph(2)
F2 = FreeGroupGraph(2)


def zray(fn, length=64, label=""):
    return ray_from_function(Z, lambda n: (fn(n),), length, label=label)


def test_metric_bounded_gap_is_equivalent():
    v = equivalent(EndRelation.metric(Z), zray(lambda n: n), zray(lambda n: n + 5))
    assert v.equivalent
    assert v.evidence["bound"] == 6


def test_metric_opposite_directions_distinguished():
    v = equivalent(EndRelation.metric(Z), zray(lambda n: n), zray(lambda n: -n))
    assert v.distinguished
    n = v.witness["index"]
    assert v.witness["distance"] == 2 * n


def test_short_prefix_inconclusive():
    v = equivalent(EndRelation.metric(Z), zray(lambda n: n, 4), zray(lambda n: -n, 4))
    assert v.inconclusive


def test_identical_prefixes_equivalent_even_when_short():
    x = zray(lambda n: n, 3)
    assert equivalent(EndRelation.metric(Z), x, x).equivalent


def test_carrier_mismatch_rejected():
    with pytest.raises(InputError):
        equivalent(EndRelation.metric(Z), axis_ray(Z2, (1, 0), 16), axis_ray(Z2, (0, 1), 16))


def test_freudenthal_vs_metric_on_grid():
    x, y = axis_ray(Z2, (1, 0), 64), axis_ray(Z2, (0, 1), 64)
    assert equivalent(EndRelation.freudenthal(Z2), x, y).equivalent
    assert equivalent(EndRelation.metric(Z2), x, y).distinguished


def test_freudenthal_separates_ends_of_line():
    v = equivalent(EndRelation.freudenthal(Z), zray(lambda n: n), zray(lambda n: -n))
    assert v.distinguished
    assert v.witness["component_x"] != v.witness["component_y"]


def test_gromov_on_free_group():
    rel = EndRelation.gromov(F2)
    a, b = axis_ray(F2, "a", 64), axis_ray(F2, "b", 64)
    ab = ray_from_function(F2, lambda n: "a" + "b" * n, 64)
    assert equivalent(rel, a, b).distinguished
    assert equivalent(rel, b, ab).distinguished
    a2 = ray_from_function(F2, lambda n: "a" * (n + 3), 64)
    assert equivalent(rel, a, a2).equivalent


def test_group_left_and_metric_agree_on_bounded_shift():
    x, y = axis_ray(Z2, (1, 1), 64), axis_ray(Z2, (1, 1), 64, offset=(2, -1))
    assert equivalent(EndRelation.group_left(Z2), x, y).equivalent
    assert equivalent(EndRelation.metric(Z2), x, y).equivalent


def test_group_left_requires_group():
    with pytest.raises(InputError):
        EndRelation.group_left(FiniteGraph([(0, 1)], 0))


def test_c0_needs_vanishing_distance():
    rel = EndRelation.c0(Z)
    x = zray(lambda n: n)
    late = zray(lambda n: n if n > 5 else 100 + n)
    assert equivalent(rel, x, late).equivalent
    assert equivalent(rel, x, zray(lambda n: n + 1)).distinguished


def test_function_family_with_sinlog():
    rel = EndRelation.function_family(Z, [sin_log_field()])
    # sin(log) varies slowly, so shifted rays agree to vanishing tolerance
    long = Budget(schedule=(0.5, 0.25, 0.125))
    x = zray(lambda n: n, 256)
    y = zray(lambda n: n + 1, 256)
    assert equivalent(rel, x, y, long).equivalent


def test_boundary_metric_on_collar():
    C = CollarSpace(cycle_space(8))
    rel = EndRelation.boundary_metric(C)
    x = ray_from_function(C, lambda n: (0, 1 / (n + 1)), 64)
    y = ray_from_function(C, lambda n: (0, 1 / (n + 2)), 64)
    z = ray_from_function(C, lambda n: (4, 1 / (n + 1)), 64)
    assert equivalent(rel, x, y).equivalent
    assert equivalent(rel, x, z).distinguished
    with pytest.raises(InputError):
        EndRelation.boundary_metric(Z)


def test_budget_validation():
    with pytest.raises(InputError):
        Budget(schedule=())
    with pytest.raises(InputError):
        equivalent(EndRelation.c0(Z), zray(lambda n: n), zray(lambda n: n + 1), Budget(schedule=(0.1, 0.5)))


def test_conjunction_precedence():
    e, i, d = EQUIVALENT(), INCONCLUSIVE(), DISTINGUISHED({"index": 0})
    assert conjunction([e, i]).inconclusive
    assert conjunction([e, i, d]).distinguished
    assert conjunction([]).equivalent


def test_escape_certificate():
    x = zray(lambda n: n, 10)
    assert x.escape_scale == 9
    assert x.last_visit(4) == 4
    assert x.escapes() is Verdict.EQUIVALENT
    assert zray(lambda n: 0, 10).escapes() is Verdict.DISTINGUISHED


def test_extend_ray():
    x = axis_ray(F2, "a", 8)
    assert len(extend_ray(x, 50)) == 50
    assert extend_ray(x, 50)[49] == "a" * 49
    with pytest.raises(NotASimpleEndError) as info:
        extend_ray(zray(lambda n: 0, 4), 20)
    assert info.value.radius == 0
    with pytest.raises(ExtensionError):
        extend_ray(Ray(((0,), (1,)), Z), 5)
    with pytest.raises(InputError):
        extend_ray(x, 3)


def test_end_tree_counts_and_exports():
    t = end_tree(Z, (0,), (1, 2, 4, 8))
    assert [t.count(r) for r in t.schedule] == [2, 2, 2, 2]
    for r in (2, 4, 8):
        # refinements are identities up to relabeling: a bijection onto the previous level
        assert sorted(t.refinement[r].values(), key=repr) == sorted(t.levels[t.schedule[t.schedule.index(r) - 1]], key=repr)
    assert [end_tree(Z2, (0, 0), (1, 2, 4)).count(r) for r in (1, 2, 4)] == [1, 1, 1]
    f = end_tree(F2, "", (1, 2, 3))
    assert [f.count(r) for r in (1, 2, 3)] == [12, 36, 108]
    assert end_class_count(f, 1) == 12
    json.dumps(f.to_json())
    dot = f.to_dot()
    assert dot.startswith("digraph") and dot.count("->") == 12 + 36 + 108


def test_end_tree_finite_graph_has_no_ends():
    g = FiniteGraph([(0, 1), (1, 2)], 0)
    assert end_class_count(end_tree(g, 0, (0,)), 0) == 0


def test_end_tree_errors():
    with pytest.raises(InputError):
        end_tree(Z, (0,), ())
    with pytest.raises(InputError):
        end_tree(Z, (0,), (2, 1))
    with pytest.raises(InputError):
        end_class_count(end_tree(Z, (0,), (1,)), 3)


# properties

shifts = st.integers(-6, 6)
slopes = st.sampled_from([1, -1, 2, -2])


def linear_zray(a, b, L=48):
    return zray(lambda n: a * n + b, L)


Z_KINDS = [EndRelation.metric(Z), EndRelation.c0(Z), EndRelation.group_left(Z), EndRelation.gromov(Z), EndRelation.freudenthal(Z)]


@settings(max_examples=40, deadline=None)
@given(slopes, shifts, slopes, shifts, st.sampled_from(range(len(Z_KINDS))))
def test_symmetry(a, b, c, d, k):
    rel = Z_KINDS[k]
    x, y = linear_zray(a, b), linear_zray(c, d)
    assert equivalent(rel, x, y).status == equivalent(rel, y, x).status


@settings(max_examples=40, deadline=None)
@given(slopes, shifts, st.integers(8, 60), st.sampled_from(range(len(Z_KINDS))))
def test_reflexivity(a, b, L, k):
    x = linear_zray(a, b, L)
    assert equivalent(Z_KINDS[k], x, x).equivalent


@settings(max_examples=40, deadline=None)
@given(slopes, shifts, slopes, shifts, st.integers(1, 3))
def test_distinguished_survives_subsequence(a, b, c, d, step):
    rel = EndRelation.metric(Z)
    x, y = linear_zray(a, b, 96), linear_zray(c, d, 96)
    v = equivalent(rel, x, y)
    if v.distinguished:
        n = v.witness["index"]
        idx = [i for i in range(n % step, 96, step)]
        assert n in idx
        assert not equivalent(rel, x.subsequence(idx), y.subsequence(idx)).equivalent


grid_dirs = st.sampled_from([(1, 0), (0, 1), (-1, 0), (1, 1), (2, 1), (-1, 2)])
grid_offsets = st.tuples(st.integers(-3, 3), st.integers(-3, 3))


@settings(max_examples=40, deadline=None)
@given(grid_dirs, grid_offsets, grid_dirs, grid_offsets)
def test_metric_implies_freudenthal_on_grid(u, p, w, q):
    x, y = axis_ray(Z2, u, 48, p), axis_ray(Z2, w, 48, q)
    if equivalent(EndRelation.metric(Z2), x, y).equivalent:
        assert not equivalent(EndRelation.freudenthal(Z2), x, y).distinguished


@settings(max_examples=40, deadline=None)
@given(grid_dirs, grid_offsets, grid_dirs, grid_offsets)
def test_group_left_matches_metric_on_grid(u, p, w, q):
    x, y = axis_ray(Z2, u, 48, p), axis_ray(Z2, w, 48, q)
    a = equivalent(EndRelation.metric(Z2), x, y)
    b = equivalent(EndRelation.group_left(Z2), x, y)
    if not (a.inconclusive or b.inconclusive):
        assert a.status == b.status


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["a", "A", "b", "B", "ab", "aB"]), st.sampled_from(["", "a", "b", "B"]))
def test_end_tree_refinement_covers_sampled_rays(word, offset):
    t = end_tree(F2, "", (1, 2, 3))
    x = axis_ray(F2, word, 24, offset)
    # the ray's far point lands in a component at each level, and the parent
    # of its level-r component is its level-(r-1) component
    p = x[-1]
    for prev, r in zip(t.schedule, t.schedule[1:]):
        c = t.component_of(r, p)
        assert c in t.levels[r]
        assert t.refinement[r][c] == t.component_of(prev, p)


def test_relation_kinds_enumerated():
    assert {k.value for k in RelationKind} == {
        "metric", "c0", "boundary_metric", "function_family", "group_left", "gromov", "freudenthal"
    }
