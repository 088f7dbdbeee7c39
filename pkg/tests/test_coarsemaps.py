import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simplecoarse.coarsemaps import (
    CollarSpace,
    PointMap,
    are_close,
    boundary_limits,
    collar_ray,
    cycle_coordinate_fields,
    extend_from_boundary,
    identity_map,
    is_bornologous_sampled,
    is_coarse_bornologous_sampled,
    linear_map,
    make_net,
    nets_from_heights,
    tabulated_map,
    totally_bounded_nets,
    word_homomorphism,
)
from simplecoarse.ends import EndRelation, axis_ray
from simplecoarse.errors import CoverageError, InputError, ResolutionError
from simplecoarse.space import FiniteMetricSpace, FreeGroupGraph, ZdGraph, cycle_space

Z = ZdGraph(1)
F2 = FreeGroupGraph(2)
METRIC = EndRelation.metric(Z)
A8 = cycle_space(8)
C8 = CollarSpace(A8, 64)
BM = EndRelation.boundary_metric(C8)


def zmap(fn, tag=""):
    return PointMap(lambda p: (fn(p[0]),), Z, Z, tag)


def pair(k=1, L=64):
    return axis_ray(Z, (1,), L), axis_ray(Z, (1,), L, (k,))


def test_bornologous_examples():
    assert is_bornologous_sampled(linear_map([[2]], Z, Z), METRIC, METRIC, [pair()]).equivalent
    v = is_bornologous_sampled(zmap(lambda n: n * n), METRIC, METRIC, [pair()])
    assert v.distinguished
    assert is_bornologous_sampled(identity_map(Z), METRIC, METRIC, [pair(3)], basis=(1, 2)).equivalent


def test_bornologous_needs_equivalent_pairs():
    with pytest.raises(InputError):
        is_bornologous_sampled(identity_map(Z), METRIC, METRIC, [(axis_ray(Z, (1,), 32), axis_ray(Z, (-1,), 32))])


def test_coarse_bornologous_examples():
    rays = [axis_ray(Z, (1,), 64), axis_ray(Z, (1,), 64, (2,)), axis_ray(Z, (-1,), 64)]
    assert is_coarse_bornologous_sampled(linear_map([[2]], Z, Z), METRIC, METRIC, rays).equivalent
    v = is_coarse_bornologous_sampled(zmap(lambda n: 0), METRIC, METRIC, rays)
    assert v.distinguished
    assert is_coarse_bornologous_sampled(zmap(lambda n: n // 2), METRIC, METRIC, rays).equivalent


def test_are_close_examples():
    rays = [axis_ray(Z, (1,), 64), axis_ray(Z, (-1,), 64)]
    f = identity_map(Z)
    assert are_close(f, zmap(lambda n: n + 7), METRIC, rays).equivalent
    assert are_close(f, zmap(lambda n: 2 * n), METRIC, rays).distinguished
    assert are_close(f, f, METRIC, rays).equivalent


def test_word_homomorphism_and_table():
    h = word_homomorphism({"a": "ab", "b": "b"}, F2, F2)
    assert h("aB") == "a"
    assert h("A") == "BA"
    t = tabulated_map({(0,): (1,)}, Z, Z)
    assert t((0,)) == (1,)
    with pytest.raises(InputError):
        t((5,))


def test_composition_of_maps():
    f = linear_map([[2]], Z, Z)
    g = linear_map([[1]], Z, Z, offset=(3,))
    assert f.then(g)((5,)) == (13,)


def test_totally_bounded_nets_examples():
    nets = totally_bounded_nets(C8, 4)
    assert len(nets[3].points) <= 8
    assert all(p[1] == 0.25 for p in nets[3].points)
    for n, net in enumerate(nets, start=1):
        assert net.hausdorff <= 2 / n + 1e-12
        assert net.clearance > 0
    assert [nt.clearance for nt in nets] == sorted((nt.clearance for nt in nets), reverse=True)
    point = CollarSpace(FiniteMetricSpace(("p",), np.zeros((1, 1))))
    assert len(totally_bounded_nets(point, 1)[0].points) == 1
    two = CollarSpace(FiniteMetricSpace(("p", "q"), np.array([[0.0, 1.0], [1.0, 0.0]])))
    assert [len(n.points) for n in totally_bounded_nets(two, 4)[1:]] == [2, 2, 2]
    with pytest.raises(CoverageError):
        totally_bounded_nets(C8, 2, sampler=lambda b, r: None)


def test_extension_examples():
    nets = nets_from_heights(C8, [1 / n for n in range(2, 70)])
    f = extend_from_boundary(lambda a: a, C8, C8, nets, (0, 1.0))
    for a in A8.points:
        y = f((a, 0.05))
        assert A8.d(y[0], a) <= 0.05 and y[1] <= 0.1
    assert f((3, 1.0)) == (0, 1.0)
    collapse = extend_from_boundary(lambda a: 5, C8, C8, nets, (0, 1.0))
    assert {collapse((a, 1 / 20))[0] for a in A8.points} == {5}


def test_extension_resolution_error():
    coarse = nets_from_heights(C8, [0.5])
    f = extend_from_boundary(lambda a: a, C8, C8, coarse, (0, 1.0))
    with pytest.raises(ResolutionError) as info:
        f((0, 1 / 10))
    assert info.value.needed_m == 9


def test_boundary_limits_and_fields():
    x = collar_ray(C8, lambda n: 2, lambda n: 1 / (n + 1), 40)
    lims = boundary_limits(identity_map(C8), [x], tol=0.1)
    assert lims[0]["limit"] == 2
    vals = [f((2, 0.5)) for f in cycle_coordinate_fields(C8)]
    assert vals == pytest.approx([0.5, 1.0, 0.5])


def test_make_net_rejects_bad_points():
    with pytest.raises(InputError):
        make_net(C8, [(0, 0.0)])
    with pytest.raises(InputError):
        make_net(C8, [])


# properties

rotations = st.integers(0, 7)


def collar_rays():
    P = A8.points
    rays = [collar_ray(C8, lambda n, k=k: P[k], lambda n: 1 / (n + 2), 60, f"col{k}") for k in range(0, 8, 2)]
    rays.append(collar_ray(C8, lambda n: P[(n // 8) % 8], lambda n: 1 / (n + 2), 60, "slow"))
    return rays


@settings(max_examples=8, deadline=None)
@given(rotations)
def test_extension_of_uniformly_continuous_map_is_coarse(k):
    # a rotation of the cycle is an isometry, so the product extension
    # (a, t) -> (a + k, t) is uniformly continuous up to the boundary
    rot = PointMap(lambda p: ((p[0] + k) % 8, p[1]), C8, C8, f"rot{k}")
    assert is_coarse_bornologous_sampled(rot, BM, BM, collar_rays()).equivalent


@settings(max_examples=8, deadline=None)
@given(rotations, st.integers(2, 6), st.sampled_from([0, 3, 5]))
def test_extensions_unique_up_to_closeness(k, start, y0):
    g = lambda a: (a + k) % 8  # noqa: E731
    f1 = extend_from_boundary(g, C8, C8, totally_bounded_nets(C8, 64), (0, 1.0))
    f2 = extend_from_boundary(g, C8, C8, nets_from_heights(C8, [1 / n for n in range(start, start + 80)]), (y0, 1.0))
    assert are_close(f1, f2, BM, collar_rays()).equivalent


@settings(max_examples=8, deadline=None)
@given(rotations, rotations)
def test_composition_stays_coarse(j, k):
    f = PointMap(lambda p: ((p[0] + j) % 8, p[1]), C8, C8)
    g = PointMap(lambda p: ((3 * p[0] + k) % 8, p[1]), C8, C8)
    rays = collar_rays()
    assert is_coarse_bornologous_sampled(f, BM, BM, rays).equivalent
    if is_coarse_bornologous_sampled(g, BM, BM, rays).equivalent:
        assert is_coarse_bornologous_sampled(f.then(g), BM, BM, rays).equivalent


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.integers(-5, 5), st.integers(1, 3), st.integers(-5, 5))
def test_composition_on_line(a, b, c, d):
    f, g = linear_map([[a]], Z, Z, (b,)), linear_map([[c]], Z, Z, (d,))
    rays = [axis_ray(Z, (1,), 64), axis_ray(Z, (1,), 64, (2,)), axis_ray(Z, (-1,), 64)]
    assert is_coarse_bornologous_sampled(f, METRIC, METRIC, rays).equivalent
    assert is_coarse_bornologous_sampled(g, METRIC, METRIC, rays).equivalent
    assert is_coarse_bornologous_sampled(f.then(g), METRIC, METRIC, rays).equivalent
