"""Sampled checks of map conditions (bornologous, coarse, close) and the
extension of boundary maps of collar spaces to their interiors.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass

from .ends import (
    DISTINGUISHED,
    EQUIVALENT,
    INCONCLUSIVE,
    Budget,
    EndRelation,
    Ray,
    ScaleVerdict,
    Verdict,
    conjunction,
    equivalent,
    ray_from_function,
)
from .errors import CoverageError, InputError, ResolutionError
from .higson import ScalarField
from .space import FiniteMetricSpace, LazyGraph, Point, bfs, free_reduce, point_key, to_jsonable

# --------------------------------------------------------------------------
# collars


class CollarSpace:
    """A x (0, 1] with the l1 metric d_A(a, a') + |t - t'|.

    Points are pairs ``(a, t)``.  Any t in (0, 1] is a valid point; the grid
    A x {1/j : j <= depth} is what finite scans enumerate.  ``size`` is 1/t,
    so a ray escapes exactly when its depth coordinate tends to 0.
    """

    def __init__(self, boundary: FiniteMetricSpace, depth: int = 64):
        if len(boundary) == 0:
            raise InputError("collar over an empty boundary")
        if depth < 1:
            raise InputError("depth must be at least 1")
        self.boundary = boundary
        self.depth = depth
        self.root = (boundary.points[0], 1.0)

    def __repr__(self):
        return f"CollarSpace(|A|={len(self.boundary)}, depth={self.depth})"

    @property
    def depths(self) -> tuple:
        return tuple(1.0 / j for j in range(1, self.depth + 1))

    def grid(self, depth: int | None = None) -> list:
        J = depth or self.depth
        return [(a, 1.0 / j) for j in range(1, J + 1) for a in self.boundary.points]

    def check(self, p) -> None:
        a, t = p
        if a not in self.boundary or not 0 < t:
            raise InputError(f"{p!r} is not a collar point")

    def distance(self, x, y) -> float:
        return self.boundary.d(x[0], y[0]) + abs(x[1] - y[1])

    def boundary_distance(self, p) -> float:
        return p[1]

    def size(self, p, base=None) -> float:
        return 1.0 / p[1]


def collar_ray(collar: CollarSpace, column: Callable[[int], Point], height: Callable[[int], float], length: int, label: str = "") -> Ray:
    return ray_from_function(collar, lambda n: (column(n), float(height(n))), length, label=label)


def cycle_coordinate_fields(collar: CollarSpace) -> list[ScalarField]:
    """Coordinates of the compactified collar of an n-point cycle, in [0, 1].

    The boundary point k sits at angle 2*pi*k/n; the fields are
    (1 + cos)/2, (1 + sin)/2 of the angle and the depth t (capped at 1).
    All three extend continuously to A x [0, 1].
    """
    n = len(collar.boundary)
    index = collar.boundary.index

    def ang(p):
        return 2 * math.pi * index[p[0]] / n

    return [
        ScalarField(lambda p: 0.5 * (1 + math.cos(ang(p))), "cos"),
        ScalarField(lambda p: 0.5 * (1 + math.sin(ang(p))), "sin"),
        ScalarField(lambda p: min(p[1], 1.0), "depth"),
    ]


# --------------------------------------------------------------------------
# maps


@dataclass(frozen=True, eq=False)
class PointMap:
    f: Callable[[Point], Point]
    source: object
    target: object
    tag: str = ""

    def __call__(self, p):
        return self.f(p)

    def __repr__(self):
        return f"PointMap({self.tag})"

    def then(self, other: PointMap) -> PointMap:
        """other after self."""
        return PointMap(lambda p: other.f(self.f(p)), self.source, other.target, f"{other.tag}.{self.tag}")


def identity_map(space) -> PointMap:
    return PointMap(lambda p: p, space, space, "id")


def linear_map(matrix: Sequence[Sequence[int]], source: LazyGraph, target: LazyGraph, offset=None) -> PointMap:
    rows = [tuple(int(c) for c in row) for row in matrix]
    off = tuple(offset) if offset is not None else (0,) * len(rows)

    def f(p):
        return tuple(sum(c * x for c, x in zip(row, p)) + o for row, o in zip(rows, off))

    return PointMap(f, source, target, f"linear{rows}")


def word_homomorphism(images: Mapping[str, str], source: LazyGraph, target: LazyGraph) -> PointMap:
    """Extend a letter map of a free group (images of a, b, ...) to words."""
    from .space import free_inverse

    table = dict(images)
    for x, w in list(table.items()):
        table.setdefault(free_inverse(x), free_inverse(w))

    def f(w):
        try:
            return free_reduce("".join(table[c] for c in w))
        except KeyError as e:
            raise InputError(f"no image for letter {e.args[0]!r}") from None

    return PointMap(f, source, target, f"hom{dict(images)}")


def tabulated_map(table: Mapping, source, target) -> PointMap:
    table = dict(table)

    def f(p):
        try:
            return table[p]
        except KeyError:
            raise InputError(f"map undefined at {p!r}") from None

    return PointMap(f, source, target, "table")


def _image(ray: Ray, fmap: PointMap) -> Ray:
    return ray.mapped(fmap.f, carrier=fmap.target, label=f"{fmap.tag}({ray.label})")


def _points_up_to(carrier, R: float) -> list:
    if isinstance(carrier, CollarSpace):
        return [p for p in carrier.grid() if carrier.size(p) <= R]
    return list(bfs(carrier, carrier.root, limit=int(R)))


def _bounded_sets_check(fmap: PointMap, basis: Sequence[float], truncation: float) -> list:
    """Images of basis balls are bounded; preimages (within a truncation of
    the source) stay off the truncation's outer edge."""
    src, tgt = fmap.source, fmap.target
    pts = _points_up_to(src, truncation)
    sizes = {p: src.size(p, src.root) for p in pts}
    edge = max(sizes.values())
    out = []
    for r in basis:
        ball = [p for p in pts if sizes[p] <= r]
        img = [fmap(p) for p in ball]
        reach = max((tgt.size(q, tgt.root) for q in img), default=0.0)
        if math.isinf(reach):
            out.append(DISTINGUISHED({"check": "image", "radius": r, "reach": reach}))
            continue
        pre = [p for p in pts if tgt.size(fmap(p), tgt.root) <= r]
        pre_reach = max((sizes[p] for p in pre), default=0.0)
        if pre_reach < edge:
            out.append(EQUIVALENT(radius=r, image_reach=reach, preimage_reach=pre_reach))
        else:
            far = max(pre, key=lambda p: (sizes[p], point_key(p)))
            out.append(
                DISTINGUISHED(
                    {"check": "preimage", "radius": r, "point": to_jsonable(far), "size": sizes[far], "truncation": edge}
                )
            )
    return out


def _pair_check(fmap, relX, relY, x, y, budget) -> ScaleVerdict:
    if not equivalent(relX, x, y, budget).equivalent:
        raise InputError(f"pair ({x!r}, {y!r}) is not EQUIVALENT in the source")
    fx, fy = _image(x, fmap), _image(y, fmap)
    if Verdict.DISTINGUISHED in (fx.escapes(), fy.escapes()):
        return EQUIVALENT(rule="images are not both simple ends")
    return equivalent(relY, fx, fy, budget)


def is_bornologous_sampled(
    fmap: PointMap,
    relX: EndRelation,
    relY: EndRelation,
    pairs: Sequence[tuple[Ray, Ray]],
    basis: Sequence[float] = (),
    truncation: float | None = None,
    budget: Budget | None = None,
) -> ScaleVerdict:
    """Equivalent pairs map to equivalent pairs (or to non-simple ends), and
    the basis balls have bounded images."""
    parts, labels = [], []
    if basis:
        for k, v in enumerate(_bounded_images(fmap, basis, truncation)):
            parts.append(v)
            labels.append(f"basis {k}")
    for k, (x, y) in enumerate(pairs):
        parts.append(_pair_check(fmap, relX, relY, x, y, budget))
        labels.append(f"pair {k}")
    return conjunction(parts, labels)


def _bounded_images(fmap, basis, truncation):
    src, tgt = fmap.source, fmap.target
    truncation = truncation or 2 * max(basis)
    pts = _points_up_to(src, truncation)
    out = []
    for r in basis:
        img = [fmap(p) for p in pts if src.size(p, src.root) <= r]
        reach = max((tgt.size(q, tgt.root) for q in img), default=0.0)
        out.append(
            EQUIVALENT(radius=r, image_reach=reach)
            if math.isfinite(reach)
            else DISTINGUISHED({"check": "image", "radius": r})
        )
    return out


def is_coarse_bornologous_sampled(
    fmap: PointMap,
    relX: EndRelation,
    relY: EndRelation,
    rays: Sequence[Ray],
    basis: Sequence[float] = (1, 2, 4),
    truncation: float | None = None,
    budget: Budget | None = None,
    pairs: Sequence[tuple[Ray, Ray]] | None = None,
) -> ScaleVerdict:
    """Simple ends map to simple ends, equivalence is preserved, and
    preimages of basis balls are bounded at the scale of a source truncation.

    ``pairs`` defaults to every pair of ``rays`` that is EQUIVALENT under
    ``relX``.  ``truncation`` defaults to 16 * max(basis) + 16 (for collars,
    the collar depth).
    """
    if truncation is None:
        truncation = fmap.source.depth if isinstance(fmap.source, CollarSpace) else 16 * max(basis) + 16
    parts, labels = [], []
    for k, v in enumerate(_bounded_sets_check(fmap, basis, truncation)):
        parts.append(v)
        labels.append(f"basis {basis[k]}")
    for k, x in enumerate(rays):
        fx = _image(x, fmap)
        status = fx.escapes()
        if status is Verdict.DISTINGUISHED:
            parts.append(DISTINGUISHED({"check": "simple end", "ray": k, "image_sizes_tail": fx.sizes[-3:].tolist()}))
        elif status is Verdict.INCONCLUSIVE:
            parts.append(INCONCLUSIVE(check="simple end", ray=k))
        else:
            parts.append(EQUIVALENT(ray=k))
        labels.append(f"ray {k}")
    if pairs is None:
        pairs = []
        for i in range(len(rays)):
            for j in range(i + 1, len(rays)):
                if equivalent(relX, rays[i], rays[j], budget).equivalent:
                    pairs.append((rays[i], rays[j]))
    for k, (x, y) in enumerate(pairs):
        parts.append(_pair_check(fmap, relX, relY, x, y, budget))
        labels.append(f"pair {k}")
    return conjunction(parts, labels)


def are_close(fmap: PointMap, gmap: PointMap, relY: EndRelation, rays: Sequence[Ray], budget: Budget | None = None) -> ScaleVerdict:
    parts = [equivalent(relY, _image(x, fmap), _image(x, gmap), budget) for x in rays]
    return conjunction(parts, [f"ray {k}" for k in range(len(rays))])


def boundary_limits(fmap: PointMap, rays: Sequence[Ray], tol: float) -> list[dict]:
    """Boundary limit of f along each ray (collar targets only).

    A limit is reported when the last half of the image ray has boundary
    coordinates within ``tol`` of the final one and depth below ``tol``.
    """
    tgt = fmap.target
    if not isinstance(tgt, CollarSpace):
        raise InputError("boundary limits need a collar target")
    out = []
    for k, x in enumerate(rays):
        img = [fmap(p) for p in x.prefix]
        tail = img[len(img) // 2 :]
        last = tail[-1][0]
        spread = max(tgt.boundary.d(q[0], last) for q in tail)
        ok = spread <= tol and tail[-1][1] <= tol
        out.append({"ray": k, "limit": to_jsonable(last) if ok else None, "spread": spread, "depth": tail[-1][1]})
    return out


# --------------------------------------------------------------------------
# boundary extension


@dataclass(frozen=True)
class Net:
    """A finite interior set with its Hausdorff distance to the boundary and
    its clearance (least depth)."""

    points: tuple
    hausdorff: float
    clearance: float


def hausdorff_to_boundary(collar: CollarSpace, pts: Iterable) -> float:
    pts = list(pts)
    A = collar.boundary
    up = max(p[1] for p in pts)  # every (a, t) is at distance t from (a, 0)
    down = max(min(A.d(b, p[0]) + p[1] for p in pts) for b in A.points)
    return max(up, down)


def make_net(collar: CollarSpace, pts: Iterable) -> Net:
    pts = tuple(sorted(set(pts), key=lambda p: (p[1], point_key(p[0]))))
    if not pts:
        raise InputError("empty net")
    for p in pts:
        collar.check(p)
    return Net(pts, hausdorff_to_boundary(collar, pts), min(p[1] for p in pts))


def totally_bounded_nets(
    collar: CollarSpace,
    n_max: int,
    sampler: Callable[[Point, float], Point | None] | None = None,
) -> list[Net]:
    """Nets Y_1, ..., Y_{n_max} converging to the boundary.

    For each n the boundary is covered greedily (canonical order) by balls
    of radius 1/n; ``sampler(b, r)`` must return an interior point within r
    of (b, 0).  The default sampler returns (b, r).
    """
    if n_max < 1:
        raise InputError("n_max must be at least 1")
    sampler = sampler or (lambda b, r: (b, r))
    A = collar.boundary
    nets = []
    for n in range(1, n_max + 1):
        r = 1.0 / n
        centers, covered = [], set()
        for b in A.points:
            if b not in covered:
                centers.append(b)
                covered |= A.closed_ball(b, r)
        pts = []
        for b in centers:
            y = sampler(b, r)
            if y is None or y[0] not in A or not (0 < y[1] <= 1) or collar.distance(y, (b, 0.0)) > r + 1e-12:
                raise CoverageError(f"sampler found no interior point within {r} of {b!r}")
            pts.append(y)
        nets.append(make_net(collar, pts))
    return nets


def extend_from_boundary(
    g: Callable[[Point], Point],
    source: CollarSpace,
    target: CollarSpace,
    nets: Sequence[Net],
    y0: Point,
) -> PointMap:
    """Extend a boundary map A -> B to the collar interiors.

    A point x = (a, t) with t >= 1 goes to ``y0``.  Otherwise let m with
    1/(m+1) <= t < 1/m, take the first net Y_n with Hausdorff distance below
    1/m, pick x' = (a', 0) with d(x, A) > 0.5 d(x, x') (that is,
    d_A(a, a') < t; the nearest is a itself) and send x to the point of Y_n
    nearest to (g(a'), 0).  Ties go to the canonically least point.
    """
    target.check(y0)
    nets = list(nets)
    if not nets:
        raise InputError("no nets given")
    B = target.boundary

    def nearest_boundary(a, t):
        cands = [b for b in source.boundary.points if source.boundary.d(a, b) < t]
        return min(cands, key=lambda b: (source.boundary.d(a, b), point_key(b)))

    def f(x):
        a, t = x
        if t >= 1:
            return y0
        v = 1 / t
        if abs(v - round(v)) < 1e-9:
            v = round(v)
        m = math.ceil(v) - 1
        net = next((nt for nt in nets if nt.hausdorff < 1.0 / m), None)
        if net is None:
            raise ResolutionError(f"no net with Hausdorff distance below 1/{m}", m)
        gb = g(nearest_boundary(a, t))
        if gb not in B:
            raise InputError(f"boundary map sends {a!r} outside the target boundary")
        return min(net.points, key=lambda y: (B.d(y[0], gb) + y[1], y[1], point_key(y[0])))

    return PointMap(f, source, target, "extension")


def nets_from_heights(collar: CollarSpace, heights: Iterable[float]) -> list[Net]:
    """Full columns A x {h} for each height, in the given order."""
    return [make_net(collar, [(a, h) for a in collar.boundary.points]) for h in heights]
