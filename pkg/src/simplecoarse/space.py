"""Bounded structures, truncations of lazy infinite graphs, Gromov products and
hyperbolicity.

Points are plain hashable values.  The built-in graph families use canonical
encodings so that equality of points is equality of group elements:

* ``ZdGraph``: integer tuples, e.g. ``(3, -1)``.
* ``FreeGroupGraph``: freely reduced words over ``a, A, b, B, ...`` where the
  upper-case letter is the inverse; the identity is ``""``.
* ``FiniteGraph``: whatever hashable labels the edge list uses.
"""

from __future__ import annotations

import enum
import functools
import math
from collections import deque
from collections.abc import Callable, Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from numbers import Real

import numpy as np

from .errors import GraphStructureError, InputError, UndefinedProductError

Point = Hashable


def point_key(p):
    """Sort key giving a deterministic total order on mixed point encodings.

    Strings sort shortlex, so reduced words order by length first.
    """
    if isinstance(p, str):
        return (2, len(p), p)
    if isinstance(p, tuple):
        return (1, len(p), tuple(point_key(c) for c in p))
    if isinstance(p, Real):
        return (0, p)
    return (3, repr(p))


def sorted_points(points: Iterable[Point]) -> list:
    return sorted(points, key=point_key)


# --------------------------------------------------------------------------
# free groups


def free_letters(rank: int) -> list[str]:
    if not 1 <= rank <= 26:
        raise InputError(f"free group rank must be in 1..26, got {rank}")
    out = []
    for i in range(rank):
        g = chr(ord("a") + i)
        out += [g, g.upper()]
    return out


def free_inverse(word: str) -> str:
    return word[::-1].swapcase()


def free_reduce(word: str) -> str:
    stack: list[str] = []
    for ch in word:
        if stack and stack[-1] == ch.swapcase():
            stack.pop()
        else:
            stack.append(ch)
    return "".join(stack)


def free_multiply(u: str, v: str) -> str:
    return free_reduce(u + v)


# --------------------------------------------------------------------------
# graphs


class LazyGraph:
    """A connected, locally finite graph given by a root and a neighbor oracle.

    The generic class measures distances by BFS, which only terminates when
    the graph is finite or the target is reachable; the built-in families
    override :meth:`distance` with closed forms.  Equality is by
    ``family_tag`` so that two separately built copies of the same family
    compare equal.
    """

    def __init__(self, root: Point, neighbors: Callable[[Point], Sequence[Point]], family_tag: tuple):
        self.root = root
        self._neighbors = neighbors
        self.family_tag = family_tag

    def __repr__(self):
        return f"{type(self).__name__}{self.family_tag[1:]!r}"

    def __eq__(self, other):
        return isinstance(other, LazyGraph) and self.family_tag == other.family_tag and self.root == other.root

    def __hash__(self):
        return hash((self.family_tag, self.root))

    def neighbors(self, p: Point) -> list:
        return list(self._neighbors(p))

    @property
    def is_group(self) -> bool:
        return False

    def distance(self, x: Point, y: Point, limit: int | None = None) -> float:
        if x == y:
            return 0
        dist = bfs(self, x, limit=limit)
        return dist.get(y, math.inf)

    def size(self, x: Point, base: Point) -> float:
        return self.distance(x, base)

    def step_toward(self, x: Point, base: Point) -> Point:
        """A neighbor of ``x`` one step closer to ``base`` (first in oracle order)."""
        d = self.distance(x, base)
        for v in self.neighbors(x):
            if self.distance(v, base) < d:
                return v
        raise GraphStructureError(f"no neighbor of {x!r} is closer to {base!r}")

    def shadow(self, x: Point, base: Point, level: int) -> Point:
        """Walk a geodesic from ``x`` toward ``base`` until distance ``level``.

        The walk never enters the open ball of radius ``level``, so the shadow
        lies in the same component of the complement of any smaller ball.
        """
        p = x
        d = self.distance(p, base)
        while d > level:
            p = self.step_toward(p, base)
            d -= 1
        return p

    def left_difference(self, x: Point, y: Point) -> Point:
        raise InputError(f"{self!r} carries no group structure")

    def word_length(self, g: Point) -> float:
        raise InputError(f"{self!r} carries no group structure")


class ZdGraph(LazyGraph):
    """Cayley graph of Z^d with the standard generators (l1 word metric)."""

    def __init__(self, d: int):
        if d < 1:
            raise InputError(f"dimension must be >= 1, got {d}")
        self.d = d
        super().__init__(tuple([0] * d), self._nbrs, ("zd", d))

    def _nbrs(self, p):
        out = []
        for i in range(self.d):
            for s in (1, -1):
                q = list(p)
                q[i] += s
                out.append(tuple(q))
        return out

    @property
    def is_group(self):
        return True

    def distance(self, x, y, limit=None):
        return sum(abs(a - b) for a, b in zip(x, y))

    def step_toward(self, x, base):
        for i in range(self.d):
            if x[i] != base[i]:
                q = list(x)
                q[i] += 1 if base[i] > x[i] else -1
                return tuple(q)
        raise GraphStructureError("already at base")

    def left_difference(self, x, y):
        return tuple(b - a for a, b in zip(x, y))

    def word_length(self, g):
        return sum(abs(c) for c in g)


class FreeGroupGraph(LazyGraph):
    """Cayley graph of the free group of the given rank (a 2*rank-regular tree)."""

    def __init__(self, rank: int):
        self.rank = rank
        self.letters = free_letters(rank)
        super().__init__("", self._nbrs, ("free", rank))

    def _nbrs(self, w):
        return [free_reduce(w + g) for g in self.letters]

    @property
    def is_group(self):
        return True

    def distance(self, x, y, limit=None):
        return len(free_reduce(free_inverse(x) + y))

    def step_toward(self, x, base):
        # the geodesic in a tree is unique: peel the last letter of base^-1 x
        g = free_reduce(free_inverse(base) + x)
        if not g:
            raise GraphStructureError("already at base")
        return free_reduce(base + g[:-1])

    def shadow(self, x, base, level):
        g = free_reduce(free_inverse(base) + x)
        return free_reduce(base + g[:level]) if len(g) > level else x

    def left_difference(self, x, y):
        return free_reduce(free_inverse(x) + y)

    def word_length(self, g):
        return len(g)


class FiniteGraph(LazyGraph):
    """A finite connected graph from an edge list."""

    def __init__(self, edges: Iterable[Sequence[Point]], root: Point):
        adj: dict = {}
        norm_edges = []
        for e in edges:
            if len(e) != 2:
                raise InputError(f"edge must have two endpoints, got {e!r}")
            u, v = (_hashable(e[0]), _hashable(e[1]))
            norm_edges.append((u, v))
            if u == v:
                continue
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        root = _hashable(root)
        adj.setdefault(root, set())
        self.adjacency = {u: tuple(sorted_points(vs)) for u, vs in adj.items()}
        self.vertices = tuple(sorted_points(self.adjacency))
        tag = ("finite", tuple(sorted(norm_edges, key=lambda e: (point_key(e[0]), point_key(e[1])))))
        super().__init__(root, self._nbrs, tag)
        reached = bfs(self, root)
        if len(reached) != len(self.adjacency):
            missing = [v for v in self.vertices if v not in reached]
            raise GraphStructureError(f"graph is not connected from root; unreachable: {missing[:5]!r}")
        self._bfs_cache = functools.lru_cache(maxsize=4096)(lambda s: bfs(self, s))

    def _nbrs(self, p):
        try:
            return self.adjacency[p]
        except KeyError:
            raise InputError(f"{p!r} is not a vertex of this graph") from None

    def distance(self, x, y, limit=None):
        return self._bfs_cache(x).get(y, math.inf)


def _hashable(p):
    return tuple(_hashable(c) for c in p) if isinstance(p, list) else p


def bfs(graph: LazyGraph, source: Point, limit: int | None = None, within: set | None = None) -> dict:
    """Breadth-first distances from ``source`` up to ``limit``.

    ``within`` restricts the search to a vertex set.  Every adjacency used is
    checked for symmetry; a one-way edge raises GraphStructureError.  The
    returned dict iterates in BFS order.
    """
    dist = {source: 0}
    queue = deque([source])
    nbr_cache: dict = {}

    def nbrs(u):
        if u not in nbr_cache:
            nbr_cache[u] = graph.neighbors(u)
        return nbr_cache[u]

    while queue:
        u = queue.popleft()
        du = dist[u]
        if limit is not None and du >= limit:
            continue
        for v in nbrs(u):
            if within is not None and v not in within:
                continue
            if u not in nbrs(v):
                raise GraphStructureError(f"asymmetric adjacency: {v!r} in neighbors({u!r}) but not conversely")
            if v not in dist:
                dist[v] = du + 1
                queue.append(v)
    return dist


# --------------------------------------------------------------------------
# finite metric spaces


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Ordered points with an (extended) distance matrix.

    ``inf`` entries encode an infinity-pseudo-metric.  Symmetry and the zero
    diagonal are checked on construction; the triangle inequality is checked
    on demand by :meth:`triangle_violations`.
    """

    points: tuple
    dist: np.ndarray
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        pts = tuple(self.points)
        d = np.asarray(self.dist, dtype=float)
        n = len(pts)
        if d.shape != (n, n):
            raise InputError(f"distance matrix shape {d.shape} does not match {n} points")
        if n and (np.any(np.diag(d) != 0) or not np.array_equal(d, d.T) or np.any(d < 0)):
            raise InputError("distance matrix must be symmetric, nonnegative, zero on the diagonal")
        index = {p: i for i, p in enumerate(pts)}
        if len(index) != n:
            raise InputError("duplicate points")
        d.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "index", index)

    def __len__(self):
        return len(self.points)

    def __contains__(self, p):
        return p in self.index

    def d(self, x: Point, y: Point) -> float:
        try:
            return float(self.dist[self.index[x], self.index[y]])
        except KeyError as e:
            raise InputError(f"point {e.args[0]!r} not in space") from None

    def diameter(self, subset: Iterable[Point]) -> float:
        idx = [self.index[p] for p in subset]
        if len(idx) <= 1:
            return 0.0
        return float(self.dist[np.ix_(idx, idx)].max())

    def closed_ball(self, center: Point, r: float) -> frozenset:
        row = self.dist[self.index[center]]
        return frozenset(p for p, dv in zip(self.points, row) if dv <= r)

    def subspace(self, subset: Iterable[Point]) -> FiniteMetricSpace:
        pts = [p for p in self.points if p in set(subset)]
        idx = [self.index[p] for p in pts]
        return FiniteMetricSpace(tuple(pts), self.dist[np.ix_(idx, idx)])

    def triangle_violations(self, tol: float = 1e-12) -> list[tuple]:
        d = self.dist
        out = []
        n = len(self.points)
        for k in range(n):
            via = d[:, [k]] + d[[k], :]
            bad = np.argwhere(d > via + tol)
            out.extend((self.points[i], self.points[j], self.points[k]) for i, j in bad)
        return out


def graph_metric_space(graph: FiniteGraph) -> FiniteMetricSpace:
    """All-pairs shortest-path metric of a finite graph."""
    pts = graph.vertices
    n = len(pts)
    d = np.zeros((n, n))
    for i, p in enumerate(pts):
        row = bfs(graph, p)
        d[i] = [row[q] for q in pts]
    return FiniteMetricSpace(pts, d)


def cycle_space(n: int, circumference: float = 1.0) -> FiniteMetricSpace:
    """``n`` equally spaced points on a circle with the arc-length metric."""
    if n < 1:
        raise InputError("cycle needs at least one point")
    i = np.arange(n)
    steps = np.abs(i[:, None] - i[None, :])
    steps = np.minimum(steps, n - steps)
    return FiniteMetricSpace(tuple(range(n)), steps * (circumference / n))


def ball(graph: LazyGraph, center: Point, radius: int, margin: int | None = None) -> FiniteMetricSpace:
    """Truncate ``graph`` to the closed ball B(center, radius).

    Distances are BFS distances inside B(center, radius + margin)
    (``margin`` defaults to ``radius``): upper bounds on the graph metric, and
    exact whenever a geodesic stays inside the enlarged ball.  Points are in
    BFS order from ``center``.
    """
    if radius < 0 or (margin is not None and margin < 0):
        raise InputError("radius and margin must be nonnegative")
    if margin is None:
        margin = radius
    outer = bfs(graph, center, limit=radius + margin)
    pts = [p for p, dp in outer.items() if dp <= radius]
    allowed = set(outer)
    n = len(pts)
    d = np.zeros((n, n))
    for i, p in enumerate(pts):
        row = bfs(graph, p, within=allowed)
        d[i] = [row.get(q, math.inf) for q in pts]
    return FiniteMetricSpace(tuple(pts), d)


# --------------------------------------------------------------------------
# bounded structures


class BoundedKind(enum.Enum):
    METRIC_DIAMETER = "metric_diameter"
    FINITE_SETS = "finite_sets"
    COLLAR_MARGIN = "collar_margin"


@dataclass(frozen=True)
class BoundedStructure:
    """Membership rule for bounded sets.

    METRIC_DIAMETER: finite diameter, and at most ``cap`` when a cap is given.
    FINITE_SETS: every finite set.
    COLLAR_MARGIN: distance to the boundary at least ``epsilon`` (> 0).
    """

    kind: BoundedKind
    cap: float | None = None
    epsilon: float | None = None

    def __post_init__(self):
        if self.kind is BoundedKind.COLLAR_MARGIN and not (self.epsilon and self.epsilon > 0):
            raise InputError("COLLAR_MARGIN needs epsilon > 0")


def is_bounded(
    structure: BoundedStructure,
    points: Iterable[Point],
    metric: FiniteMetricSpace | Callable[[Point, Point], float] | None = None,
    boundary_distance: Mapping | Callable[[Point], float] | None = None,
) -> bool:
    """Decide membership of a finite point set in ``structure``.

    ``metric`` is required for METRIC_DIAMETER, ``boundary_distance`` (a
    mapping or callable giving each point's distance to the boundary) for
    COLLAR_MARGIN.
    """
    pts = list(points)
    kind = structure.kind
    if kind is BoundedKind.FINITE_SETS:
        return True
    if kind is BoundedKind.METRIC_DIAMETER:
        if metric is None:
            raise InputError("METRIC_DIAMETER needs a metric")
        dfun = metric.d if isinstance(metric, FiniteMetricSpace) else metric
        diam = max((dfun(x, y) for i, x in enumerate(pts) for y in pts[i + 1 :]), default=0.0)
        if math.isinf(diam):
            return False
        return structure.cap is None or diam <= structure.cap
    if boundary_distance is None:
        raise InputError("COLLAR_MARGIN needs collar coordinates (boundary_distance)")
    get = boundary_distance.__getitem__ if isinstance(boundary_distance, Mapping) else boundary_distance
    try:
        margins = [get(p) for p in pts]
    except (KeyError, TypeError, IndexError) as e:
        raise InputError(f"missing collar coordinate for a point: {e}") from None
    return all(m >= structure.epsilon for m in margins)


# --------------------------------------------------------------------------
# Gromov products and hyperbolicity


def gromov_product(space: FiniteMetricSpace, x: Point, y: Point, a: Point) -> float:
    dxa, dya, dxy = space.d(x, a), space.d(y, a), space.d(x, y)
    if math.isinf(dxa) or math.isinf(dya) or math.isinf(dxy):
        raise UndefinedProductError(f"<{x!r},{y!r}>_{a!r} needs finite distances")
    return 0.5 * (dxa + dya - dxy)


@dataclass(frozen=True)
class DeltaResult:
    """Least delta satisfying the delta/4-inequality, with a witnessing quadruple.

    ``witness`` is ``(a, x, y, z)``: the inequality
    <x,y>_a >= min(<x,z>_a, <z,y>_a) - delta/4 is tight there.
    """

    delta: float
    witness: tuple | None


def _gap_for_base(d: np.ndarray, a: int, chunk: int = 64):
    """Max over (x, y, z) of min(G[x,z], G[z,y]) - G[x,y] for base a."""
    g = 0.5 * (d[:, [a]] + d[[a], :] - d)
    n = len(g)
    best, arg = -math.inf, None
    for lo in range(0, n, chunk):
        # block[x, z, y] = min(G[x,z], G[z,y]) - G[x,y]
        block = np.minimum(g[lo : lo + chunk, :, None], g[None, :, :]) - g[lo : lo + chunk, None, :]
        flat = int(np.argmax(block))
        val = block.flat[flat]
        if val > best:
            xi, zi, yi = np.unravel_index(flat, block.shape)
            best, arg = float(val), (lo + int(xi), int(yi), int(zi))
    return best, arg


def hyperbolicity_delta(space: FiniteMetricSpace, base: Point | None = None) -> DeltaResult:
    """Least delta >= 0 with <x,y>_a >= min(<x,z>_a, <z,y>_a) - delta/4.

    With ``base`` fixed only a = base is scanned; otherwise every base point
    is (the full four-point scan).  Trees give exactly 0.
    """
    n = len(space)
    if n == 0:
        raise InputError("hyperbolicity of the empty space is undefined")
    d = space.dist
    if np.isinf(d).any():
        raise UndefinedProductError("hyperbolicity needs all pairwise distances finite")
    bases = [space.index[base]] if base is not None else range(n)
    best, witness = 0.0, None
    for a in bases:
        gap, arg = _gap_for_base(d, a)
        if gap > best + 1e-12:
            best = gap
            x, y, z = arg
            witness = tuple(space.points[i] for i in (a, x, y, z))
    return DeltaResult(4.0 * best, witness)


# --------------------------------------------------------------------------
# complements of balls


@dataclass(frozen=True)
class Components:
    """Connected components of an annulus B(center, horizon) minus B(center, radius).

    ``labels`` maps each annulus point to its component id, the first member
    reached in BFS order from the center.  ``members`` lists each component in
    BFS order.  ``unbounded`` holds ids of components that continue past the horizon
    sphere; the others are entire finite components of the complement.
    """

    center: Point
    radius: int
    horizon: int
    labels: dict
    members: dict
    unbounded: tuple

    @property
    def ids(self) -> tuple:
        return tuple(self.members)

    def __len__(self):
        return len(self.members)


def complement_components(graph: LazyGraph, center: Point, radius: int, horizon: int) -> Components:
    if horizon <= radius:
        raise InputError(f"horizon {horizon} must exceed radius {radius}")
    return _complement_components(graph, center, radius, horizon)


@functools.lru_cache(maxsize=64)
def _complement_components(graph, center, radius, horizon):
    dist = bfs(graph, center, limit=horizon)
    annulus = [p for p, dp in dist.items() if dp > radius]
    inside = set(annulus)
    order = {q: i for i, q in enumerate(dist)}
    labels: dict = {}
    members: dict = {}
    for p in annulus:
        if p in labels:
            continue
        comp = []
        labels[p] = p
        queue = deque([p])
        while queue:
            u = queue.popleft()
            comp.append(u)
            for v in graph.neighbors(u):
                if v in inside and v not in labels:
                    labels[v] = p
                    queue.append(v)
        members[p] = tuple(sorted(comp, key=order.__getitem__))
    # a component is unbounded when it continues past the horizon sphere
    unbounded = tuple(
        c
        for c, ms in members.items()
        if any(dist[q] == horizon and any(v not in dist for v in graph.neighbors(q)) for q in ms)
    )
    return Components(center, radius, horizon, labels, members, unbounded)


def component_of(graph: LazyGraph, center: Point, radius: int, horizon: int, x: Point) -> Point | None:
    """Id of the component of X minus B(center, radius) containing ``x``.

    Points beyond the horizon are first moved back along a geodesic to the
    sphere of radius ``radius + 1``.  Returns None for points inside the ball.
    """
    d = graph.distance(x, center)
    if d <= radius:
        return None
    comps = complement_components(graph, center, radius, horizon)
    if d > horizon:
        x = graph.shadow(x, center, radius + 1)
    return comps.labels[x]


def to_jsonable(p):
    """Points as JSON values: tuples become lists, numpy scalars plain numbers."""
    if isinstance(p, (tuple, list)):
        return [to_jsonable(c) for c in p]
    if isinstance(p, (set, frozenset)):
        return [to_jsonable(c) for c in sorted_points(p)]
    if isinstance(p, np.generic):
        return p.item()
    return p
