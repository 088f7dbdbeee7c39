"""Uniform covers of finite metric spaces, the banded collar cover with
multiplicity at most 3k + 3, slice restrictions, and the diagonal escape
function.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .coarsemaps import CollarSpace
from .ends import DISTINGUISHED, EQUIVALENT, ScaleVerdict
from .errors import DepthError, DimensionWitnessError, InputError, PreconditionError, SizingError
from .largescale import Cover
from .space import FiniteMetricSpace, sorted_points, to_jsonable

# --------------------------------------------------------------------------
# uniform covers


@dataclass(frozen=True)
class UniformCoverWitness:
    """Exact data of a finite cover V of A.

    ``lebesgue`` is a strict bound: for every r < lebesgue each closed
    r-ball of A lies in some element (inf when V contains A).
    """

    space: FiniteMetricSpace
    cover: Cover
    lebesgue: float
    mesh: float
    multiplicity: int
    k: int

    def covers_balls(self, r: float) -> bool:
        """Whether every closed r-ball lies in some element (exhaustive)."""
        A = self.space
        return all(any(A.closed_ball(x, r) <= e for e in self.cover) for x in A.points)

    def to_json(self) -> dict:
        return {
            "lebesgue": self.lebesgue,
            "mesh": self.mesh,
            "multiplicity": self.multiplicity,
            "k": self.k,
            "cover": self.cover.to_json(),
        }


def lebesgue_radius(A: FiniteMetricSpace, V: Sequence[frozenset]) -> float:
    """min over x of max over elements E containing x of d(x, A \\ E)."""
    best = math.inf
    for x in A.points:
        row = A.dist[A.index[x]]
        rx = 0.0
        for e in V:
            if x not in e:
                continue
            outside = [row[A.index[y]] for y in A.points if y not in e]
            rx = max(rx, min(outside, default=math.inf))
        best = min(best, rx)
    return float(best)


def verify_uniform_cover(A: FiniteMetricSpace, V: Cover | Sequence, k: int) -> UniformCoverWitness:
    V = V if isinstance(V, Cover) else Cover(tuple(V), A)
    if k < 0:
        raise InputError("k must be nonnegative")
    pts = V.points
    missing = [p for p in A.points if p not in pts]
    if missing:
        raise InputError(f"not a cover: {missing[0]!r} lies in no element")
    extra = [p for p in pts if p not in A]
    if extra:
        raise InputError(f"element point {extra[0]!r} is not in the space")
    mult, worst = 0, None
    for p in A.points:
        c = V.multiplicity(p)
        if c > mult:
            mult, worst = c, p
    if mult > k + 1:
        raise DimensionWitnessError(f"{worst!r} lies in {mult} > {k + 1} elements", worst, mult)
    leb = lebesgue_radius(A, V.elements)
    mesh = max((A.diameter(e) for e in V.elements), default=0.0)
    return UniformCoverWitness(A, Cover(V.elements, A), leb, mesh, mult, k)


def arc_cover(A: FiniteMetricSpace, width: int, step: int | None = None) -> Cover:
    """Windows of ``width`` consecutive points (cyclically, in the space's
    order) starting every ``step`` points; ``step`` defaults to width - 1 so
    neighbouring windows share one point."""
    n = len(A)
    if not 1 <= width <= n:
        raise InputError(f"width must be in 1..{n}")
    pts = A.points
    if width == n:
        return Cover((frozenset(pts),), A)
    step = step or max(width - 1, 1)
    return Cover(tuple(frozenset(pts[(i + j) % n] for j in range(width)) for i in range(0, n, step)), A)


def shrinking_arc_covers(A: FiniteMetricSpace, k: int, count: int) -> list[UniformCoverWitness]:
    """V_1, ..., V_count with mesh(V_n) <= 1/n: for each n the widest arc
    cover meeting the mesh bound with multiplicity <= k + 1."""
    out = []
    for n in range(1, count + 1):
        width = len(A)
        while width > 1:
            cand = arc_cover(A, width)
            if cand.mesh() <= 1.0 / n and max(cand.multiplicity(p) for p in A.points) <= k + 1:
                break
            width -= 1
        out.append(verify_uniform_cover(A, arc_cover(A, width), k))
    return out


# --------------------------------------------------------------------------
# collar covers


@dataclass(frozen=True)
class Band:
    """The element family V_{index} x (lo, hi] of the assembled cover."""

    n: int
    cover_index: int
    lo: float
    hi: float
    elements: tuple

    def contains(self, U: frozenset) -> frozenset | None:
        """An element of the band containing U, or None."""
        if not all(self.lo < t <= self.hi for _, t in U):
            return None
        proj = frozenset(a for a, _ in U)
        return next((v for v in self.elements if proj <= v), None)


@dataclass(frozen=True)
class CollarCoverPlan:
    """Result of the banded construction.

    Band n is V_{alpha(n-1)} x (mu_{n+2}, mu_{n-1}] with V_{alpha(-1)} = {A}.
    Claims hold over ``covered``: every U-element whose top depth exceeds
    ``covered[0]`` lies in some band element, and every grid point with depth
    above ``w_floor`` lies in at most 3k + 3 band elements.
    """

    mu: tuple
    alpha: tuple
    delta: tuple
    k: int
    bands: tuple
    covered: tuple
    w_floor: float
    multiplicity: int
    coarsening: dict
    trace: tuple

    def elements(self, grid: Sequence) -> list[frozenset]:
        out = []
        for b in self.bands:
            for v in b.elements:
                out.append(frozenset(p for p in grid if p[0] in v and b.lo < p[1] <= b.hi))
        return out

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "mu": list(self.mu),
            "alpha": list(self.alpha),
            "delta": [d if math.isfinite(d) else "inf" for d in self.delta],
            "covered": list(self.covered),
            "w_floor": self.w_floor,
            "multiplicity": self.multiplicity,
            "bound": 3 * self.k + 3,
            "bands": [
                {
                    "n": b.n,
                    "cover_index": b.cover_index,
                    "depth": [b.lo, b.hi],
                    "elements": [to_jsonable(sorted_points(v)) for v in b.elements],
                }
                for b in self.bands
            ],
            "trace": list(self.trace),
        }


def _scale_sequence(Vs: Sequence[UniformCoverWitness]) -> list[float]:
    """delta_n = min(1, lebesgue_1, ..., lebesgue_n) / n: strictly decreasing,
    and below every lebesgue bound from n = 2 on."""
    out, run = [math.inf], 1.0
    for n, w in enumerate(Vs, start=1):
        run = min(run, w.lebesgue)
        out.append(run / n)
    return out


def build_collar_cover(
    A: FiniteMetricSpace,
    Vs: Sequence[UniformCoverWitness],
    U: Cover | Sequence,
    k: int,
    collar: CollarSpace | None = None,
    steps: int | None = None,
) -> CollarCoverPlan:
    """Coarsen a uniformly bounded cover U of the discretized collar by bands.

    ``Vs[n-1]`` is V_n: multiplicity <= k + 1 and mesh <= 1/n.  Depth
    thresholds mu_n are chosen among the collar grid depths.  With
    mu_{-1} = mu_0 = 1, mu_1 = 1/2, alpha(-1) = -1, alpha(0) = 0,
    alpha(1) = 1, step n >= 0 does:

    * t = least depth of st(A x [mu_{n+1}, 1], U);
    * m = least index > alpha(n+1) with delta_m < |mu_{n+1} - mu_n|;
      alpha(n+2) = m;
    * mu_{n+2} = largest grid depth below t such that every U-element
      meeting A x (0, mu_{n+2}] has diameter < delta_m / 2.

    The run stops when the grid or the list of covers runs out (DepthError
    if fewer than ``steps`` steps were completed).
    """
    collar = collar or CollarSpace(A)
    U = U if isinstance(U, Cover) else Cover(tuple(U))
    if not U.elements:
        raise InputError("empty cover")
    for n, w in enumerate(Vs, start=1):
        if w.multiplicity > k + 1:
            raise InputError(f"V_{n} has multiplicity {w.multiplicity} > {k + 1}")
        if w.mesh > 1.0 / n + 1e-12:
            raise InputError(f"V_{n} has mesh {w.mesh} > 1/{n}")
    covers = {-1: (frozenset(A.points),), 0: (frozenset(A.points),)}
    covers.update({n: w.cover.elements for n, w in enumerate(Vs, start=1)})
    delta = _scale_sequence(Vs)

    elems = [e for e in U.elements if e]
    for e in elems:
        for p in e:
            collar.check(p)
    diam = [max((collar.distance(p, q) for p in e for q in e), default=0.0) for e in elems]
    top = [max(t for _, t in e) for e in elems]
    low = [min(t for _, t in e) for e in elems]
    depths = sorted({t for e in elems for _, t in e} | set(collar.depths), reverse=True)

    def mesh_below(d):
        """Largest diameter of an element meeting A x (0, d]."""
        return max((dm for dm, lo in zip(diam, low) if lo <= d), default=0.0)

    deepest = depths[-1]
    if mesh_below(deepest) > 0 and mesh_below(deepest) >= mesh_below(depths[0]):
        i = max((i for i in range(len(elems)) if low[i] <= deepest), key=lambda i: diam[i])
        raise PreconditionError(
            f"cover mesh does not shrink with depth (diameter {diam[i]} at depth {deepest})",
            to_jsonable(sorted_points(elems[i])),
        )

    mu = {-1: 1.0, 0: 1.0, 1: 0.5}
    alpha = {-1: -1, 0: 0, 1: 1}
    if 1 not in covers:
        raise DepthError("no cover V_1 given", 0)
    trace = []
    n = 0
    while True:
        hi = mu[n + 1]
        star_low = [low[i] for i in range(len(elems)) if top[i] >= hi]
        t = min(star_low + [hi])
        gap = abs(mu[n + 1] - mu[n])
        m = next((j for j in range(alpha[n + 1] + 1, len(delta)) if delta[j] < gap), None)
        if m is None:
            reason = f"no cover V_m with delta_m < {gap} among {len(Vs)} covers"
            break
        cand = next((d for d in depths if d < t and mesh_below(d) < delta[m] / 2), None)
        if cand is None:
            reason = f"no grid depth below {t} where the mesh is under {delta[m] / 2}"
            break
        alpha[n + 2] = m
        mu[n + 2] = cand
        trace.append(
            {
                "step": n,
                "t": t,
                "gap": gap,
                "gap_reading": "absolute difference of consecutive levels",
                "m": m,
                "delta_m": delta[m],
                "mu": cand,
            }
        )
        n += 1
    if steps is not None and n < steps:
        raise DepthError(f"step {n}: {reason}", n)
    K = max(mu)
    if K < 2:
        raise DepthError(f"step 0: {reason}", 0)

    bands = []
    for b in range(K - 1):
        idx = alpha[b - 1]
        bands.append(Band(b, idx, mu[b + 2], mu[b - 1], tuple(covers[idx])))

    covered_top = mu[K - 1]
    checked, failures = 0, []
    for i, e in enumerate(elems):
        if top[i] <= covered_top:
            continue
        checked += 1
        if not any(b.contains(e) is not None for b in bands):
            failures.append(to_jsonable(sorted_points(e)))
    if failures:
        raise PreconditionError(f"{len(failures)} cover elements lie in no band element", failures[0])

    w_floor = mu[K]
    grid = [(a, d) for d in depths if d > w_floor for a in A.points]
    worst, worst_p = 0, None
    for p in grid:
        c = sum(1 for b in bands if b.lo < p[1] <= b.hi for v in b.elements if p[0] in v)
        if c > worst:
            worst, worst_p = c, p
    if worst > 3 * k + 3:
        raise DimensionWitnessError(f"{worst_p!r} lies in {worst} > {3 * k + 3} elements", worst_p, worst)

    return CollarCoverPlan(
        mu=tuple(mu[i] for i in range(0, K + 1)),
        alpha=tuple(alpha[i] for i in range(0, K + 1)),
        delta=tuple(delta),
        k=k,
        bands=tuple(bands),
        covered=(covered_top, 1.0),
        w_floor=w_floor,
        multiplicity=worst,
        coarsening={"checked": checked, "failures": 0, "stopped": reason},
        trace=tuple(trace),
    )


def interval_cover(collar: CollarSpace, columns: Callable[[int], Sequence[frozenset]] | None = None) -> Cover:
    """Boxes C x {1/j, 1/(j+1)} for each grid level j and each C in columns(j).

    ``columns`` defaults to the singletons of A, giving intervals over each
    boundary point.
    """
    A = collar.boundary
    cols = columns or (lambda j: [frozenset([a]) for a in A.points])
    out = []
    for j in range(1, collar.depth):
        for C in cols(j):
            out.append(frozenset((a, 1.0 / i) for a in C for i in (j, j + 1)))
    return Cover(tuple(out))


# --------------------------------------------------------------------------
# slices


def slice_check(V: Cover | Sequence, A: FiniteMetricSpace, r: float, k: int, collar: CollarSpace | None = None) -> ScaleVerdict:
    """Restrict V to the highest grid slice A x {t} where every element
    meeting it has diameter < 1/(2r), then check that the restriction covers
    A, refines the cover by closed 1/r-balls, and has multiplicity <= k + 1.
    """
    if r <= 0:
        raise InputError("r must be positive")
    collar = collar or CollarSpace(A)
    elems = [frozenset(e) for e in V]
    diam = [max((collar.distance(p, q) for p in e for q in e), default=0.0) for e in elems]
    depths = sorted({t for e in elems for _, t in e}, reverse=True)
    bound = 1.0 / (2 * r)
    t = next((d for d in depths if all(dm < bound for e, dm in zip(elems, diam) if any(s == d for _, s in e))), None)
    if t is None:
        raise DepthError(f"no slice where all elements have diameter < {bound}", 0)
    restricted = [frozenset(a for a, s in e if s == t) for e in elems]
    restricted = [e for e in restricted if e]
    missing = [a for a in A.points if not any(a in e for e in restricted)]
    if missing:
        return DISTINGUISHED({"slice": t, "uncovered": to_jsonable(missing[0])})
    for e in restricted:
        if not any(e <= A.closed_ball(c, 1.0 / r) for c in A.points):
            return DISTINGUISHED({"slice": t, "element": to_jsonable(sorted_points(e)), "radius": 1.0 / r})
    mult = max(sum(a in e for e in restricted) for a in A.points)
    if mult > k + 1:
        worst = max(A.points, key=lambda a: sum(a in e for e in restricted))
        return DISTINGUISHED({"slice": t, "point": to_jsonable(worst), "multiplicity": mult})
    return EQUIVALENT(slice=t, multiplicity=mult, elements=len(restricted))


# --------------------------------------------------------------------------
# diagonal escape


@dataclass(frozen=True)
class DiagonalResult:
    """xi tabulated on the grid (rows i = 1..I, columns R = 1..R_max).

    ``owner[i-1][R-1]`` is the family member assigned to cell (i, R).  Each
    certificate names a cell where xi - lambda = R + 1.
    """

    xi: np.ndarray
    owner: np.ndarray
    certificates: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "xi": self.xi.tolist(),
            "owner": self.owner.tolist(),
            "certificates": self.certificates,
        }


def table_function(table: Sequence[Sequence[float]]) -> Callable[[int, int], float]:
    """lambda(i, R) read from a table indexed from 1."""
    arr = [list(row) for row in table]

    def lam(i, R):
        return arr[i - 1][R - 1]

    return lam


def diagonal_escape(S: Sequence[Callable[[int, int], float]], R_max: int, rows: int | None = None) -> DiagonalResult:
    """xi(i, R) = lambda_{i,R}(i, R) + R + 1 on the grid {1..rows} x {1..R_max}.

    Cell (i, R) is owned by member (i - 1) mod |S|, so the combination
    (lambda_s, R) owns cell (s + 1, R) and is beaten there by R + 1.
    """
    S = list(S)
    if not S:
        raise InputError("family is empty")
    if R_max < 1:
        raise InputError("R_max must be at least 1")
    rows = len(S) if rows is None else rows
    if rows < len(S):
        raise SizingError(f"{rows} rows cannot give each of {len(S)} functions its own cell in every column")
    xi = np.empty((rows, R_max), dtype=object)
    owner = np.empty((rows, R_max), dtype=int)
    for i in range(1, rows + 1):
        for R in range(1, R_max + 1):
            s = (i - 1) % len(S)
            v = S[s](i, R)
            if v < 0:
                raise InputError(f"member {s} is negative at ({i}, {R})")
            owner[i - 1, R - 1] = s
            xi[i - 1, R - 1] = v + R + 1
    certs = []
    for s, lam in enumerate(S):
        for R in range(1, R_max + 1):
            i = s + 1
            x, l_val = xi[i - 1, R - 1], lam(i, R)
            certs.append({"member": s, "R": R, "cell": [i, R], "xi": x, "lambda": l_val, "gap": x - l_val})
    return DiagonalResult(xi, owner, certs)


def check_certificates(result: DiagonalResult, S: Sequence[Callable[[int, int], float]]) -> bool:
    """Re-evaluate every certificate: xi - lambda = R + 1 > R at the cell."""
    for c in result.certificates:
        i, R = c["cell"]
        gap = result.xi[i - 1, R - 1] - S[c["member"]](i, R)
        if gap != R + 1 or not gap > R:
            return False
    return True

