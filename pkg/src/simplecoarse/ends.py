"""Rays, end-equivalence relations decided at finite scale, and end trees.

Every relation here quantifies over infinite tails, so :func:`equivalent`
never returns a plain boolean.  It returns a :class:`ScaleVerdict`:

* EQUIVALENT when the prefix carries a positive certificate (a flat bound, a
  tolerance met on every scheduled tranche, components agreeing at every
  scheduled radius);
* DISTINGUISHED with a witness that can be re-checked by hand;
* INCONCLUSIVE when neither certificate is present.

A *tranche* is a block of consecutive indices.  The "head" of a prefix of
length L is its first L//2 indices, the "tail" the rest.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ExtensionError, FieldRangeError, InputError, NotASimpleEndError
from .space import LazyGraph, Point, complement_components, component_of, point_key

# --------------------------------------------------------------------------
# verdicts


class Verdict(enum.Enum):
    EQUIVALENT = "equivalent"
    DISTINGUISHED = "distinguished"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ScaleVerdict:
    status: Verdict
    evidence: dict = field(default_factory=dict)
    witness: dict | None = None

    def __post_init__(self):
        if self.status is Verdict.DISTINGUISHED and self.witness is None:
            raise ValueError("a DISTINGUISHED verdict needs a witness")

    @property
    def equivalent(self) -> bool:
        return self.status is Verdict.EQUIVALENT

    @property
    def distinguished(self) -> bool:
        return self.status is Verdict.DISTINGUISHED

    @property
    def inconclusive(self) -> bool:
        return self.status is Verdict.INCONCLUSIVE

    def to_dict(self) -> dict:
        out = {"status": self.status.value, "evidence": self.evidence}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def EQUIVALENT(**evidence) -> ScaleVerdict:
    return ScaleVerdict(Verdict.EQUIVALENT, evidence)


def DISTINGUISHED(witness: dict, **evidence) -> ScaleVerdict:
    return ScaleVerdict(Verdict.DISTINGUISHED, evidence, witness)


def INCONCLUSIVE(**evidence) -> ScaleVerdict:
    return ScaleVerdict(Verdict.INCONCLUSIVE, evidence)


def conjunction(verdicts: Iterable[ScaleVerdict], labels: Iterable | None = None) -> ScaleVerdict:
    """All-of combination: DISTINGUISHED dominates, then INCONCLUSIVE.

    The first DISTINGUISHED verdict (in input order) supplies the witness.
    """
    verdicts = list(verdicts)
    labels = list(labels) if labels is not None else list(range(len(verdicts)))
    for lab, v in zip(labels, verdicts):
        if v.distinguished:
            return DISTINGUISHED({"part": lab, **v.witness}, checked=len(verdicts))
    pending = [lab for lab, v in zip(labels, verdicts) if v.inconclusive]
    if pending:
        return INCONCLUSIVE(checked=len(verdicts), inconclusive_parts=pending)
    return EQUIVALENT(checked=len(verdicts))


# --------------------------------------------------------------------------
# rays


@dataclass(frozen=True, eq=False)
class Ray:
    """A finite prefix x_0, ..., x_{L-1} of a candidate simple end.

    ``carrier`` supplies ``distance(x, y)`` and ``size(x, base)`` (distance to
    the base for graphs, reciprocal depth for collars).  ``generator`` maps an
    index to a point and is used by :func:`extend_ray`.

    The escape certificate is the function r -> last index n with
    size(x_n) <= r; the ray certifies escape at scale r when that index is
    not the final one, so ``escape_scale`` is the size of the final point.
    """

    prefix: tuple
    carrier: object
    base: Point = None
    generator: Callable[[int], Point] | None = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        if self.base is None:
            object.__setattr__(self, "base", getattr(self.carrier, "root", None))

    def __len__(self):
        return len(self.prefix)

    def __getitem__(self, i):
        return self.prefix[i]

    def __repr__(self):
        name = self.label or f"{self.prefix[:3]!r}..."
        return f"Ray({name}, len={len(self)})"

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.array([self.carrier.size(p, self.base) for p in self.prefix], dtype=float)

    @property
    def escape_scale(self) -> float:
        return float(self.sizes[-1]) if len(self) else 0.0

    def last_visit(self, r: float) -> int:
        """Largest index n with size(x_n) <= r, or -1."""
        hits = np.nonzero(self.sizes <= r)[0]
        return int(hits[-1]) if len(hits) else -1

    def escape_profile(self, radii: Iterable[float]) -> dict:
        return {r: self.last_visit(r) for r in radii}

    def escapes(self) -> Verdict:
        """Tri-state simple-end check on the prefix.

        EQUIVALENT (escapes) when every tail size exceeds every size in the
        first quarter; DISTINGUISHED (does not escape) when the tail never
        rises above the head's minimum; otherwise INCONCLUSIVE.
        """
        s = self.sizes
        n = len(s)
        if n < 4:
            return Verdict.INCONCLUSIVE
        if s[n // 2 :].min() > s[: n // 4].max():
            return Verdict.EQUIVALENT
        if s[n // 2 :].max() <= s[: n // 2].min():
            return Verdict.DISTINGUISHED
        return Verdict.INCONCLUSIVE

    def subsequence(self, indices: Sequence[int]) -> Ray:
        return Ray(tuple(self.prefix[i] for i in indices), self.carrier, self.base, label=f"{self.label}[sub]")

    def truncated(self, length: int) -> Ray:
        return Ray(self.prefix[:length], self.carrier, self.base, self.generator, self.label)

    def mapped(self, f: Callable[[Point], Point], carrier=None, base=None, label: str | None = None) -> Ray:
        """Image ray n -> f(x_n) on ``carrier`` (default: same carrier)."""
        carrier = self.carrier if carrier is None else carrier
        gen = None if self.generator is None else (lambda n, g=self.generator: f(g(n)))
        return Ray(
            tuple(f(p) for p in self.prefix),
            carrier,
            base if base is not None else getattr(carrier, "root", None),
            gen,
            label if label is not None else f"f({self.label})",
        )


def ray_from_function(carrier, fn: Callable[[int], Point], length: int, base: Point = None, label: str = "") -> Ray:
    return Ray(tuple(fn(n) for n in range(length)), carrier, base, fn, label)


def axis_ray(graph: LazyGraph, direction, length: int, offset=None, label: str = "") -> Ray:
    """n -> offset + n * direction on Z^d, or n -> offset * direction^n on a free group."""
    if graph.family_tag[0] == "zd":
        direction = tuple(direction)
        off = tuple(offset) if offset is not None else tuple([0] * len(direction))

        def fn(n):
            return tuple(o + n * c for o, c in zip(off, direction))

    elif graph.family_tag[0] == "free":
        from .space import free_reduce

        word, off = str(direction), str(offset or "")

        def fn(n):
            return free_reduce(off + word * n)

    else:
        raise InputError(f"axis rays need a Z^d or free group graph, got {graph!r}")
    return ray_from_function(graph, fn, length, label=label or f"axis({direction})")


def extend_ray(ray: Ray, target_len: int, require_scale: float = 1) -> Ray:
    """Extend the prefix through the generator to ``target_len`` points.

    The extended ray must certify escape at ``require_scale``: its final
    point has to leave the closed ball of that radius, otherwise
    NotASimpleEndError reports the ball the prefix is trapped in.
    """
    if ray.generator is None:
        raise ExtensionError(f"{ray!r} has no generator")
    if target_len < len(ray):
        raise InputError(f"target length {target_len} is shorter than the prefix ({len(ray)})")
    pts = list(ray.prefix)
    for n in range(len(pts), target_len):
        try:
            pts.append(ray.generator(n))
        except (KeyError, IndexError, ValueError, ZeroDivisionError) as e:
            raise ExtensionError(f"generator undefined at index {n}: {e}") from e
    out = Ray(tuple(pts), ray.carrier, ray.base, ray.generator, ray.label)
    if out.escape_scale < require_scale:
        r = out.escape_scale
        raise NotASimpleEndError(f"{ray!r} stays in the closed ball of radius {r} at index {target_len - 1}", r)
    return out


# --------------------------------------------------------------------------
# relations


class RelationKind(enum.Enum):
    METRIC = "metric"
    C0 = "c0"
    BOUNDARY_METRIC = "boundary_metric"
    FUNCTION_FAMILY = "function_family"
    GROUP_LEFT = "group_left"
    GROMOV = "gromov"
    FREUDENTHAL = "freudenthal"


def default_horizon(r: int) -> int:
    return r + 2


@dataclass(frozen=True, eq=False)
class EndRelation:
    """One of the seven end-equivalence relations on a carrier.

    Build with the classmethods; ``fields`` is the function family for
    FUNCTION_FAMILY, ``base`` the base point for GROMOV and FREUDENTHAL,
    ``horizon`` the truncation policy r -> horizon for FREUDENTHAL.
    """

    kind: RelationKind
    carrier: object
    fields: tuple = ()
    base: Point = None
    horizon: Callable[[int], int] = default_horizon

    @classmethod
    def metric(cls, carrier):
        return cls(RelationKind.METRIC, carrier)

    @classmethod
    def c0(cls, carrier):
        return cls(RelationKind.C0, carrier)

    @classmethod
    def boundary_metric(cls, collar):
        if not hasattr(collar, "boundary_distance"):
            raise InputError("BOUNDARY_METRIC needs a carrier with collar coordinates")
        return cls(RelationKind.BOUNDARY_METRIC, collar)

    @classmethod
    def function_family(cls, carrier, fields: Iterable[Callable]):
        fields = tuple(fields)
        if not fields:
            raise InputError("FUNCTION_FAMILY needs at least one function")
        return cls(RelationKind.FUNCTION_FAMILY, carrier, fields=fields)

    @classmethod
    def group_left(cls, graph):
        if not getattr(graph, "is_group", False):
            raise InputError(f"GROUP_LEFT needs a group carrier, got {graph!r}")
        return cls(RelationKind.GROUP_LEFT, graph)

    @classmethod
    def gromov(cls, carrier, base: Point = None):
        return cls(RelationKind.GROMOV, carrier, base=base if base is not None else carrier.root)

    @classmethod
    def freudenthal(cls, graph: LazyGraph, base: Point = None, horizon: Callable[[int], int] = default_horizon):
        return cls(RelationKind.FREUDENTHAL, graph, base=base if base is not None else graph.root, horizon=horizon)

    def __repr__(self):
        return f"EndRelation({self.kind.value}, {self.carrier!r})"


@dataclass(frozen=True)
class Budget:
    """Finite resources for one decision.

    ``max_scale`` defaults to half the common prefix length.  ``schedule`` is
    read per relation kind: decreasing tolerances for C0, BOUNDARY_METRIC and
    FUNCTION_FAMILY (default 1, 1/2, ..., 1/32), increasing thresholds for
    GROMOV (default k * max_scale / 8, k = 1..4), increasing radii for
    FREUDENTHAL (default powers of two up to min(max_scale / 2, 8)).  ``cap``
    bounds the sup (METRIC) or the number of distinct differences
    (GROUP_LEFT); it defaults to ``max_scale`` and L respectively.
    """

    max_scale: float | None = None
    schedule: tuple | None = None
    cap: float | None = None
    min_length: int = 8

    def __post_init__(self):
        if self.schedule is not None:
            object.__setattr__(self, "schedule", tuple(self.schedule))
            if not self.schedule:
                raise InputError("budget schedule is empty")

    def scale(self, length: int) -> float:
        return self.max_scale if self.max_scale is not None else length / 2


DEFAULT_TOLERANCES = tuple(2.0**-k for k in range(6))


def _tolerances(budget: Budget) -> tuple:
    eps = budget.schedule or DEFAULT_TOLERANCES
    if any(e <= 0 for e in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
        raise InputError(f"tolerance schedule must be positive and strictly decreasing: {eps}")
    return eps


def _thresholds(budget: Budget, length: int) -> tuple:
    if budget.schedule is not None:
        ts = budget.schedule
    else:
        top = budget.scale(length)
        ts = tuple(k * top / 8 for k in range(1, 5))
    if any(a >= b for a, b in zip(ts, ts[1:])):
        raise InputError(f"threshold schedule must be strictly increasing: {ts}")
    return ts


def _radii(budget: Budget, length: int) -> tuple:
    if budget.schedule is not None:
        rs = tuple(int(r) for r in budget.schedule)
    else:
        top = min(budget.scale(length) / 2, 8)
        rs, r = [], 1
        while r <= top:
            rs.append(r)
            r *= 2
        rs = tuple(rs) or (1,)
    if any(r < 0 for r in rs) or any(a >= b for a, b in zip(rs, rs[1:])):
        raise InputError(f"radius schedule must be nonnegative and strictly increasing: {rs}")
    return rs


def _tail_tranches(length: int, k: int) -> list[int]:
    """Start indices of k consecutive tranches splitting the tail."""
    half = length // 2
    return [int(c[0]) for c in np.array_split(np.arange(half, length), k)]


def _bounded_rule(q: np.ndarray, cap: float, what: str) -> ScaleVerdict:
    """Flat bound => EQUIVALENT; monotone growth over quarters => DISTINGUISHED."""
    n = len(q)
    half = n // 2
    inf = np.nonzero(np.isinf(q))[0]
    if len(inf):
        i = int(inf[0])
        return DISTINGUISHED({"index": i, what: math.inf}, rule="infinite distance")
    head_max, tail_max = float(q[:half].max()), float(q[half:].max())
    top = float(q.max())
    if tail_max <= head_max and top <= cap:
        return EQUIVALENT(bound=top + 1, realized_at=int(np.argmax(q)), rule="sup flat over the tail")
    quarters = np.array_split(np.arange(n), 4)
    qmax = [float(q[c].max()) for c in quarters]
    last = quarters[-1]
    if all(a < b for a, b in zip(qmax, qmax[1:])) and q[last].min() > head_max:
        i = int(last[np.argmin(q[last])])
        return DISTINGUISHED(
            {"index": i, what: float(q[i]), "head_max": head_max},
            quarter_maxima=qmax,
            rule="monotone growth",
        )
    return INCONCLUSIVE(head_max=head_max, tail_max=tail_max, cap=cap)


def _vanishing_rule(q: np.ndarray, eps: tuple, what: str) -> ScaleVerdict:
    """Tolerance eps_k met from the k-th tail tranche on => EQUIVALENT;
    tail bounded below by the finest tolerance => DISTINGUISHED."""
    n = len(q)
    half = n // 2
    if n - half < len(eps):
        return INCONCLUSIVE(reason="tail shorter than the tolerance schedule")
    starts = _tail_tranches(n, len(eps))
    sups = [float(q[s:].max()) for s in starts]
    if all(s < e for s, e in zip(sups, eps)):
        return EQUIVALENT(tail_indices=starts, tail_sups=sups, tolerances=list(eps), rule="tolerances met")
    tail = q[half:]
    if tail.min() >= eps[-1]:
        i = half + int(np.argmin(tail))
        return DISTINGUISHED({"index": i, what: float(q[i]), "epsilon": eps[-1]}, rule="tail stays above epsilon")
    return INCONCLUSIVE(tail_indices=starts, tail_sups=sups, tolerances=list(eps))


def _divergent_rule(p: np.ndarray, ts: tuple, what: str) -> ScaleVerdict:
    n = len(p)
    half = n // 2
    if n - half < len(ts):
        return INCONCLUSIVE(reason="tail shorter than the threshold schedule")
    starts = _tail_tranches(n, len(ts))
    infs = [float(p[s:].min()) for s in starts]
    if all(m > t for m, t in zip(infs, ts)):
        return EQUIVALENT(tail_indices=starts, tail_infs=infs, thresholds=list(ts), rule="thresholds cleared")
    head_max, tail_max = float(p[:half].max()), float(p[half:].max())
    if tail_max <= head_max and tail_max < ts[-1]:
        i = half + int(np.argmax(p[half:]))
        return DISTINGUISHED({"index": i, what: float(p[i]), "bound": tail_max}, rule="bounded on the tail")
    return INCONCLUSIVE(tail_indices=starts, tail_infs=infs, thresholds=list(ts))


def _distances(carrier, x: Ray, y: Ray, n: int) -> np.ndarray:
    return np.array([carrier.distance(a, b) for a, b in zip(x.prefix[:n], y.prefix[:n])], dtype=float)


def _field_values(f, pts) -> np.ndarray:
    vals = np.array([f(p) for p in pts], dtype=float)
    bad = np.nonzero((vals < 0) | (vals > 1) | np.isnan(vals))[0]
    if len(bad):
        i = int(bad[0])
        raise FieldRangeError(f"field {f!r} takes value {vals[i]} outside [0, 1] at {pts[i]!r}")
    return vals


def _metric(rel, x, y, n, budget):
    return _bounded_rule(_distances(rel.carrier, x, y, n), budget.cap or budget.scale(n), "distance")


def _c0(rel, x, y, n, budget):
    return _vanishing_rule(_distances(rel.carrier, x, y, n), _tolerances(budget), "distance")


def _function_family(rel, x, y, n, budget):
    eps = _tolerances(budget)
    verdicts = []
    for k, f in enumerate(rel.fields):
        q = np.abs(_field_values(f, x.prefix[:n]) - _field_values(f, y.prefix[:n]))
        v = _vanishing_rule(q, eps, "difference")
        if v.distinguished:
            return DISTINGUISHED({"field": k, "field_tag": getattr(f, "tag", repr(f)), **v.witness})
        verdicts.append(v)
    return conjunction(verdicts)


def _group_left(rel, x, y, n, budget):
    g = rel.carrier
    diffs = [g.left_difference(a, b) for a, b in zip(x.prefix[:n], y.prefix[:n])]
    cap = budget.cap if budget.cap is not None else n
    if len(set(diffs)) > cap:
        return INCONCLUSIVE(distinct=len(set(diffs)), cap=cap)
    lengths = np.array([g.word_length(d) for d in diffs], dtype=float)
    v = _bounded_rule(lengths, budget.scale(n), "word_length")
    if v.equivalent:
        return EQUIVALENT(distinct=len(set(diffs)), finite_set_radius=v.evidence["bound"] - 1, rule=v.evidence["rule"])
    if v.distinguished:
        i = v.witness["index"]
        return DISTINGUISHED({**v.witness, "difference": diffs[i]}, **v.evidence)
    return v


def _gromov(rel, x, y, n, budget):
    c, p = rel.carrier, rel.base
    prods = np.array(
        [0.5 * (c.distance(a, p) + c.distance(b, p) - c.distance(a, b)) for a, b in zip(x.prefix[:n], y.prefix[:n])],
        dtype=float,
    )
    return _divergent_rule(prods, _thresholds(budget, n), "product")


def _freudenthal(rel, x, y, n, budget):
    graph, base = rel.carrier, rel.base
    agreed, pending = [], []
    for r in _radii(budget, n):
        h = max(rel.horizon(r), r + 1)
        tails = []
        for ray in (x, y):
            start = ray.last_visit(r) + 1 if ray.base == base else _last_visit_from(ray, graph, base, r) + 1
            tail = ray.prefix[start:]
            if len(tail) < 2:
                tails.append(None)
                continue
            final = tail[len(tail) // 2 :]
            comps = {component_of(graph, base, r, h, p) for p in final}
            tails.append((comps, start))
        if None in tails or any(len(t[0]) != 1 for t in tails):
            pending.append(r)
            continue
        (cx,), (cy,) = tails[0][0], tails[1][0]
        if cx != cy:
            return DISTINGUISHED(
                {"radius": r, "component_x": cx, "component_y": cy, "tail_x": tails[0][1], "tail_y": tails[1][1]},
                agreed_radii=agreed,
            )
        agreed.append(r)
    if pending:
        return INCONCLUSIVE(agreed_radii=agreed, pending_radii=pending)
    return EQUIVALENT(agreed_radii=agreed, rule="tails share a component at every radius")


def _last_visit_from(ray, graph, base, r):
    hits = [i for i, p in enumerate(ray.prefix) if graph.distance(p, base) <= r]
    return hits[-1] if hits else -1


_DECIDERS = {
    RelationKind.METRIC: _metric,
    RelationKind.C0: _c0,
    RelationKind.BOUNDARY_METRIC: _c0,
    RelationKind.FUNCTION_FAMILY: _function_family,
    RelationKind.GROUP_LEFT: _group_left,
    RelationKind.GROMOV: _gromov,
    RelationKind.FREUDENTHAL: _freudenthal,
}


def equivalent(rel: EndRelation, x: Ray, y: Ray, budget: Budget | None = None) -> ScaleVerdict:
    """Decide whether two rays are equivalent under ``rel`` at finite scale.

    Only the common prefix (length L = min(len(x), len(y))) is compared.
    Prefixes shorter than ``budget.min_length`` are INCONCLUSIVE.
    """
    budget = budget or Budget()
    for ray in (x, y):
        if ray.carrier != rel.carrier:
            raise InputError(f"{ray!r} lives on {ray.carrier!r}, relation on {rel.carrier!r}")
    n = min(len(x), len(y))
    if n and x.prefix[:n] == y.prefix[:n]:
        return EQUIVALENT(rule="identical prefixes", length=n)
    if n < budget.min_length:
        return INCONCLUSIVE(reason=f"prefix length {n} below minimum {budget.min_length}")
    return _DECIDERS[rel.kind](rel, x, y, n, budget)


# --------------------------------------------------------------------------
# end trees


@dataclass(frozen=True)
class EndTree:
    """Unbounded complement components of balls B(base, r), r in ``schedule``.

    ``levels[r]`` lists component ids (each id is the first member reached in
    BFS order, a point on the sphere of radius r + 1).  ``refinement[r]`` maps
    each component at level r to the component containing it at the previous
    scheduled level.
    """

    graph: LazyGraph
    base: Point
    schedule: tuple
    horizons: dict
    levels: dict
    refinement: dict

    def count(self, level: int) -> int:
        return end_class_count(self, level)

    def component_of(self, level: int, x: Point) -> Point | None:
        return component_of(self.graph, self.base, level, self.horizons[level], x)

    def to_json(self) -> dict:
        from .space import to_jsonable

        return {
            "base": to_jsonable(self.base),
            "levels": [
                {
                    "radius": r,
                    "horizon": self.horizons[r],
                    "count": len(self.levels[r]),
                    "components": [to_jsonable(c) for c in self.levels[r]],
                }
                for r in self.schedule
            ],
            "refinement": [
                {"radius": r, "maps": [[to_jsonable(a), to_jsonable(b)] for a, b in self.refinement[r].items()]}
                for r in self.schedule[1:]
            ],
        }

    def to_dot(self) -> str:
        def node(r, c):
            return f'"r{r}:{_dot_label(c)}"'

        lines = ["digraph endtree {", "\trankdir=TB;", f'\t"base" [label="{_dot_label(self.base) or "e"}", shape=box];']
        for r in self.schedule:
            lines.append("\t{")
            lines.append("\t\trank = same;")
            for c in self.levels[r]:
                lines.append(f'\t\t{node(r, c)} [label="{_dot_label(c)}"];')
            lines.append("\t}")
        first = self.schedule[0]
        for c in self.levels[first]:
            lines.append(f'\t"base" -> {node(first, c)};')
        for prev, r in zip(self.schedule, self.schedule[1:]):
            for c, parent in self.refinement[r].items():
                lines.append(f"\t{node(prev, parent)} -> {node(r, c)};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _dot_label(p) -> str:
    if isinstance(p, tuple):
        return ",".join(str(c) for c in p)
    return str(p).replace('"', r"\"")


def end_tree(
    graph: LazyGraph,
    base: Point,
    radius_schedule: Iterable[int],
    horizon_policy: Callable[[int], int] = default_horizon,
) -> EndTree:
    schedule = tuple(int(r) for r in radius_schedule)
    if not schedule:
        raise InputError("radius schedule is empty")
    if any(a >= b for a, b in zip(schedule, schedule[1:])):
        raise InputError(f"radius schedule must be strictly increasing: {schedule}")
    horizons, levels, refinement = {}, {}, {}
    for r in schedule:
        h = horizon_policy(r)
        if h <= r:
            raise InputError(f"horizon policy gives {h} <= {r}")
        horizons[r] = h
        comps = complement_components(graph, base, r, h)
        levels[r] = tuple(sorted(comps.unbounded, key=point_key))
    for prev, r in zip(schedule, schedule[1:]):
        refinement[r] = {c: component_of(graph, base, prev, horizons[prev], c) for c in levels[r]}
    return EndTree(graph, base, schedule, horizons, levels, refinement)


def end_class_count(tree: EndTree, level: int) -> int:
    if level not in tree.levels:
        raise InputError(f"level {level} not in schedule {tree.schedule}")
    return len(tree.levels[level])
