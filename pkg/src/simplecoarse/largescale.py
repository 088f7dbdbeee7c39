"""Covers, stars and controlled sets on finite truncations; medium ends; the
translation between simple coarse structures and large scale structures.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .ends import (
    DISTINGUISHED,
    EQUIVALENT,
    INCONCLUSIVE,
    Budget,
    EndRelation,
    Ray,
    ScaleVerdict,
    conjunction,
    equivalent,
)
from .errors import InputError
from .space import BoundedStructure, FiniteMetricSpace, Point, is_bounded, point_key, sorted_points, to_jsonable

# --------------------------------------------------------------------------
# covers and stars


@dataclass(frozen=True)
class Cover:
    """A finite family of finite point sets, optionally over a carrier truncation.

    Duplicate elements are kept (families are indexed).  ``uncovered`` lists
    carrier points lying in no element; a family with uncovered points is a
    uniformly bounded family rather than a cover.
    """

    elements: tuple
    carrier: FiniteMetricSpace | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(frozenset(e) for e in self.elements))

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    @property
    def points(self) -> frozenset:
        return frozenset().union(*self.elements)

    @property
    def uncovered(self) -> tuple:
        if self.carrier is None:
            return ()
        pts = self.points
        return tuple(p for p in self.carrier.points if p not in pts)

    @property
    def is_cover(self) -> bool:
        return not self.uncovered

    def multiplicity(self, p: Point) -> int:
        return sum(p in e for e in self.elements)

    def mesh(self, metric: FiniteMetricSpace | None = None) -> float:
        metric = metric or self.carrier
        if metric is None:
            raise InputError("mesh needs a metric")
        return max((metric.diameter(e) for e in self.elements), default=0.0)

    def to_json(self) -> list:
        return [to_jsonable(sorted_points(e)) for e in self.elements]


def star(B: Iterable[Point], U: Cover | Iterable) -> frozenset:
    """Union of the elements of U that meet B (B itself is not added)."""
    B = frozenset(B)
    return frozenset().union(*(e for e in U if not B.isdisjoint(e)))


def star_family(Bs: Cover | Iterable, U: Cover | Iterable) -> Cover:
    carrier = getattr(Bs, "carrier", None) or getattr(U, "carrier", None)
    return Cover(tuple(star(B, U) for B in Bs), carrier)


def refines(U: Iterable, V: Iterable) -> bool:
    """Every element of U lies inside some element of V."""
    V = [frozenset(v) for v in V]
    return all(any(frozenset(u) <= v for v in V) for u in U)


# --------------------------------------------------------------------------
# controlled sets


@dataclass(frozen=True)
class ControlledSet:
    pairs: frozenset

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset(tuple(p) for p in self.pairs))

    @classmethod
    def diagonal(cls, points: Iterable[Point]) -> ControlledSet:
        return cls(frozenset((p, p) for p in points))

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __contains__(self, pair):
        return tuple(pair) in self.pairs

    def __le__(self, other: ControlledSet) -> bool:
        return self.pairs <= other.pairs

    def __or__(self, other: ControlledSet) -> ControlledSet:
        return ControlledSet(self.pairs | other.pairs)

    def inverse(self) -> ControlledSet:
        return ControlledSet(frozenset((y, x) for x, y in self.pairs))

    def compose(self, other: ControlledSet) -> ControlledSet:
        """{(x, y) : some z has (x, z) in self and (z, y) in other}."""
        out = {}
        for z, y in other.pairs:
            out.setdefault(z, []).append(y)
        return ControlledSet(frozenset((x, y) for x, z in self.pairs for y in out.get(z, ())))

    def slice(self, x: Point) -> frozenset:
        return frozenset(y for a, y in self.pairs if a == x)

    @property
    def points(self) -> frozenset:
        return frozenset(itertools.chain.from_iterable(self.pairs))

    def to_json(self) -> list:
        return [to_jsonable(list(p)) for p in sorted(self.pairs, key=lambda p: (point_key(p[0]), point_key(p[1])))]


def cover_to_controlled(U: Iterable) -> ControlledSet:
    return ControlledSet(frozenset(itertools.chain.from_iterable(itertools.product(B, B) for B in U)))


@dataclass(frozen=True)
class SliceCover:
    """The family {E[x]} indexed by carrier points; ``empty`` lists x with E[x] empty."""

    index: tuple
    cover: Cover
    empty: tuple


def controlled_to_cover(E: ControlledSet, points: Iterable[Point] | None = None) -> SliceCover:
    pts = tuple(sorted_points(points if points is not None else E.points))
    slices = tuple(E.slice(x) for x in pts)
    return SliceCover(pts, Cover(slices), tuple(x for x, s in zip(pts, slices) if not s))


@dataclass(frozen=True)
class AxiomReport:
    """Closure of a generator list under the five coarse-structure axioms.

    ``maximal`` is the antichain of maximal sets reached after ``depth``
    rounds; by axiom (2) the closure is everything below it.  ``axioms`` maps
    each axiom to whether one more application stays inside that closure, and
    ``witnesses`` holds an escaping set when it does not.
    """

    depth: int
    maximal: tuple
    axioms: dict
    witnesses: dict
    stable: bool
    inverses: tuple
    unions: dict
    compositions: dict

    def contains(self, E: ControlledSet) -> bool:
        return any(E <= M for M in self.maximal)

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "stable": self.stable,
            "axioms": self.axioms,
            "witnesses": {k: v.to_json() for k, v in self.witnesses.items()},
            "maximal": [m.to_json() for m in self.maximal],
        }


def _maximal(sets: Iterable[ControlledSet]) -> list:
    uniq = sorted(set(sets), key=lambda s: (-len(s), s.to_json()))
    out = []
    for s in uniq:
        if not any(s <= m for m in out):
            out.append(s)
    return out


AXIOMS = ("diagonal", "subsets", "inverse", "union", "composition")


def _apply_all(family: list, diag: ControlledSet) -> list:
    new = [diag]
    new += [E.inverse() for E in family]
    for E, F in itertools.product(family, repeat=2):
        new.append(E | F)
        new.append(E.compose(F))
    return new


def check_coarse_axioms(generators: Sequence[ControlledSet], universe: Iterable[Point], depth: int = 3) -> AxiomReport:
    """Close ``generators`` under axioms (1)-(5) for ``depth`` rounds and
    test whether each axiom, applied once more, stays in the closure."""
    if depth < 0:
        raise InputError("depth must be nonnegative")
    universe = tuple(sorted_points(universe))
    diag = ControlledSet.diagonal(universe)
    gens = list(generators)
    family = _maximal(gens + [diag])
    stable = False
    for _ in range(depth):
        nxt = _maximal(family + _apply_all(family, diag))
        if nxt == family:
            stable = True
            break
        family = nxt

    def inside(E):
        return any(E <= M for M in family)

    axioms, witnesses = {}, {}
    axioms["diagonal"] = inside(diag)
    if not axioms["diagonal"]:
        witnesses["diagonal"] = diag
    axioms["subsets"] = True
    checks = {
        "inverse": (E.inverse() for E in family),
        "union": (E | F for E, F in itertools.product(family, repeat=2)),
        "composition": (E.compose(F) for E, F in itertools.product(family, repeat=2)),
    }
    for name, cands in checks.items():
        bad = next((E for E in cands if not inside(E)), None)
        axioms[name] = bad is None
        if bad is not None:
            witnesses[name] = bad
    n = len(gens)
    return AxiomReport(
        depth=depth,
        maximal=tuple(family),
        axioms=axioms,
        witnesses=witnesses,
        stable=stable or all(axioms.values()),
        inverses=tuple(E.inverse() for E in gens),
        unions={(i, j): gens[i] | gens[j] for i in range(n) for j in range(n)},
        compositions={(i, j): gens[i].compose(gens[j]) for i in range(n) for j in range(n)},
    )


# --------------------------------------------------------------------------
# medium ends


@dataclass(frozen=True)
class MediumEnd:
    """A sequence of finite nonempty blocks B_n on a ray carrier.

    ``carrier`` is the carrier of the rays built from block selections (a
    graph or collar); ``base`` the base point for escape profiles.
    """

    blocks: tuple
    carrier: object
    base: Point = None

    def __post_init__(self):
        blocks = tuple(frozenset(b) for b in self.blocks)
        for n, b in enumerate(blocks):
            if not b:
                raise InputError(f"block {n} of the medium end is empty")
        object.__setattr__(self, "blocks", blocks)
        if self.base is None:
            object.__setattr__(self, "base", getattr(self.carrier, "root", None))

    def __len__(self):
        return len(self.blocks)

    def last_meet(self, r: float) -> int:
        """Largest n whose block meets the closed ball B(base, r), or -1."""
        hits = [n for n, b in enumerate(self.blocks) if any(self.carrier.size(p, self.base) <= r for p in b)]
        return hits[-1] if hits else -1

    def union(self, other: MediumEnd) -> MediumEnd:
        if len(self) != len(other):
            raise InputError("medium ends of different lengths")
        for n, (b, c) in enumerate(zip(self.blocks, other.blocks)):
            if b.isdisjoint(c):
                raise InputError(f"blocks {n} do not intersect")
        return MediumEnd(tuple(b | c for b, c in zip(self.blocks, other.blocks)), self.carrier, self.base)


def _block_pairs(block: frozenset, carrier, pair_cap: int, fractions: np.ndarray) -> list:
    pts = sorted_points(block)
    pairs = list(itertools.product(pts, pts))
    if len(pairs) <= pair_cap:
        return pairs
    # the farthest pair is always kept; the rest sit at fixed relative
    # positions in the sorted block, so selections stay coherent from one
    # block to the next
    far = max(pairs, key=lambda p: carrier.distance(*p))
    idx = np.floor(fractions * len(pts)).astype(int).clip(0, len(pts) - 1)
    return [far] + [(pts[i], pts[k]) for i, k in idx]


def is_uniformly_bounded_medium_end(
    me: MediumEnd,
    rel: EndRelation,
    pair_cap: int = 16,
    budget: Budget | None = None,
    seed: int = 0,
) -> ScaleVerdict:
    """Compare selection rays x_n, y_n in B_n under ``rel``.

    Each block contributes up to ``pair_cap`` ordered pairs (all of them when
    |B_n|^2 <= pair_cap; otherwise its farthest pair plus pairs at seeded
    relative positions shared by all blocks).  Selection j takes the j-th pair of every block
    (cyclically), plus one selection of farthest pairs; the verdict is the
    conjunction over selections.
    """
    if pair_cap < 1:
        raise InputError("pair_cap must be positive")
    fractions = np.random.default_rng(seed).random((pair_cap - 1, 2))
    per_block = [_block_pairs(b, me.carrier, pair_cap, fractions) for b in me.blocks]
    width = max(len(p) for p in per_block)
    selections = [[pairs[j % len(pairs)] for pairs in per_block] for j in range(width)]
    selections.append([max(pairs, key=lambda p: me.carrier.distance(*p)) for pairs in per_block])
    verdicts = []
    for sel in selections:
        x = Ray(tuple(p[0] for p in sel), me.carrier, me.base, label="select_x")
        y = Ray(tuple(p[1] for p in sel), me.carrier, me.base, label="select_y")
        v = equivalent(rel, x, y, budget)
        if v.distinguished:
            n = v.witness.get("index")
            pair = None if n is None else [to_jsonable(sel[n][0]), to_jsonable(sel[n][1])]
            return DISTINGUISHED({**v.witness, "pair": pair}, selections=len(selections))
        verdicts.append(v)
    return conjunction(verdicts)


def reflexivity_check(
    rel: EndRelation,
    sample: Sequence[tuple[Ray, Ray]],
    budget: Budget | None = None,
    pair_cap: int = 16,
) -> ScaleVerdict:
    """Test that EQUIVALENT pairs give uniformly bounded two-point medium ends."""
    verdicts = []
    for k, (x, y) in enumerate(sample):
        if not equivalent(rel, x, y, budget).equivalent:
            raise InputError(f"sample pair {k} is not EQUIVALENT under {rel!r}")
        n = min(len(x), len(y))
        me = MediumEnd(tuple({x[i], y[i]} for i in range(n)), rel.carrier, x.base)
        verdicts.append(is_uniformly_bounded_medium_end(me, rel, pair_cap, budget))
    return conjunction(verdicts, labels=[f"pair {k}" for k in range(len(sample))])


# --------------------------------------------------------------------------
# large scale structures


def lss_membership(
    U: Cover,
    rel: EndRelation,
    bstruct: BoundedStructure,
    schedule: Sequence[int],
    base: Point = None,
    cap: int = 64,
    budget: Budget | None = None,
    pair_cap: int = 16,
) -> ScaleVerdict:
    """Check the two conditions for U to belong to the induced large scale
    structure, on the truncation ``U.carrier`` (a ball around ``base``).

    Condition 1: the star of each basis ball B(base, r), r in ``schedule``,
    is bounded and stays off the truncation's outer sphere.  Reaching that
    sphere from r <= R/2 refutes the condition; from larger r it is
    INCONCLUSIVE.

    Condition 2: medium ends made of U-elements, one element per sphere
    S(base, n), are uniformly bounded.  Spheres stop before the first one
    met by an element reaching the outer sphere.  Up to ``cap`` such medium ends are
    built, the j-th taking the j-th element at each sphere after ranking
    elements by size (largest first).
    """
    X = U.carrier
    if X is None:
        raise InputError("lss_membership needs a cover over a truncation")
    base = base if base is not None else rel.carrier.root
    if base not in X:
        raise InputError(f"base {base!r} not in the truncation")
    if not schedule:
        raise InputError("schedule is empty")
    dist = {p: X.d(p, base) for p in X.points}
    R = max(dist.values())

    parts, labels = [], []
    for r in schedule:
        B = [p for p in X.points if dist[p] <= r]
        S = star(B, U)
        reach = max((dist[p] for p in S), default=0.0)
        ok = is_bounded(bstruct, S, X)
        labels.append(f"star r={r}")
        if ok and reach < R:
            parts.append(EQUIVALENT(radius=r, star_reach=reach))
        elif 2 * r <= R:
            parts.append(DISTINGUISHED({"radius": r, "star_reach": reach, "star_size": len(S), "truncation": R}))
        else:
            parts.append(INCONCLUSIVE(radius=r, star_reach=reach, truncation=R))

    levels = range(int(R) + 1)
    ranked = []
    for n in levels:
        meets = [e for e in U.elements if any(dist[p] == n for p in e)]
        meets.sort(key=lambda e: (-len(e), to_jsonable(sorted_points(e))))
        # elements reaching the outer sphere may be clipped by the truncation
        if not meets or any(dist[p] >= R for e in meets for p in e):
            break
        ranked.append(meets)
    width = min(cap, max((len(m) for m in ranked), default=0))
    for j in range(width):
        me = MediumEnd(tuple(m[j % len(m)] for m in ranked), rel.carrier, base)
        parts.append(is_uniformly_bounded_medium_end(me, rel, pair_cap, budget))
        labels.append(f"medium end {j}")
    return conjunction(parts, labels)


def c0_uniformly_bounded(U: Cover, base: Point, schedule: Sequence[tuple[float, float]], metric=None) -> ScaleVerdict:
    """For each (r, eps): every element meeting the complement of B(base, r)
    has diameter <= eps outside that ball."""
    X = metric or U.carrier
    if X is None:
        raise InputError("c0_uniformly_bounded needs a metric")
    for r, eps in schedule:
        for k, e in enumerate(U.elements):
            out = [p for p in e if X.d(p, base) > r]
            if not out:
                continue
            diam = X.diameter(out)
            if diam > eps:
                return DISTINGUISHED(
                    {"radius": r, "epsilon": eps, "element": k, "points": to_jsonable(sorted_points(out)), "diameter": diam}
                )
    return EQUIVALENT(schedule=[list(s) for s in schedule])


def repetition_sequences(U: Sequence[Iterable[Point]]) -> tuple[list, list, list]:
    """Spread a list of sets into coupled sequences.

    a_k (least element of U_k) is repeated |U_k| times in x, the elements of
    U_k are listed in y, and U_k is repeated |U_k| times in V, so x_n and y_n
    both lie in V_n.
    """
    xs, ys, Vs = [], [], []
    for k, Uk in enumerate(U):
        pts = sorted_points(Uk)
        if not pts:
            raise InputError(f"set {k} is empty")
        block = frozenset(pts)
        xs += [pts[0]] * len(pts)
        ys += pts
        Vs += [block] * len(pts)
    return xs, ys, Vs
