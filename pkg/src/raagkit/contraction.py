"""Contracting segments and elements at a finite scale, alignment, independence.

A segment γ fails the ``D``-test at radius ``R`` when some geodesic κ lies in the
``R``-neighbourhood of γ, stays at distance ``> D`` from it, and has nearest-point
projection onto γ of diameter ``≥ D``.  A failure is a certificate (the witness
re-verifies from raw distances); a pass only means no witness exists inside the
search window.

The window is explored once per segment by a multi-source breadth-first search
from the points of γ, which yields exact distances to γ and exact projection sets
for every point of the window.  Witnesses are then found by growing geodesic
cones inside the region ``D < d(·, γ) ≤ R``: a κ with ``diam π_γ(κ) ≥ D`` contains
a sub-geodesic whose two endpoints alone already realise that diameter, so it is
enough to look for pairs of points joined by a geodesic inside the region.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import UsageError
from .group import RAAG, Element, cancels, invert, length, power, right_neighbours
from .metric import (
    CONCATENATED,
    GEODESIC,
    PathSegment,
    canonical_geodesic,
    diameter,
    distance,
    first_letters,
    path_from_codes,
    project,
    projection_points,
)

DEFAULT_GRID = (1, 2, 4, 8, 16)


@dataclass(frozen=True)
class ContractionParams:
    D: int
    R: int
    geodesic_cap: int = 200
    D_grid: tuple = DEFAULT_GRID

    def __post_init__(self):
        if self.D < 1 or self.R < 1 or self.geodesic_cap < 1:
            raise UsageError("D, R and geodesic_cap must be positive")
        if self.R <= self.D:
            raise UsageError(f"test radius R={self.R} must exceed D={self.D}")
        grid = tuple(self.D_grid)
        if not grid or any(d < 1 for d in grid) or any(a >= b for a, b in zip(grid, grid[1:])):
            raise UsageError(f"D_grid must be a strictly increasing list of positive integers, got {grid}")
        object.__setattr__(self, "D_grid", grid)


@dataclass(frozen=True)
class Witness:
    """A geodesic κ certifying that γ is not ``D``-contracting."""

    D: int
    kappa: PathSegment
    distance_to_segment: int  # d(γ, κ)
    projection_diameter: int  # diam π_γ(κ)

    def as_dict(self) -> dict:
        return {
            "D": self.D,
            "kappa_start": str(self.kappa.first),
            "kappa_end": str(self.kappa.last),
            "kappa_length": self.kappa.length,
            "distance": self.distance_to_segment,
            "projection_diameter": self.projection_diameter,
        }


def verify_witness(segment: PathSegment, w: Witness) -> bool:
    """Recompute a witness from raw distances."""
    kappa = w.kappa
    if distance(kappa.first, kappa.last) != kappa.length:
        return False
    kappa.letters()
    d = min(project(p, segment).distance for p in kappa.points)
    diam = diameter(projection_points(segment, kappa.points))
    return d == w.distance_to_segment and diam == w.projection_diameter and d > w.D and diam >= w.D


class Neighbourhood:
    """The ``R``-neighbourhood of a path with exact distances and projections.

    Nodes are integers; ``pts[i]`` is the normal form, ``dist[i]`` the distance to
    the path and ``proj[i]`` a bitmask over the path's distinct points.
    """

    def __init__(self, segment: PathSegment, R: int):
        group = segment.group
        self.segment = segment
        self.group = group
        self.R = R
        anchors = segment.distinct_points()
        self.anchors = anchors
        self._anchor_dist = None
        self._diam_memo: dict = {}
        adj = group.adj
        index: dict = {}
        pts, dist, proj = [], [], []
        for k, p in enumerate(anchors):
            index[p.codes] = k
            pts.append(p.codes)
            dist.append(0)
            proj.append(1 << k)
        nbr: list = [None] * len(pts)
        frontier = list(range(len(pts)))
        for layer in range(1, R + 1):
            new = []
            for u in frontier:
                row = []
                pu = proj[u]
                for c, t in enumerate(right_neighbours(pts[u], adj)):
                    v = index.get(t)
                    if v is None:
                        v = len(pts)
                        index[t] = v
                        pts.append(t)
                        dist.append(layer)
                        proj.append(pu)
                        nbr.append(None)
                        new.append(v)
                    elif dist[v] == layer:
                        proj[v] |= pu
                    row.append((c, v))
                nbr[u] = row
            frontier = new
        for u in frontier:
            row = []
            for c, t in enumerate(right_neighbours(pts[u], adj)):
                v = index.get(t)
                if v is not None:
                    row.append((c, v))
            nbr[u] = row
        self.index = index
        self.pts = pts
        self.dist = dist
        self.proj = proj
        self.nbr = nbr

    def __len__(self):
        return len(self.pts)

    def anchor_distances(self) -> list:
        if self._anchor_dist is None:
            a = self.anchors
            self._anchor_dist = [[distance(p, q) for q in a] for p in a]
        return self._anchor_dist

    def mask_diameter(self, mask: int) -> int:
        memo = self._diam_memo
        if mask in memo:
            return memo[mask]
        bits = [i for i in range(mask.bit_length()) if (mask >> i) & 1]
        if self.segment.kind != CONCATENATED:
            # distinct points of a geodesic are at distance |i - j|
            value = bits[-1] - bits[0]
        else:
            dm = self.anchor_distances()
            value = max((dm[i][j] for i in bits for j in bits), default=0)
        memo[mask] = value
        return value

    def element(self, node: int) -> Element:
        return Element(self.group, self.pts[node])

    # -- witness search -----------------------------------------------------------

    def _cone(self, x: int, D: int, stop_at_first: bool):
        """Geodesic cone from ``x`` inside ``D < dist ≤ R``; yields failing endpoints."""
        dist, nbr, proj = self.dist, self.nbr, self.proj
        adj = self.group.adj
        px = proj[x]
        if self.mask_diameter(px) >= D:
            yield x
            if stop_at_first:
                return
        layer = [(x, ())]
        seen = {x}
        while layer:
            nxt = []
            for z, w in layer:
                for c, v in nbr[z]:
                    if v in seen or dist[v] <= D or cancels(w, c, adj):
                        continue
                    seen.add(v)
                    nxt.append((v, w + (c,)))
                    if self.mask_diameter(px | proj[v]) >= D:
                        yield v
                        if stop_at_first:
                            return
            layer = nxt

    def _sources(self, D: int) -> list:
        """Far points that can still start a witness, ShortLex-sorted.

        A geodesic in the far region stays inside one connected component of it,
        so a source is useless when its projection together with everything its
        component projects to spans less than ``D``.
        """
        dist, nbr, proj = self.dist, self.nbr, self.proj
        comp: dict = {}
        comp_mask = []
        for s in range(len(self.pts)):
            if dist[s] <= D or s in comp:
                continue
            cid = len(comp_mask)
            comp[s] = cid
            mask = 0
            stack = [s]
            while stack:
                u = stack.pop()
                mask |= proj[u]
                for _, v in nbr[u]:
                    if dist[v] > D and v not in comp:
                        comp[v] = cid
                        stack.append(v)
            comp_mask.append(mask)
        live = [self.mask_diameter(m) >= D for m in comp_mask]
        far = [i for i, cid in comp.items() if live[cid] and self.mask_diameter(proj[i] | comp_mask[cid]) >= D]
        far.sort(key=lambda i: (len(self.pts[i]), self.pts[i]))
        return far

    def has_witness(self, D: int) -> bool:
        for x in self._sources(D):
            for _ in self._cone(x, D, True):
                return True
        return False

    def find_witness(self, D: int) -> Witness | None:
        """The least failing ``(x, y, geodesic)`` in ShortLex / lexicographic order."""
        for x in self._sources(D):
            ends = list(self._cone(x, D, False))
            if not ends:
                continue
            y = min(ends, key=lambda i: (len(self.pts[i]), self.pts[i]))
            kappa = self._least_geodesic(x, y, D)
            return self._make_witness(kappa, D)
        return None

    def _least_geodesic(self, x: int, y: int, D: int) -> PathSegment:
        group = self.group
        target = Element(group, self.pts[y])
        dead: set = set()

        def rec(z: int, rest: tuple, acc: list):
            if not rest:
                return list(acc)
            if z in dead:
                return None
            row = dict(self.nbr[z])
            for c, i in first_letters(rest, group):
                v = row.get(c)
                if v is None or self.dist[v] <= D:
                    continue
                acc.append(c)
                out = rec(v, group.from_codes(rest[:i] + rest[i + 1 :]).codes, acc)
                acc.pop()
                if out is not None:
                    return out
            dead.add(z)
            return None

        start = Element(group, self.pts[x])
        rest = group.from_codes([c ^ 1 for c in reversed(start.codes)] + list(target.codes)).codes
        word = rec(x, rest, [])
        return path_from_codes(start, word)

    def _make_witness(self, kappa: PathSegment, D: int) -> Witness:
        nodes = [self.index[p.codes] for p in kappa.points]
        mask = 0
        for n in nodes:
            mask |= self.proj[n]
        return Witness(
            D=D,
            kappa=kappa,
            distance_to_segment=min(self.dist[n] for n in nodes),
            projection_diameter=self.mask_diameter(mask),
        )


def is_D_contracting_segment(segment: PathSegment, params: ContractionParams):
    """``(passed, witness)``; ``witness`` is None on a pass."""
    if params.R <= params.D:
        raise UsageError("R must exceed D")
    if len(segment) == 1:
        return True, None
    nb = Neighbourhood(segment, params.R)
    w = nb.find_witness(params.D)
    return w is None, w


@dataclass
class ContractionReport:
    segment: PathSegment
    R: int
    D_grid: tuple
    caps: dict
    D_star: int | None
    witnesses: list = field(default_factory=list)
    vacuous: tuple = ()  # grid values >= R: nothing at distance > D fits in the window
    elapsed_ms: float | None = None

    def as_dict(self, include_timing: bool = False) -> dict:
        return {
            "segment_endpoints": [str(self.segment.first), str(self.segment.last)],
            "segment_length": self.segment.length,
            "D_grid": list(self.D_grid),
            "R": self.R,
            "caps": dict(self.caps),
            "D_star": self.D_star,
            "vacuous_D": list(self.vacuous),
            "witnesses": [w.as_dict() for w in self.witnesses],
            "elapsed_ms": round(self.elapsed_ms, 3) if include_timing and self.elapsed_ms is not None else None,
        }


def empirical_contraction_constant(
    segment: PathSegment, R: int, D_grid: Sequence[int] = DEFAULT_GRID, caps: dict | None = None
) -> ContractionReport:
    """Least grid value with no witness at radius ``R``.

    Grid values ``≥ R`` pass vacuously (no point at distance ``> D`` lies in the
    window) and are listed in ``vacuous``.
    """
    grid = tuple(D_grid)
    if not grid:
        raise UsageError("empty D grid")
    t0 = time.perf_counter()
    nb = Neighbourhood(segment, R) if len(segment) > 1 else None
    witnesses = []
    D_star = None
    for D in grid:
        w = nb.find_witness(D) if nb is not None and D < R else None
        if w is None:
            D_star = D
            break
        witnesses.append(w)
    return ContractionReport(
        segment=segment,
        R=R,
        D_grid=grid,
        caps=dict(caps or {}),
        D_star=D_star,
        witnesses=witnesses,
        vacuous=tuple(d for d in grid if d >= R),
        elapsed_ms=(time.perf_counter() - t0) * 1000,
    )


# --- axes and element classification ------------------------------------------------


@dataclass(frozen=True)
class AxisApprox:
    g: Element
    m: int
    path: PathSegment
    translation_estimate: Fraction
    elliptic: bool

    def middle(self) -> PathSegment:
        """Middle half of the power path (the outer quarters carry endpoint effects)."""
        L = self.path.length
        q = L // 4
        return self.path.sub(q, L - q)


def axis(g: Element, m: int) -> AxisApprox:
    """Concatenated canonical geodesics ``[gⁱ, gⁱ⁺¹]`` for ``-m ≤ i < m``."""
    if g.is_identity():
        raise UsageError("the identity has no axis")
    if m < 1:
        raise UsageError("m must be positive")
    start = power(g, -m)
    path = path_from_codes(start, g.codes * (2 * m), CONCATENATED)
    n2m = length(power(g, 2 * m))
    return AxisApprox(g, m, path, Fraction(n2m, 2 * m), n2m < m)


CONTRACTING = "contracting-at-scale"
NOT_CONTRACTING = "not-D-contracting-at-scale"
ELLIPTIC = "elliptic-at-scale"


@dataclass(frozen=True)
class Classification:
    status: str
    D_star: int | None
    D: int
    R: int
    m: int

    @property
    def contracting(self) -> bool:
        return self.status == CONTRACTING


def _symmetries(group: RAAG) -> list:
    """Letter-code permutations induced by graph automorphisms and per-vertex inversions."""
    k = group.rank_count
    adj = group.adj
    autos = []
    perms = itertools.permutations(range(k)) if k <= 6 else [tuple(range(k))]
    for p in perms:
        if all(((adj[u] >> v) & 1) == ((adj[p[u]] >> p[v]) & 1) for u in range(k) for v in range(k)):
            autos.append(p)
    out = []
    for p in autos:
        for flips in range(1 << k):
            out.append(tuple(2 * p[c >> 1] + ((c & 1) ^ ((flips >> (c >> 1)) & 1)) for c in range(2 * k)))
    return out


class SegmentTestCache:
    """Memoises pass/fail of the ``D``-test on paths up to Cayley-graph isometry.

    The test only sees the point set of the path, so two paths related by a left
    translation, a label-preserving automorphism or a reversal get the same answer.
    Keys are the lexicographically least image of the letter sequence.
    """

    def __init__(self, group: RAAG):
        self.group = group
        n = 2 * group.rank_count
        self._tables = [bytes(s) + bytes(range(n, 256)) for s in _symmetries(group)]
        self._inv = bytes(c ^ 1 for c in range(n)) + bytes(range(n, 256))
        self._data: dict = {}
        self.hits = 0
        self.misses = 0

    def key(self, letters) -> bytes:
        fwd = bytes(letters)
        rev = fwd[::-1].translate(self._inv)
        return min(w.translate(t) for t in self._tables for w in (fwd, rev))

    def get(self, key: bytes, D: int, R: int, kind: str):
        value = self._data.get((D, R, kind, key))
        if value is None:
            self.misses += 1
        else:
            self.hits += 1
        return value

    def put(self, key: bytes, D: int, R: int, kind: str, value: bool) -> None:
        self._data[(D, R, kind, key)] = value

    def __len__(self):
        return len(self._data)


def cyclic_reduction(g: Element) -> tuple:
    """``(t, y)`` with ``g = t·y·t⁻¹`` and no first letter of ``y`` cancelling a last letter.

    Powers of a cyclically reduced ``y`` are geodesic, so ``t·(power path of y)``
    is a geodesic axis of ``g``.
    """
    group = g.group
    t: list = []
    y = g
    while len(y.codes) > 1:
        firsts = {c for c, _ in first_letters(y.codes, group)}
        lasts = {c ^ 1 for c, _ in first_letters(invert(y).codes, group)}
        common = sorted(c for c in firsts if c ^ 1 in lasts)
        if not common:
            break
        c = common[0]
        t.append(c)
        y = group.from_codes([c ^ 1, *y.codes, c])
    return group.from_codes(t), y


def classify_element(
    g: Element,
    params: ContractionParams,
    m: int,
    cache: SegmentTestCache | None = None,
    find_D_star: bool = True,
) -> Classification:
    """Classify ``g`` by testing the middle half of an axis at ``(D, R)``.

    The axis is the power path of the cyclic reduction ``y`` of ``g`` (translated by
    the conjugator, which the test cannot see).  The plain power path of ``g``
    backtracks by ``|t|`` at every period and those spurs would be tested too.

    ``D_star`` is the least value among the grid entries ``≤ D`` (and ``D`` itself)
    that passes; with ``find_D_star=False`` only ``D`` is tested and ``D_star = D``.
    """
    D, R = params.D, params.R
    if g.is_identity() or m < 1:
        return Classification(ELLIPTIC, None, D, R, m)
    _, y = cyclic_reduction(g)
    n2m = length(power(y, 2 * m))
    if n2m < m:
        return Classification(ELLIPTIC, None, D, R, m)
    kind = GEODESIC if n2m == 2 * m * len(y.codes) else CONCATENATED
    L = 2 * m * len(y.codes)
    q = L // 4
    letters = (y.codes * (2 * m))[q : L - q]
    key = cache.key(letters) if cache is not None else None
    state: dict = {}

    def test(d: int) -> bool:
        if cache is not None:
            hit = cache.get(key, d, R, kind)
            if hit is not None:
                return hit
        if "nb" not in state:
            seg = PathSegment(axis(y, m).middle().points, kind)
            state["nb"] = Neighbourhood(seg, R) if len(seg) > 1 else None
        nb = state["nb"]
        value = nb is None or not nb.has_witness(d)
        if cache is not None:
            cache.put(key, d, R, kind, value)
        return value

    if not test(D):
        return Classification(NOT_CONTRACTING, None, D, R, m)
    D_star = D
    if find_D_star:
        for d in sorted((x for x in params.D_grid if x < D), reverse=True):
            if not test(d):
                break
            D_star = d
    return Classification(CONTRACTING, D_star, D, R, m)


# --- independence and alignment -----------------------------------------------------


def independence_diameter(g: Element, h: Element, m: int) -> int:
    """``max(diam π_{axis g}(axis h), diam π_{axis h}(axis g))`` on power-path axes."""
    if g.is_identity() or h.is_identity():
        raise UsageError("independence needs non-identity elements")
    ag, ah = axis(g, m), axis(h, m)
    if ag.elliptic or ah.elliptic:
        raise UsageError("elliptic element at this scale")
    d1 = diameter(projection_points(ag.path, ah.path.distinct_points()))
    d2 = diameter(projection_points(ah.path, ag.path.distinct_points()))
    return max(d1, d2)


def _as_path(item) -> PathSegment:
    if isinstance(item, PathSegment):
        return item
    if isinstance(item, Element):
        return PathSegment((item,))
    raise UsageError(f"expected a PathSegment or Element, got {type(item).__name__}")


def alignment_constants(paths: Sequence) -> list:
    """For each consecutive pair, ``(d_{κi}(yi, κi+1), d_{κi+1}(xi+1, κi))``."""
    if len(paths) < 2:
        raise UsageError("alignment needs at least two paths")
    segs = [_as_path(p) for p in paths]
    out = []
    for k1, k2 in zip(segs, segs[1:]):
        a = diameter(projection_points(k1, [k1.last]) | projection_points(k1, k2.distinct_points()))
        b = diameter(projection_points(k2, [k2.first]) | projection_points(k2, k1.distinct_points()))
        out.append((a, b))
    return out


def is_C_aligned(paths: Sequence, C: int) -> bool:
    return all(a < C and b < C for a, b in alignment_constants(paths))


def alignment_constant(paths: Sequence) -> int:
    """Largest alignment quantity; the tuple is C-aligned exactly for ``C`` above it."""
    return max(max(a, b) for a, b in alignment_constants(paths))


def segment_between(x: Element, y: Element) -> PathSegment:
    return canonical_geodesic(x, y)
