"""Word-metric geometry in the Cayley graph: balls, geodesics, projections."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .counting import build_automaton, sphere_count
from .errors import CacheError, InputError, ResourceLimitError, UsageError
from .group import RAAG, Element, _same_group, inverse_codes, push_letter, reduced_length

GEODESIC = "geodesic"
CONCATENATED = "concatenated"

MAX_DIAMETER_POINTS = 10_000


def distance(x: Element, y: Element) -> int:
    _same_group(x, y)
    a, b = x.codes, y.codes
    k = 0
    m = min(len(a), len(b))
    while k < m and a[k] == b[k]:
        k += 1
    if k == len(a):
        return len(b) - k
    if k == len(b):
        return len(a) - k
    return reduced_length(inverse_codes(a[k:]) + list(b[k:]), x.group.adj)


def relative(x: Element, y: Element) -> Element:
    """The element ``x⁻¹y``."""
    _same_group(x, y)
    w: list = []
    adj = x.group.adj
    for c in inverse_codes(x.codes):
        push_letter(w, c, adj)
    for c in y.codes:
        push_letter(w, c, adj)
    return Element(x.group, tuple(w))


def translate(t: Element, codes: Sequence[int]) -> Element:
    w = list(t.codes)
    adj = t.group.adj
    for c in codes:
        push_letter(w, c, adj)
    return Element(t.group, tuple(w))


@dataclass(frozen=True)
class PathSegment:
    """Consecutive points at distance one.  ``kind`` is ``"geodesic"`` or ``"concatenated"``."""

    points: tuple
    kind: str = GEODESIC

    def __post_init__(self):
        if not self.points:
            raise UsageError("a path needs at least one point")
        object.__setattr__(self, "points", tuple(self.points))
        if self.kind not in (GEODESIC, CONCATENATED):
            raise UsageError(f"unknown path kind {self.kind!r}")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def group(self) -> RAAG:
        return self.points[0].group

    @property
    def first(self) -> Element:
        return self.points[0]

    @property
    def last(self) -> Element:
        return self.points[-1]

    @property
    def length(self) -> int:
        return len(self.points) - 1

    def letters(self) -> tuple:
        """Letter codes ``s_i`` with ``points[i+1] = points[i]·s_i``."""
        out = []
        for x, y in zip(self.points, self.points[1:]):
            r = relative(x, y)
            if len(r.codes) != 1:
                raise UsageError("consecutive path points are not adjacent")
            out.append(r.codes[0])
        return tuple(out)

    def check(self) -> None:
        """Raise if the path invariants fail."""
        self.letters()
        if self.kind == GEODESIC and distance(self.first, self.last) != self.length:
            raise UsageError("path marked geodesic is not a geodesic")

    def translate(self, t: Element) -> "PathSegment":
        return PathSegment(tuple(t * p for p in self.points), self.kind)

    def sub(self, i: int, j: int) -> "PathSegment":
        """Points ``i..j`` inclusive."""
        return PathSegment(self.points[i : j + 1], self.kind)

    def reversed(self) -> "PathSegment":
        return PathSegment(self.points[::-1], self.kind)

    def distinct_points(self) -> list:
        seen = {}
        for p in self.points:
            seen.setdefault(p, None)
        return list(seen)


def path_from_codes(start: Element, codes: Iterable[int], kind: str = GEODESIC) -> PathSegment:
    pts = [start]
    w = list(start.codes)
    adj = start.group.adj
    for c in codes:
        push_letter(w, c, adj)
        pts.append(Element(start.group, tuple(w)))
    return PathSegment(tuple(pts), kind)


def point_path(x: Element) -> PathSegment:
    return PathSegment((x,), GEODESIC)


def canonical_geodesic(x: Element, y: Element) -> PathSegment:
    """Geodesic from ``x`` reading the normal form of ``x⁻¹y`` letter by letter."""
    return path_from_codes(x, relative(x, y).codes)


# --- geodesic enumeration --------------------------------------------------------------


def first_letters(codes: Sequence[int], group: RAAG) -> list:
    """Letters that can start a geodesic spelling of the element with normal form ``codes``.

    Returned as ``(letter, position)`` in increasing letter order.
    """
    adj = group.adj
    out = []
    seen_vertices = 0
    for i, c in enumerate(codes):
        v = c >> 1
        if not (seen_vertices >> v) & 1:
            # every earlier letter must commute with c
            if all((adj[v] >> (codes[j] >> 1)) & 1 for j in range(i)):
                out.append((c, i))
        seen_vertices |= 1 << v
    out.sort()
    return out


@dataclass(frozen=True)
class GeodesicEnumeration:
    paths: tuple
    count: int | None  # exact number of geodesics when not truncated
    truncated: bool


def iter_geodesic_words(codes: Sequence[int], group: RAAG) -> Iterator[tuple]:
    """All geodesic spellings of the element, in lexicographic order."""
    n = len(codes)
    prefix: list = []

    def rec(rest: tuple):
        if not rest:
            yield tuple(prefix)
            return
        for c, i in first_letters(rest, group):
            prefix.append(c)
            yield from rec(group.from_codes(rest[:i] + rest[i + 1 :]).codes)
            prefix.pop()

    if n == 0:
        yield ()
        return
    yield from rec(tuple(codes))


def enumerate_geodesics(x: Element, y: Element, cap: int = 200) -> GeodesicEnumeration:
    if cap < 1:
        raise UsageError("cap must be positive")
    r = relative(x, y)
    paths = []
    truncated = False
    for word in iter_geodesic_words(r.codes, x.group):
        if len(paths) == cap:
            truncated = True
            break
        paths.append(path_from_codes(x, word))
    return GeodesicEnumeration(tuple(paths), None if truncated else len(paths), truncated)


def count_geodesics(x: Element, y: Element) -> int:
    """Exact number of geodesics from ``x`` to ``y`` (memoised over remaining suffixes)."""
    group = x.group
    memo: dict = {}

    def rec(rest: tuple) -> int:
        if not rest:
            return 1
        if rest in memo:
            return memo[rest]
        total = sum(rec(group.from_codes(rest[:i] + rest[i + 1 :]).codes) for _, i in first_letters(rest, group))
        memo[rest] = total
        return total

    return rec(relative(x, y).codes)


# --- projections -----------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectionResult:
    source: Element
    target: PathSegment
    projections: frozenset  # indices into target.points
    distance: int

    def points(self) -> set:
        return {self.target.points[i] for i in self.projections}


def project(x: Element, path: PathSegment) -> ProjectionResult:
    if path is None or not len(path):
        raise UsageError("cannot project onto an empty path")
    ds = [distance(x, p) for p in path.points]
    d = min(ds)
    return ProjectionResult(x, path, frozenset(i for i, v in enumerate(ds) if v == d), d)


def projection_points(path: PathSegment, ys: Iterable[Element]) -> set:
    out: set = set()
    for y in ys:
        out |= project(y, path).points()
    return out


def diameter(points: Iterable[Element]) -> int:
    pts = list(dict.fromkeys(points))
    if len(pts) > MAX_DIAMETER_POINTS:
        raise ResourceLimitError(f"diameter of {len(pts)} points exceeds the {MAX_DIAMETER_POINTS} point guard")
    best = 0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = distance(pts[i], pts[j])
            if d > best:
                best = d
    return best


def projection_diameter(path: PathSegment, ys: Iterable[Element], ys2: Iterable[Element] = ()) -> int:
    """``diam(π_γ(Y) ∪ π_γ(Y′))``."""
    ys, ys2 = list(ys), list(ys2)
    if not ys and not ys2:
        raise UsageError("projection_diameter needs at least one point")
    return diameter(projection_points(path, ys + ys2))


def set_distance(xs: Iterable[Element], ys: Iterable[Element]) -> int:
    ys = list(ys)
    return min(distance(x, y) for x in xs for y in ys)


def hausdorff_distance(p: PathSegment, q: PathSegment) -> int:
    return set_hausdorff(p.distinct_points(), q.distinct_points())


def set_hausdorff(a: Iterable[Element], b: Iterable[Element]) -> int:
    """Discrete Hausdorff distance between two nonempty finite point sets."""
    a, b = list(dict.fromkeys(a)), list(dict.fromkeys(b))
    if not a or not b:
        raise UsageError("Hausdorff distance needs nonempty sets")
    dm = [[distance(x, y) for y in b] for x in a]
    h1 = max(min(row) for row in dm)
    h2 = max(min(dm[i][j] for i in range(len(a))) for j in range(len(b)))
    return max(h1, h2)


def fellow_travel(p: PathSegment, q: PathSegment, D: int) -> bool:
    return distance(p.first, q.first) < D and distance(p.last, q.last) < D and hausdorff_distance(p, q) < D


# --- balls -----------------------------------------------------------------------------


@dataclass
class BallIndex:
    group: RAAG
    radius: int
    elements_by_sphere: list  # list of lists of Element

    @property
    def size(self) -> int:
        return sum(len(s) for s in self.elements_by_sphere)

    def sphere(self, r: int) -> list:
        return self.elements_by_sphere[r]

    def sphere_sizes(self) -> list:
        return [len(s) for s in self.elements_by_sphere]

    def __iter__(self):
        for s in self.elements_by_sphere:
            yield from s


def iter_sphere_codes(group: RAAG, n: int) -> Iterator[tuple]:
    """Normal forms of length ``n`` in lexicographic order, generated through the automaton."""
    yield from build_automaton(group).words(n)


def enumerate_ball(
    group: RAAG,
    n: int,
    max_elements: int | None = None,
    cache_dir: str | Path | None = None,
) -> BallIndex:
    """The ball ``B(n)`` sphere by sphere.

    With ``cache_dir`` set, a valid cached ball of radius ``≥ n`` is reused and a
    smaller one is extended (only the missing spheres are generated).
    """
    if n < 0:
        raise UsageError("radius must be non-negative")
    spheres: list = []
    if cache_dir is not None:
        cached = load_cached_ball(group, cache_dir)
        if cached is not None:
            spheres = cached.elements_by_sphere[: n + 1]
    automaton = build_automaton(group)
    total = sum(len(s) for s in spheres)
    for r in range(len(spheres), n + 1):
        size = sphere_count(automaton, r)
        if max_elements is not None and total + size > max_elements:
            raise ResourceLimitError(
                f"ball of radius {n} exceeds {max_elements} elements at radius {r}", completed=r - 1
            )
        spheres.append([Element(group, w) for w in automaton.words(r)])
        total += size
    ball = BallIndex(group, n, spheres)
    if cache_dir is not None:
        save_ball_cache(ball, cache_dir)
    return ball


def bfs_spheres(group: RAAG, n: int) -> list:
    """Spheres of radius ``0..n`` by breadth-first search with hashing.

    Independent of the automaton: uses only right multiplication by generators.
    The Cayley graph is bipartite (all relators have even length), so the next
    sphere is the set of neighbours of the current one minus the previous one.
    """
    adj = group.adj
    gens = group.generator_codes
    prev: set = set()
    cur = {()}
    out = [sorted(cur)]
    for _ in range(n):
        nxt = set()
        for x in cur:
            for c in gens:
                w = list(x)
                push_letter(w, c, adj)
                t = tuple(w)
                if t not in prev and t not in cur:
                    nxt.add(t)
        prev, cur = cur, nxt
        out.append(sorted(cur))
    return out


# --- ball cache ------------------------------------------------------------------------

CACHE_ENV = "RAAGKIT_CACHE_DIR"


def default_cache_dir() -> Path | None:
    value = os.environ.get(CACHE_ENV)
    return Path(value) if value else None


def ball_cache_path(group: RAAG, cache_dir: str | Path) -> Path:
    return Path(cache_dir) / f"ball-{group.digest[:16]}.txt"


def save_ball_cache(ball: BallIndex, cache_dir: str | Path) -> Path:
    """Header line, then one normal form per line (``.`` for the identity), shortest first."""
    path = ball_cache_path(ball.group, cache_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# raagkit-ball digest={ball.group.digest} radius={ball.radius}\n")
        for x in ball:
            fh.write((" ".join(str(c) for c in x.codes) or ".") + "\n")
    os.replace(tmp, path)
    return path


def read_ball_cache(group: RAAG, path: str | Path) -> BallIndex:
    """Read and fully re-validate a cache file; raises :class:`CacheError` on any mismatch."""
    automaton = build_automaton(group)
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            fields = dict(tok.split("=", 1) for tok in header[2:] if "=" in tok)
            if header[:2] != ["#", "raagkit-ball"] or fields.get("digest") != group.digest:
                raise CacheError(f"{path}: digest mismatch")
            radius = int(fields["radius"])
            spheres: list = [[] for _ in range(radius + 1)]
            for line in fh:
                line = line.strip()
                codes = () if line == "." else tuple(int(t) for t in line.split())
                if len(codes) > radius or not automaton.accepts(codes):
                    raise CacheError(f"{path}: record {line!r} is not a normal form within radius {radius}")
                spheres[len(codes)].append(Element(group, codes))
    except (OSError, ValueError, KeyError, IndexError) as exc:
        raise CacheError(f"{path}: unreadable cache ({exc})") from exc
    for r, s in enumerate(spheres):
        if len(s) != sphere_count(automaton, r) or len(set(s)) != len(s):
            raise CacheError(f"{path}: sphere {r} is incomplete or has duplicates")
    return BallIndex(group, radius, spheres)


def load_cached_ball(group: RAAG, cache_dir: str | Path) -> BallIndex | None:
    """A validated cached ball, or None.  Invalid caches are deleted so they get rebuilt."""
    path = ball_cache_path(group, cache_dir)
    if not path.exists():
        return None
    try:
        return read_ball_cache(group, path)
    except CacheError:
        path.unlink(missing_ok=True)
        return None


def evict_ball_cache(group: RAAG, cache_dir: str | Path) -> bool:
    path = ball_cache_path(group, cache_dir)
    if path.exists():
        path.unlink()
        return True
    return False
