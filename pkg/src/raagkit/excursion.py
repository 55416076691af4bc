"""Coarse excursions of geodesics into cosets of special subgroups.

For a vertex set Λ the special subgroup ``H = ⟨Λ⟩`` has a simple coset theory:
every element factors uniquely as ``u = h·u'`` with ``h ∈ H`` and ``u'`` the
shortest element of ``Hu``, and ``|u| = |h| + |u'|``.  ``h`` is the largest
Λ-prefix of the normal form, so ``d(u, H) = |u| - |h|`` needs no search.  The
mirror statement (largest Λ-suffix) gives a canonical representative of ``uH``.
A brute-force search over ``H``-balls is kept as an independent check.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence

from .contraction import axis
from .counting import build_automaton, sample_sphere_uniform
from .errors import InputError, UsageError
from .group import RAAG, Element, invert, length, multiply
from .metric import (
    GEODESIC,
    PathSegment,
    canonical_geodesic,
    diameter,
    distance,
    iter_geodesic_words,
    iter_sphere_codes,
    path_from_codes,
    projection_points,
)


class SpecialSubgroup:
    """The subgroup generated by a nonempty set of vertices."""

    def __init__(self, group: RAAG, vertices: Iterable):
        ranks = set()
        for v in vertices:
            if isinstance(v, str):
                if v not in group.names:
                    raise InputError(f"unknown vertex {v!r}")
                ranks.add(group.names.index(v))
            elif isinstance(v, int) and 0 <= v < group.rank_count:
                ranks.add(group.rank[v])
            else:
                raise InputError(f"invalid vertex {v!r}")
        if not ranks:
            raise UsageError("a special subgroup needs at least one vertex")
        self.group = group
        self.ranks = frozenset(ranks)
        self.mask = sum(1 << r for r in ranks)
        self.R_H = 0

    def __repr__(self):
        return f"SpecialSubgroup({', '.join(self.names)})"

    @property
    def names(self) -> tuple:
        return tuple(self.group.names[r] for r in sorted(self.ranks))

    def contains_code(self, c: int) -> bool:
        return bool((self.mask >> (c >> 1)) & 1)

    def contains(self, x: Element) -> bool:
        return all(self.contains_code(c) for c in x.codes)

    def _split(self, codes: Sequence[int], from_left: bool) -> tuple:
        """Indices of the largest Λ-prefix (or suffix) that can be shuffled to the end."""
        adj = self.group.adj
        n = len(codes)
        order = range(n) if from_left else range(n - 1, -1, -1)
        kept_vertices = []  # vertices of letters left in place, on the scanned side
        taken = []
        for i in order:
            c = codes[i]
            v = c >> 1
            if self.contains_code(c) and all((adj[v] >> u) & 1 for u in kept_vertices):
                taken.append(i)
            else:
                kept_vertices.append(v)
        return tuple(sorted(taken))

    def prefix(self, x: Element) -> Element:
        """The ``h ∈ H`` with ``x = h·x'`` and ``x'`` shortest in ``Hx``."""
        idx = self._split(x.codes, True)
        return self.group.from_codes(x.codes[i] for i in idx)

    def coset_representative(self, x: Element) -> Element:
        """Shortest element of ``xH``; equal for ``x`` and ``x'`` iff ``x⁻¹x' ∈ H``."""
        idx = set(self._split(x.codes, False))
        return self.group.from_codes(c for i, c in enumerate(x.codes) if i not in idx)

    def distance_to(self, u: Element) -> int:
        """``d(u, H)``."""
        return len(u.codes) - len(self._split(u.codes, True))

    def ball(self, r: int) -> list:
        """Elements of ``H`` of length ``≤ r``, by breadth-first search over Λ-letters."""
        group = self.group
        gens = [group.from_codes([c]) for c in range(2 * group.rank_count) if self.contains_code(c)]
        out = [group.identity]
        seen = {group.identity}
        frontier = [group.identity]
        for _ in range(r):
            nxt = []
            for x in frontier:
                for s in gens:
                    y = multiply(x, s)
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            out.extend(nxt)
            frontier = nxt
        return out


def coset_distance(x: Element, z: Element, H: SpecialSubgroup, K: int) -> int | None:
    """``min_{h ∈ H} d(x, z·h)`` when it is ``≤ K``, otherwise ``None``."""
    d = H.distance_to(multiply(invert(z), x))
    return d if d <= K else None


def coset_distance_search(x: Element, z: Element, H: SpecialSubgroup, K: int, early_exit: bool = True) -> int | None:
    """Reference implementation: scan ``H`` up to radius ``|z⁻¹x| + K``."""
    u = multiply(invert(z), x)
    best = None
    for h in H.ball(length(u) + K):
        d = distance(h, u)
        if best is None or d < best:
            best = d
            if early_exit and best == 0:
                break
    return best if best is not None and best <= K else None


@dataclass(frozen=True)
class ExcursionWitness:
    coset: Element  # shortest representative z of zH
    i: int
    j: int
    path_index: int  # which examined geodesic attains the value

    def as_dict(self) -> dict:
        return {"coset": str(self.coset), "i": self.i, "j": self.j, "path_index": self.path_index}


def _ball_codes(group: RAAG, K: int) -> list:
    out = []
    for n in range(K + 1):
        out.extend(iter_sphere_codes(group, n))
    return out


def excursion_of_path(path: PathSegment, H: SpecialSubgroup, K: int = 0):
    """``(max over cosets zH of diam(path ∩ N_K(zH)), witness)``.

    Every coset meeting ``N_K(path)`` contains a point ``p·v`` with ``p`` on the
    path and ``|v| ≤ K``, so walking those points and keying cosets by their
    shortest representative covers all cosets exactly once.
    """
    if not len(path):
        raise UsageError("empty path")
    if K < 0:
        raise UsageError("K must be non-negative")
    group = path.group
    offsets = [Element(group, c) for c in _ball_codes(group, K)]
    hits: dict = {}
    for i, p in enumerate(path.points):
        for v in offsets:
            z = H.coset_representative(multiply(p, v))
            hits.setdefault(z, set()).add(i)
    best = (-1, None)
    geodesic = path.kind == GEODESIC
    for z, idx in sorted(hits.items(), key=lambda kv: (len(kv[0].codes), kv[0].codes)):
        idx = sorted(idx)
        if geodesic:
            value, pair = idx[-1] - idx[0], (idx[0], idx[-1])
        else:
            value, pair = 0, (idx[0], idx[0])
            for a in idx:
                for b in idx:
                    if a < b:
                        d = distance(path.points[a], path.points[b])
                        if d > value:
                            value, pair = d, (a, b)
        if value > best[0]:
            best = (value, ExcursionWitness(z, pair[0], pair[1], 0))
    return best


def longest_run(codes: Sequence[int], H: SpecialSubgroup) -> tuple:
    """``(length, start)`` of the longest block of Λ-letters in a word."""
    best = (0, 0)
    run = 0
    for i, c in enumerate(codes):
        run = run + 1 if H.contains_code(c) else 0
        if run > best[0]:
            best = (run, i + 1 - run)
    return best


@dataclass(frozen=True)
class ExcursionReport:
    g: Element
    K: int
    excursion: int
    witness: ExcursionWitness
    geodesics_examined: int
    truncated: bool

    def as_dict(self) -> dict:
        return {
            "g": str(self.g),
            "K": self.K,
            "excursion": self.excursion,
            "witness": self.witness.as_dict(),
            "geodesics_examined": self.geodesics_examined,
            "truncated": self.truncated,
        }


def excursion_of_element(g: Element, H: SpecialSubgroup, K: int = 0, cap: int = 200) -> ExcursionReport:
    """Largest excursion over the geodesics ``e → g``, enumerated in lexicographic order.

    The canonical geodesic is the first one enumerated.  When more than ``cap``
    geodesics exist the value is a lower bound and ``truncated`` is set.

    With ``K = 0`` two points of a geodesic share an ``H``-coset exactly when the
    letters between them all lie in Λ, so the value is the longest Λ-block of the
    spelling; larger ``K`` goes through :func:`excursion_of_path`.
    """
    if cap < 1:
        raise UsageError("cap must be positive")
    group = g.group
    best = None
    examined = 0
    truncated = False
    for k, word in enumerate(iter_geodesic_words(g.codes, group)):
        if k == cap:
            truncated = True
            break
        examined += 1
        if K == 0:
            run, start = longest_run(word, H)
            z = H.coset_representative(group.from_codes(word[:start]))
            cand = (run, ExcursionWitness(z, start, start + run, k))
        else:
            value, w = excursion_of_path(path_from_codes(group.identity, word), H, K)
            cand = (value, ExcursionWitness(w.coset, w.i, w.j, k))
        if best is None or cand[0] > best[0]:
            best = cand
    return ExcursionReport(g, K, best[0], best[1], examined, truncated)


def verify_excursion(report: ExcursionReport, H: SpecialSubgroup) -> bool:
    """Re-check the witness from raw coset distances along the recorded geodesic."""
    group = report.g.group
    w = report.witness
    for k, word in enumerate(iter_geodesic_words(report.g.codes, group)):
        if k == w.path_index:
            path = path_from_codes(group.identity, word)
            break
    else:
        return False
    p, q = path.points[w.i], path.points[w.j]
    return (
        coset_distance(p, w.coset, H, report.K) is not None
        and coset_distance(q, w.coset, H, report.K) is not None
        and distance(p, q) == report.excursion
    )


# --- strong independence -----------------------------------------------------------------


@dataclass(frozen=True)
class ProbeResult:
    f: Element
    r: int
    m: int
    value: int
    coset: Element
    cosets_examined: int

    def as_dict(self) -> dict:
        return {
            "f": str(self.f),
            "r": self.r,
            "m": self.m,
            "value": self.value,
            "coset": str(self.coset),
            "cosets_examined": self.cosets_examined,
        }


def strong_independence_probe(f: Element, H: SpecialSubgroup, r: int, m: int) -> ProbeResult:
    """``max_t diam π_{axis(f, m)}(tH ∩ B(r))`` over all cosets meeting ``B(r)``."""
    ax = axis(f, m)
    if ax.elliptic:
        raise UsageError(f"{f} is elliptic at scale m={m}")
    group = f.group
    cosets: dict = {}
    for n in range(r + 1):
        for codes in iter_sphere_codes(group, n):
            x = Element(group, codes)
            cosets.setdefault(H.coset_representative(x), []).append(x)
    best_value, best_coset = -1, group.identity
    for z in sorted(cosets, key=lambda e: (len(e.codes), e.codes)):
        value = diameter(projection_points(ax.path, cosets[z]))
        if value > best_value:
            best_value, best_coset = value, z
    return ProbeResult(f, r, m, best_value, best_coset, len(cosets))


# --- logarithm law experiment --------------------------------------------------------------


@dataclass(frozen=True)
class LoglawRow:
    n: int
    sample_index: int
    g: Element
    K: int
    excursion: int
    truncated: bool

    def csv_row(self) -> list:
        return [self.n, self.sample_index, self.g.group.format_codes(self.g.codes), self.K, self.excursion, int(self.truncated)]


CSV_FIELDS = ("n", "sample_index", "g_normal_form", "K", "excursion", "truncated")


def _summary(values: list) -> dict:
    q = statistics.quantiles(values, n=4, method="inclusive") if len(values) > 1 else [values[0]] * 3
    return {"min": min(values), "q1": q[0], "median": statistics.median(values), "q3": q[2], "max": max(values)}


@dataclass
class LoglawResult:
    rows: list
    per_n: dict
    C1: float | None
    C2: float | None
    fitted: bool
    params: dict

    def as_dict(self) -> dict:
        return {
            "per_n": {str(n): v for n, v in sorted(self.per_n.items())},
            "C1": self.C1,
            "C2": self.C2,
            "fitted": self.fitted,
            "params": self.params,
        }


def covered_fraction(values: Sequence[int], n: int, C1: float, C2: float) -> float | None:
    """Share of values with ``C1 ≤ E / log n ≤ C2``; undefined for ``n ≤ 1``."""
    if n <= 1 or not values:
        return None
    ln = math.log(n)
    return sum(1 for v in values if C1 <= v / ln <= C2) / len(values)


def loglaw_experiment(
    group: RAAG,
    H: SpecialSubgroup,
    ns: Sequence[int],
    samples: int,
    seed: int,
    K: int = 0,
    cap: int = 200,
    C1: float | None = None,
    C2: float | None = None,
) -> LoglawResult:
    """Excursions of uniform sphere samples, with quartiles and a ``[C1, C2]`` band per radius.

    Without a user band, ``C1`` is half the smallest and ``C2`` twice the largest
    ratio ``E / log n`` at the largest radius.
    """
    if samples < 1:
        raise UsageError("need at least one sample")
    ns = sorted(set(ns))
    automaton = build_automaton(group)
    rows = []
    values: dict = {}
    for n in ns:
        for i, g in enumerate(sample_sphere_uniform(automaton, n, samples, seed)):
            rep = excursion_of_element(g, H, K, cap)
            rows.append(LoglawRow(n, i, g, K, rep.excursion, rep.truncated))
            values.setdefault(n, []).append(rep.excursion)
    fitted = C1 is None or C2 is None
    top = ns[-1]
    if fitted and top > 1:
        ratios = [v / math.log(top) for v in values[top]]
        C1, C2 = min(ratios) / 2, max(ratios) * 2
    per_n = {}
    for n in ns:
        stats = _summary(values[n])
        stats["truncated"] = sum(1 for r in rows if r.n == n and r.truncated)
        stats["covered_fraction"] = covered_fraction(values[n], n, C1, C2) if C1 is not None else None
        per_n[n] = stats
    params = {"K": K, "cap": cap, "samples": samples, "seed": seed, "n": list(ns), "subgroup": list(H.names)}
    return LoglawResult(rows, per_n, C1, C2, fitted, params)
