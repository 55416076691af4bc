"""Empirical checks of the inequalities around contracting geodesics.

Each check draws random instances from segments that passed the empirical
``D``-test, evaluates the quantity the statement controls, and reports the largest
value observed.  Statements with an explicit constant (the Lipschitz-type bound
``4D``, the bridging bounds ``2D``, ``4D``, ``10D``, thin bigons at ``10D``) also
report violations; the others only have existential constants, so the report gives
the smallest constant that works for every instance seen.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from .contraction import (
    DEFAULT_GRID,
    ContractionParams,
    Neighbourhood,
    SegmentTestCache,
    alignment_constant,
    empirical_contraction_constant,
    is_C_aligned,
)
from .counting import build_automaton, random_normal_form, split_seed
from .errors import UsageError
from .group import RAAG, Element, multiply, reduced_length
from .metric import (
    GEODESIC,
    PathSegment,
    canonical_geodesic,
    diameter,
    distance,
    fellow_travel,
    first_letters,
    hausdorff_distance,
    path_from_codes,
    project,
    projection_diameter,
    projection_points,
    relative,
    set_hausdorff,
)

MAX_VIOLATIONS_KEPT = 10


class Skip(Exception):
    """The drawn instance does not meet the hypotheses; draw another."""


@dataclass
class LemmaReport:
    lemma: str
    D: int
    R: int
    seed: int
    trials: int
    instances: int = 0
    attempts: int = 0
    max_observed: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    violation_count: int = 0
    violations: list = field(default_factory=list)

    def record(self, observed: dict, witness: dict) -> None:
        self.instances += 1
        bad = []
        for key, value in observed.items():
            if value is None:
                continue
            if key not in self.max_observed or value > self.max_observed[key]:
                self.max_observed[key] = value
            bound = self.bounds.get(key)
            if bound is not None and value > bound:
                bad.append(key)
        if bad:
            self.violation_count += 1
            if len(self.violations) < MAX_VIOLATIONS_KEPT:
                self.violations.append({"quantities": bad, "observed": observed, **witness})

    def as_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "D": self.D,
            "R": self.R,
            "seed": self.seed,
            "trials": self.trials,
            "instances": self.instances,
            "attempts": self.attempts,
            "max_observed": dict(sorted(self.max_observed.items())),
            "bounds": dict(sorted(self.bounds.items())),
            "violation_count": self.violation_count,
            "violations": self.violations,
        }


class InstanceGenerator:
    """Random segments that pass the ``D``-test at radius ``R``, and random points near them."""

    def __init__(self, group: RAAG, D: int, R: int, min_length: int = 1, max_length: int = 6):
        if R <= D:
            raise UsageError("R must exceed D")
        if not 1 <= min_length <= max_length:
            raise UsageError("bad segment length range")
        self.group = group
        self.D = D
        self.R = R
        self.min_length = min_length
        self.max_length = max_length
        self.automaton = build_automaton(group)
        self.cache = SegmentTestCache(group)

    def element(self, rng: random.Random, max_length: int) -> Element:
        n = rng.randint(0, max_length)
        return Element(self.group, random_normal_form(self.automaton, n, rng))

    def passes(self, seg: PathSegment, D: int | None = None) -> bool:
        D = self.D if D is None else D
        if len(seg) == 1:
            return True
        key = self.cache.key(seg.letters())
        hit = self.cache.get(key, D, self.R, GEODESIC)
        if hit is None:
            hit = not Neighbourhood(seg, self.R).has_witness(D)
            self.cache.put(key, D, self.R, GEODESIC, hit)
        return hit

    def contracting_segment(self, rng: random.Random, start: Element | None = None, tries: int = 50) -> PathSegment:
        for _ in range(tries):
            n = rng.randint(self.min_length, self.max_length)
            g = Element(self.group, random_normal_form(self.automaton, n, rng))
            t = self.element(rng, 2) if start is None else start
            seg = canonical_geodesic(t, multiply(t, g))
            if self.passes(seg):
                return seg
        raise Skip

    def near(self, rng: random.Random, seg: PathSegment, radius: int) -> Element:
        return multiply(rng.choice(seg.points), self.element(rng, radius))


def _pts(x: Element) -> str:
    return str(x)


# --- individual checks -----------------------------------------------------------------


def _projection_lipschitz(gen: InstanceGenerator, rng: random.Random):
    gamma = gen.contracting_segment(rng)
    x = gen.near(rng, gamma, 2 * gen.R)
    y = gen.near(rng, gamma, 2 * gen.R)
    slack = projection_diameter(gamma, [x], [y]) - distance(x, y)
    return {"slack": slack}, {"gamma": [_pts(gamma.first), _pts(gamma.last)], "x": _pts(x), "y": _pts(y)}


def _bridging_segment(gen: InstanceGenerator, rng: random.Random):
    D = gen.D
    gamma = gen.contracting_segment(rng)
    x = gen.near(rng, gamma, 2 * gen.R)
    y = gen.near(rng, gamma, 2 * gen.R)
    px, py = projection_points(gamma, [x]), projection_points(gamma, [y])
    if diameter(px | py) < D:
        raise Skip
    kappa = canonical_geodesic(x, y)
    dist = [project(p, gamma).distance for p in kappa.points]
    close = [i for i, d in enumerate(dist) if d <= D]
    witness = {"gamma": [_pts(gamma.first), _pts(gamma.last)], "x": _pts(x), "y": _pts(y)}
    if not close:
        return {"bridge_missing": 1}, witness
    i0, i1 = close[0], close[-1]
    bridge = kappa.sub(i0, i1)
    item1 = max(diameter(px | {kappa.points[i0]}), diameter(py | {kappa.points[i1]}))
    item2 = set_hausdorff(projection_points(gamma, kappa.points), bridge.points)
    item3 = 0
    index = {p: k for k, p in enumerate(gamma.points)}
    for a in px:
        for b in py:
            i, j = sorted((index[a], index[b]))
            item3 = max(item3, hausdorff_distance(gamma.sub(i, j), bridge))
    observed = {"endpoint_diameter": item1, "projection_hausdorff": item2, "segment_hausdorff": item3}
    return {**observed, "bridge_missing": 0}, witness


def _nearby_contracting(gen: InstanceGenerator, rng: random.Random):
    gamma = gen.contracting_segment(rng)
    x = gen.near(rng, gamma, gen.D)
    y = gen.near(rng, gamma, gen.D)
    if project(x, gamma).distance > gen.D or project(y, gamma).distance > gen.D:
        raise Skip
    kappa = canonical_geodesic(x, y)
    reach = max(project(p, gamma).distance for p in kappa.points)
    report = empirical_contraction_constant(kappa, gen.R, DEFAULT_GRID)
    d_star = report.D_star if report.D_star is not None else gen.R
    return {"neighbourhood": reach, "contraction": d_star}, {"x": _pts(x), "y": _pts(y)}


def _one_segment_alignment(gen: InstanceGenerator, rng: random.Random):
    D = gen.D
    kappa = gen.contracting_segment(rng)
    x2 = multiply(kappa.last, gen.element(rng, D + 1))
    gamma = gen.contracting_segment(rng, start=x2)
    if not (is_C_aligned([kappa, gamma.first], D) and is_C_aligned([kappa.first, gamma], D)):
        raise Skip
    return {"alignment": alignment_constant([kappa, gamma]) + 1}, {
        "kappa": [_pts(kappa.first), _pts(kappa.last)],
        "gamma": [_pts(gamma.first), _pts(gamma.last)],
    }


def _best_fellow_subsegments(path: PathSegment, kappas: list) -> int:
    """Least ``E`` such that ``path`` has ordered subsegments ``E``-fellow-travelling each κ."""
    pts = path.points
    L = len(pts)
    INF = float("inf")
    tables = []
    for kappa in kappas:
        kp = kappa.distinct_points()
        dm = [[distance(p, q) for q in kp] for p in pts]
        d_first = [distance(p, kappa.first) for p in pts]
        d_last = [distance(p, kappa.last) for p in pts]
        table = {}
        for a in range(L):
            for b in range(a, L):
                h1 = max(min(dm[i]) for i in range(a, b + 1))
                h2 = max(min(dm[i][j] for i in range(a, b + 1)) for j in range(len(kp)))
                table[a, b] = max(d_first[a], d_last[b], h1, h2) + 1
        tables.append(table)
    # best[t] = least E for the remaining kappas using subsegments starting at index >= t
    best = [0] * (L + 1)
    for table in reversed(tables):
        nxt = [INF] * (L + 1)
        for a in range(L - 1, -1, -1):
            v = min(max(table[a, b], best[b]) for b in range(a, L))
            nxt[a] = min(v, nxt[a + 1])
        best = nxt
    return best[0]


def _concatenation_fellow_travel(gen: InstanceGenerator, rng: random.Random):
    D = gen.D
    N = rng.randint(1, 2)
    x = gen.element(rng, 2)
    kappas = []
    start = multiply(x, gen.element(rng, D))
    for _ in range(N):
        k = gen.contracting_segment(rng, start=start)
        kappas.append(k)
        start = multiply(k.last, gen.element(rng, D))
    y = start
    if not is_C_aligned([x, *kappas, y], D):
        raise Skip
    path = canonical_geodesic(x, y)
    return {"fellow_travel": _best_fellow_subsegments(path, kappas)}, {
        "x": _pts(x),
        "y": _pts(y),
        "kappas": [[_pts(k.first), _pts(k.last)] for k in kappas],
    }


def _fellow_travel_alignment(gen: InstanceGenerator, rng: random.Random):
    D = gen.D
    g = Element(gen.group, random_normal_form(gen.automaton, rng.randint(2, 2 * gen.max_length), rng))
    x = gen.element(rng, 2)
    path = canonical_geodesic(x, multiply(x, g))
    L = path.length
    N = rng.randint(1, 2)
    cuts = sorted(rng.randint(0, L) for _ in range(2 * N))
    kappas = []
    for i in range(N):
        a, b = path.points[cuts[2 * i]], path.points[cuts[2 * i + 1]]
        k = canonical_geodesic(multiply(a, gen.element(rng, D - 1)), multiply(b, gen.element(rng, D - 1)))
        if not fellow_travel(k, path.sub(cuts[2 * i], cuts[2 * i + 1]), D):
            raise Skip
        kappas.append(k)
    return {"alignment": alignment_constant([path.first, *kappas, path.last]) + 1}, {
        "x": _pts(path.first),
        "y": _pts(path.last),
        "kappas": [[_pts(k.first), _pts(k.last)] for k in kappas],
    }


def _extend_geodesic(word: list, adj, rng: random.Random, extra: int, at_front: bool) -> list:
    n = 2 * len(adj)
    for _ in range(extra):
        c = rng.randrange(n)
        cand = [c] + word if at_front else word + [c]
        if reduced_length(cand, adj) == len(cand):
            word = cand
    return word


def _aligned_extension(gen: InstanceGenerator, rng: random.Random):
    D = gen.D
    group = gen.group
    gamma = gen.contracting_segment(rng)
    x1 = gen.near(rng, gamma, D)
    y1 = gen.near(rng, gamma, D)
    if not is_C_aligned([x1, gamma, y1], D):
        raise Skip
    middle = list(relative(x1, y1).codes)
    word = _extend_geodesic(middle, group.adj, rng, rng.randint(0, 4), True)
    pre = len(word) - len(middle)
    word = _extend_geodesic(word, group.adj, rng, rng.randint(0, 4), False)
    x = multiply(x1, group.from_codes([c ^ 1 for c in reversed(word[:pre])]))
    kappa = path_from_codes(x, word)
    assert kappa.points[pre] == x1 and y1 in kappa.points
    y = kappa.last
    return {"alignment": alignment_constant([x, gamma, y]) + 1}, {
        "x": _pts(x),
        "y": _pts(y),
        "gamma": [_pts(gamma.first), _pts(gamma.last)],
    }


def extreme_geodesics(x: Element, y: Element) -> tuple:
    """Lexicographically first and last geodesics from ``x`` to ``y``."""
    group = x.group
    words = []
    for pick in (min, max):
        rest = relative(x, y).codes
        word = []
        while rest:
            c, i = pick(first_letters(rest, group))
            word.append(c)
            rest = group.from_codes(rest[:i] + rest[i + 1 :]).codes
        words.append(path_from_codes(x, word))
    return tuple(words)


def bigon_width(x: Element, y: Element) -> int:
    """Hausdorff distance between the two extreme geodesics of the bigon ``x → y``."""
    first, last = extreme_geodesics(x, y)
    return hausdorff_distance(first, last)


def _thin_bigons(gen: InstanceGenerator, rng: random.Random):
    x = gen.element(rng, 2)
    n = rng.randint(1, 2 * gen.max_length)
    y = multiply(x, Element(gen.group, random_normal_form(gen.automaton, n, rng)))
    first, last = extreme_geodesics(x, y)
    width = hausdorff_distance(first, last)
    both = gen.passes(first) and gen.passes(last)
    # only bigons of segments that passed the D-test are held to the 10D bound
    return {"width": width, "width_contracting": width if both else None}, {"x": _pts(x), "y": _pts(y)}


@dataclass(frozen=True)
class LemmaSpec:
    check: Callable
    bounds: Callable  # D -> dict of quantity -> largest allowed value
    description: str


LEMMAS = {
    "projection-lipschitz": LemmaSpec(
        _projection_lipschitz, lambda D: {"slack": 4 * D}, "projection distance exceeds distance by at most 4D"
    ),
    "bridging-segment": LemmaSpec(
        _bridging_segment,
        lambda D: {
            "endpoint_diameter": 2 * D - 1,
            "projection_hausdorff": 4 * D,
            "segment_hausdorff": 10 * D,
            "bridge_missing": 0,
        },
        "a subsegment of [x, y] shadows the projection of [x, y]",
    ),
    "nearby-contracting": LemmaSpec(
        _nearby_contracting, lambda D: {}, "geodesics between points near a contracting geodesic stay near and contract"
    ),
    "one-segment-alignment": LemmaSpec(
        _one_segment_alignment, lambda D: {}, "alignment with endpoints upgrades to alignment of segments"
    ),
    "concatenation-fellow-travel": LemmaSpec(
        _concatenation_fellow_travel, lambda D: {}, "aligned chains are fellow-travelled by [x, y]"
    ),
    "fellow-travel-alignment": LemmaSpec(
        _fellow_travel_alignment, lambda D: {}, "fellow-travelled subsegments give an aligned chain"
    ),
    "aligned-extension": LemmaSpec(
        _aligned_extension, lambda D: {}, "alignment persists when the endpoints move outward along a geodesic"
    ),
    "thin-bigons": LemmaSpec(_thin_bigons, lambda D: {"width_contracting": 10 * D}, "bigons of contracting geodesics are thin"),
}


def lemma_check(
    lemma_id: str,
    group: RAAG,
    trials: int,
    seed: int,
    D: int = 2,
    R: int = 4,
    min_length: int = 1,
    max_length: int = 6,
    max_attempts: int | None = None,
    generator: InstanceGenerator | None = None,
) -> LemmaReport:
    """Run ``trials`` instances of one check; attempt ``a`` draws from its own seed ``(seed, a)``."""
    if lemma_id not in LEMMAS:
        raise UsageError(f"unknown lemma id {lemma_id!r}; choose from {', '.join(sorted(LEMMAS))}")
    ContractionParams(D=D, R=R)
    spec = LEMMAS[lemma_id]
    gen = generator or InstanceGenerator(group, D, R, min_length, max_length)
    report = LemmaReport(lemma_id, D, R, seed, trials, bounds=spec.bounds(D))
    limit = max_attempts if max_attempts is not None else 50 * trials
    while report.instances < trials and report.attempts < limit:
        rng = random.Random(split_seed(seed, report.attempts))
        report.attempts += 1
        try:
            observed, witness = spec.check(gen, rng)
        except Skip:
            continue
        report.record(observed, witness)
    return report
