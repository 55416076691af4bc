"""Fraction of contracting elements in balls, exhaustively or by uniform sampling."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .contraction import DEFAULT_GRID, ContractionParams, SegmentTestCache, classify_element
from .counting import build_automaton, sample_ball_uniform, sphere_counts
from .errors import ResourceLimitError, UsageError
from .group import RAAG, Element
from .metric import iter_sphere_codes

EXHAUSTIVE = "exhaustive"
SAMPLED = "sampled"
AUTO = "auto"
DEFAULT_LIMIT = 10**6

CSV_FIELDS = ("n", "ball_size", "sampled", "contracting", "fraction", "D", "R", "m", "seed")


@dataclass(frozen=True)
class GenericityRow:
    n: int
    ball_size: int
    sampled: int
    contracting_count: int
    D: int
    R: int
    m: int
    caps: dict
    seed: int | None
    mode: str

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.contracting_count, self.sampled)

    def csv_row(self) -> list:
        return [
            self.n,
            self.ball_size,
            self.sampled,
            self.contracting_count,
            f"{float(self.fraction):.12g}",
            self.D,
            self.R,
            self.m,
            "" if self.seed is None else self.seed,
        ]

    def as_dict(self) -> dict:
        f = self.fraction
        return {
            "n": self.n,
            "ball_size": self.ball_size,
            "sampled": self.sampled,
            "contracting": self.contracting_count,
            "fraction": float(f),
            "fraction_exact": f"{f.numerator}/{f.denominator}",
            "D": self.D,
            "R": self.R,
            "m": self.m,
            "caps": dict(self.caps),
            "seed": self.seed,
            "mode": self.mode,
        }


def _classify_chunk(args) -> list:
    group, codes_list, params, m = args
    cache = SegmentTestCache(group)
    return [classify_element(Element(group, c), params, m, cache, find_D_star=False).contracting for c in codes_list]


class _Classifier:
    """Classifies batches of elements, serially with one shared cache or across processes."""

    def __init__(self, group: RAAG, params: ContractionParams, m: int, workers: int):
        self.group = group
        self.params = params
        self.m = m
        self.workers = max(1, workers)
        self.cache = SegmentTestCache(group)

    def count(self, codes_list: list) -> int:
        if self.workers == 1 or len(codes_list) < 256:
            p, m, cache = self.params, self.m, self.cache
            return sum(
                classify_element(Element(self.group, c), p, m, cache, find_D_star=False).contracting
                for c in codes_list
            )
        size = -(-len(codes_list) // (4 * self.workers))
        chunks = [(self.group, codes_list[i : i + size], self.params, self.m) for i in range(0, len(codes_list), size)]
        with ProcessPoolExecutor(self.workers) as pool:
            return sum(sum(r) for r in pool.map(_classify_chunk, chunks))


def iter_genericity(
    group: RAAG,
    ns: Sequence[int],
    D: int,
    R: int,
    m: int,
    mode: str = AUTO,
    samples: int | None = None,
    seed: int | None = None,
    limit: int = DEFAULT_LIMIT,
    D_grid: Sequence[int] = DEFAULT_GRID,
    geodesic_cap: int = 200,
    workers: int = 1,
    time_limit: float | None = None,
) -> Iterator[GenericityRow]:
    """Yield one row per radius in increasing order.

    Exhaustive rows classify every element of ``B(n)``; the identity is counted in
    the denominator and never in the numerator.  Radii share work: each sphere is
    classified once and its count reused by every larger ``n``.  In ``auto`` mode a
    radius switches to sampling once ``#B(n)`` exceeds ``limit``.
    """
    if mode not in (EXHAUSTIVE, SAMPLED, AUTO):
        raise UsageError(f"unknown mode {mode!r}")
    ns = sorted(set(ns))
    if not ns or ns[0] < 0:
        raise UsageError("radii must be non-negative")
    params = ContractionParams(D=D, R=R, geodesic_cap=geodesic_cap, D_grid=tuple(D_grid))
    if m < 1:
        raise UsageError("m must be positive")
    automaton = build_automaton(group)
    spheres = sphere_counts(automaton, ns[-1])
    balls = [sum(spheres[: n + 1]) for n in range(len(spheres))]
    caps = {"geodesic_cap": geodesic_cap, "D_grid": list(params.D_grid), "limit": limit}
    clf = _Classifier(group, params, m, workers)
    t0 = time.monotonic()
    done_radius = -1
    cumulative = 0
    last_done = None
    for n in ns:
        row_mode = mode
        if mode == AUTO:
            row_mode = EXHAUSTIVE if balls[n] <= limit else SAMPLED
        if row_mode == EXHAUSTIVE:
            if balls[n] > limit:
                raise ResourceLimitError(f"#B({n}) = {balls[n]} exceeds the exhaustive limit {limit}", last_done)
            for r in range(done_radius + 1, n + 1):
                if time_limit is not None and time.monotonic() - t0 > time_limit:
                    raise ResourceLimitError(f"time limit reached while classifying S({r})", last_done)
                cumulative += clf.count(list(iter_sphere_codes(group, r)))
                done_radius = r
            row = GenericityRow(n, balls[n], balls[n], cumulative, D, R, m, caps, None, EXHAUSTIVE)
        else:
            if samples is None or seed is None:
                raise UsageError("sampled mode needs a sample count and a seed")
            pts = sample_ball_uniform(automaton, n, samples, seed)
            count = clf.count([g.codes for g in pts])
            row = GenericityRow(n, balls[n], samples, count, D, R, m, caps, seed, SAMPLED)
        last_done = n
        yield row


def genericity_experiment(group: RAAG, ns: Sequence[int], D: int, R: int, m: int, **kw) -> list:
    return list(iter_genericity(group, ns, D, R, m, **kw))
