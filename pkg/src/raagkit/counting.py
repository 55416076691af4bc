"""Normal-form automaton: exact sphere counts, growth estimates, uniform sampling.

A state records, for every vertex, which signs may follow the word read so far
without breaking reducedness or ShortLex minimality:

* ``FREE``    both signs allowed;
* ``NO_POS`` / ``NO_NEG``  the vertex of the last letter; the inverse sign would cancel;
* ``BLOCKED`` a larger commuting letter sits in the commuting suffix, so appending
  this vertex would let it move left into a smaller word.
"""

from __future__ import annotations

import hashlib
import math
import random
import statistics
from dataclasses import dataclass, field
from typing import Iterator

from .errors import UsageError
from .group import RAAG, Element

FREE, NO_POS, NO_NEG, BLOCKED = 0, 1, 2, 3


def _allowed(status: int, c: int) -> bool:
    if status == FREE:
        return True
    if status == BLOCKED:
        return False
    return bool(c & 1) == (status == NO_POS)


@dataclass
class GeodesicAutomaton:
    group: RAAG
    states: list  # state index -> tuple of per-vertex statuses
    transitions: list  # state index -> list over letter codes, -1 when forbidden
    start: int = 0
    _counts: list = field(default_factory=list, repr=False)  # _counts[k][s] = accepted words of length k from s

    @property
    def state_count(self) -> int:
        return len(self.states)

    def run(self, codes) -> int:
        """State after reading ``codes``; -1 if the word is not a normal form."""
        s = self.start
        for c in codes:
            s = self.transitions[s][c]
            if s < 0:
                return -1
        return s

    def accepts(self, codes) -> bool:
        return self.run(codes) >= 0

    def counts_from(self, k: int) -> list:
        """Number of accepted words of length ``k`` from each state."""
        if not self._counts:
            self._counts.append([1] * len(self.states))
        while len(self._counts) <= k:
            prev = self._counts[-1]
            self._counts.append([sum(prev[t] for t in row if t >= 0) for row in self.transitions])
        return self._counts[k]

    def words(self, n: int) -> Iterator[tuple]:
        """All normal forms of length ``n`` in lexicographic order."""
        trans = self.transitions
        if n == 0:
            yield ()
            return
        word = [0] * n
        # explicit stack of (depth, state, next letter to try)
        stack = [(0, self.start, 0)]
        ncodes = len(trans[0])
        while stack:
            depth, s, c = stack.pop()
            row = trans[s]
            while c < ncodes and row[c] < 0:
                c += 1
            if c >= ncodes:
                continue
            stack.append((depth, s, c + 1))
            word[depth] = c
            if depth + 1 == n:
                yield tuple(word)
            else:
                stack.append((depth + 1, row[c], 0))


def build_automaton(group: RAAG) -> GeodesicAutomaton:
    k = group.rank_count
    adj = group.adj
    start = (FREE,) * k
    index = {start: 0}
    states = [start]
    transitions = []
    i = 0
    while i < len(states):
        st = states[i]
        row = []
        for c in group.generator_codes:
            v = c >> 1
            if not _allowed(st[v], c):
                row.append(-1)
                continue
            nxt = []
            for u in range(k):
                if u == v:
                    nxt.append(NO_NEG if not c & 1 else NO_POS)
                elif not (adj[v] >> u) & 1:
                    nxt.append(FREE)
                elif v > u:
                    nxt.append(BLOCKED)
                else:
                    nxt.append(st[u])
            nxt = tuple(nxt)
            if nxt not in index:
                index[nxt] = len(states)
                states.append(nxt)
            row.append(index[nxt])
        transitions.append(row)
        i += 1
    return GeodesicAutomaton(group, states, transitions)


def sphere_count(automaton: GeodesicAutomaton, n: int) -> int:
    if n < 0:
        raise UsageError("radius must be non-negative")
    return automaton.counts_from(n)[automaton.start]


def sphere_counts(automaton: GeodesicAutomaton, n_max: int) -> list:
    return [sphere_count(automaton, n) for n in range(n_max + 1)]


def ball_count(automaton: GeodesicAutomaton, n: int) -> int:
    return sum(sphere_counts(automaton, n))


@dataclass(frozen=True)
class GrowthEstimate:
    n_max: int
    spheres: tuple
    balls: tuple
    lambda_hat: float
    sphere_ratio: float
    polynomial: bool


def growth_rate(automaton: GeodesicAutomaton, n_max: int) -> GrowthEstimate:
    """Exponential growth rate from the slope of ``log #B(n)`` over the upper half of ``0..n_max``.

    RAAGs on complete graphs are free abelian and grow polynomially; those are
    flagged and the estimate is reported as 1.
    """
    if n_max < 4:
        raise UsageError("growth_rate needs n_max >= 4")
    spheres = sphere_counts(automaton, n_max)
    balls = []
    total = 0
    for s in spheres:
        total += s
        balls.append(total)
    ns = list(range(n_max // 2, n_max + 1))
    slope, _ = statistics.linear_regression(ns, [math.log(balls[n]) for n in ns])
    polynomial = automaton.group.graph.is_complete()
    ratio = spheres[-1] / spheres[-2]
    return GrowthEstimate(
        n_max=n_max,
        spheres=tuple(spheres),
        balls=tuple(balls),
        lambda_hat=1.0 if polynomial else math.exp(slope),
        sphere_ratio=ratio,
        polynomial=polynomial,
    )


def split_seed(seed: int, *path: int) -> int:
    """Deterministic child seed for ``(seed, *path)``, independent of evaluation order."""
    text = ":".join(str(x) for x in (seed, *path))
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def random_normal_form(automaton: GeodesicAutomaton, n: int, rng: random.Random) -> tuple:
    """Uniform normal form of length ``n`` drawn with ``rng``."""
    trans = automaton.transitions
    s = automaton.start
    word = []
    for remaining in range(n, 0, -1):
        weights = automaton.counts_from(remaining - 1)
        row = trans[s]
        total = sum(weights[t] for t in row if t >= 0)
        r = rng.randrange(total)
        for c, t in enumerate(row):
            if t < 0:
                continue
            w = weights[t]
            if r < w:
                word.append(c)
                s = t
                break
            r -= w
    return tuple(word)


def sample_sphere_uniform(automaton: GeodesicAutomaton, n: int, count: int, seed: int) -> list:
    """``count`` independent uniform samples from the sphere of radius ``n``.

    Sample ``i`` uses its own generator seeded from ``(seed, n, i)``, so any
    subset of indices can be recomputed in isolation.
    """
    if sphere_count(automaton, n) == 0:
        raise UsageError(f"sphere of radius {n} is empty")
    group = automaton.group
    return [
        Element(group, random_normal_form(automaton, n, random.Random(split_seed(seed, n, i)))) for i in range(count)
    ]


def sample_ball_uniform(automaton: GeodesicAutomaton, n: int, count: int, seed: int) -> list:
    """Uniform samples from the ball: radius drawn with weight ``#S(r)``, then a sphere walk."""
    spheres = sphere_counts(automaton, n)
    total = sum(spheres)
    group = automaton.group
    out = []
    for i in range(count):
        rng = random.Random(split_seed(seed, n, i, 1))
        r = rng.randrange(total)
        radius = 0
        while r >= spheres[radius]:
            r -= spheres[radius]
            radius += 1
        out.append(Element(group, random_normal_form(automaton, radius, rng)))
    return out
