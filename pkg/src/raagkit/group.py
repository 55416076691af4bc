"""Right-angled Artin groups with exact ShortLex normal forms.

Letters are stored internally as small integers: ``2 * rank + (sign < 0)``, where
``rank`` is the vertex position in the letter order.  Integer order on codes is
then exactly the order used for ShortLex (vertex order first, ``+`` before ``-``),
and the inverse of a code is ``code ^ 1``.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import InputError, UsageError


class Letter(NamedTuple):
    vertex: int
    sign: int


Word = tuple  # tuple[Letter, ...]


@dataclass(frozen=True)
class DefiningGraph:
    """Commutation graph of a RAAG.

    ``letter_order`` lists vertex indices from smallest to largest letter.
    """

    vertex_count: int
    edges: frozenset = frozenset()
    letter_order: tuple = ()
    names: tuple = ()

    def __post_init__(self):
        n = self.vertex_count
        if not isinstance(n, int) or n < 1:
            raise InputError(f"vertex_count must be a positive integer, got {n!r}")
        edges = set()
        for e in self.edges:
            pair = tuple(e)
            if len(pair) != 2:
                raise InputError(f"edge {pair!r} is a self-loop or malformed")
            u, v = pair
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge {pair!r} has an endpoint outside 0..{n - 1}")
            edges.add(frozenset((u, v)))
        object.__setattr__(self, "edges", frozenset(edges))
        order = tuple(self.letter_order) if self.letter_order else tuple(range(n))
        if sorted(order) != list(range(n)):
            raise InputError(f"letter_order {order!r} is not a permutation of 0..{n - 1}")
        object.__setattr__(self, "letter_order", order)
        names = tuple(self.names) if self.names else tuple(_default_names(n))
        if len(names) != n or len(set(names)) != n:
            raise InputError(f"need {n} distinct vertex names, got {names!r}")
        object.__setattr__(self, "names", names)

    @classmethod
    def from_pairs(cls, vertex_count: int, pairs: Iterable[tuple[int, int]], **kw) -> "DefiningGraph":
        seen = set()
        for u, v in pairs:
            if u == v:
                raise InputError(f"self-loop at vertex {u}")
            key = frozenset((u, v))
            if key in seen:
                raise InputError(f"duplicate edge {u}-{v}")
            seen.add(key)
        return cls(vertex_count, frozenset(seen), **kw)

    def adjacent(self, u: int, v: int) -> bool:
        return frozenset((u, v)) in self.edges

    def is_complete(self) -> bool:
        n = self.vertex_count
        return len(self.edges) == n * (n - 1) // 2

    def canonical_text(self) -> str:
        """Group-definition text in letter order; the input of :meth:`digest`."""
        lines = ["vertices: " + " ".join(self.names[v] for v in self.letter_order)]
        rank = {v: r for r, v in enumerate(self.letter_order)}
        pairs = sorted(tuple(sorted((rank[u], rank[v]))) for u, v in (tuple(e) for e in self.edges))
        for a, b in pairs:
            lines.append(f"edge: {self.names[self.letter_order[a]]} {self.names[self.letter_order[b]]}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()


def _default_names(n: int) -> list[str]:
    if n <= 26:
        return [chr(ord("a") + i) for i in range(n)]
    return [f"x{i}" for i in range(n)]


def parse_group_text(text: str) -> DefiningGraph:
    """Parse ``vertices: a b c`` / ``edge: a b`` text.  Blank lines and ``#`` comments are ignored."""
    names = None
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        if not sep:
            raise InputError(f"line {lineno}: expected 'key: value', got {raw!r}")
        key = key.strip()
        toks = rest.split()
        if key == "vertices":
            if names is not None:
                raise InputError(f"line {lineno}: second 'vertices:' line")
            if not toks:
                raise InputError(f"line {lineno}: no vertices listed")
            if len(set(toks)) != len(toks):
                raise InputError(f"line {lineno}: repeated vertex name")
            names = toks
        elif key == "edge":
            if names is None:
                raise InputError(f"line {lineno}: 'edge:' before 'vertices:'")
            if len(toks) != 2:
                raise InputError(f"line {lineno}: an edge needs exactly two vertex names")
            for t in toks:
                if t not in names:
                    raise InputError(f"line {lineno}: unknown vertex {t!r}")
            pairs.append((names.index(toks[0]), names.index(toks[1])))
        else:
            raise InputError(f"line {lineno}: unknown key {key!r}")
    if names is None:
        raise InputError("group definition has no 'vertices:' line")
    return DefiningGraph.from_pairs(len(names), pairs, names=tuple(names))


def load_group(path: str | Path) -> "RAAG":
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read group file {path}: {exc}") from exc
    return RAAG(parse_group_text(text))


# --- word-level kernels on integer codes -------------------------------------------


def push_letter(w: list, c: int, adj: Sequence[int]) -> bool:
    """Right-multiply the canonical word ``w`` (in place) by the letter code ``c``.

    Returns True if the length grew, False if ``c`` cancelled.  ``adj[v]`` is the
    bitmask of vertex ranks adjacent to rank ``v``.
    """
    v = c >> 1
    mask = adj[v]
    j = len(w) - 1
    while j >= 0:
        u = w[j]
        if u >> 1 == v:
            if u == c ^ 1:
                del w[j]
                return False
            break
        if not (mask >> (u >> 1)) & 1:
            break
        j -= 1
    # w[j+1:] commutes with c; the least representative puts c before the first larger letter
    for p in range(j + 1, len(w)):
        if c < w[p]:
            w.insert(p, c)
            return True
    w.append(c)
    return True


def right_neighbours(x: tuple, adj: Sequence[int]) -> list:
    """Canonical forms of ``x·c`` for every letter code ``c``, indexed by ``c``.

    Both signs of a vertex share one backward scan, since the scan only looks at
    vertices.
    """
    n = len(x)
    out = []
    for v in range(len(adj)):
        mask = adj[v]
        j = n - 1
        while j >= 0:
            u = x[j] >> 1
            if u == v or not (mask >> u) & 1:
                break
            j -= 1
        # letters after j commute with v and are ordered by vertex
        p = j + 1
        while p < n and (x[p] >> 1) < v:
            p += 1
        pos = 2 * v
        for c in (pos, pos + 1):
            if j >= 0 and x[j] == c ^ 1:
                out.append(x[:j] + x[j + 1 :])
            else:
                out.append(x[:p] + (c,) + x[p:])
    return out


def cancels(w: Sequence[int], c: int, adj: Sequence[int]) -> bool:
    """True if appending ``c`` to the reduced word ``w`` shortens it."""
    v = c >> 1
    mask = adj[v]
    for j in range(len(w) - 1, -1, -1):
        u = w[j]
        if u >> 1 == v:
            return u == c ^ 1
        if not (mask >> (u >> 1)) & 1:
            return False
    return False


def reduced_length(codes: Iterable[int], adj: Sequence[int]) -> int:
    """Length of the element spelled by ``codes`` (free reduction up to commutation)."""
    w: list = []
    for c in codes:
        v = c >> 1
        mask = adj[v]
        j = len(w) - 1
        hit = False
        while j >= 0:
            u = w[j]
            if u >> 1 == v:
                if u == c ^ 1:
                    del w[j]
                    hit = True
                break
            if not (mask >> (u >> 1)) & 1:
                break
            j -= 1
        if not hit:
            w.append(c)
    return len(w)


def inverse_codes(codes: Sequence[int]) -> list:
    return [c ^ 1 for c in reversed(codes)]


# --- group model ---------------------------------------------------------------------


class RAAG:
    """A right-angled Artin group with the standard generating set.

    Owns the word problem: every :class:`Element` it hands out carries its
    ShortLex-least geodesic spelling.
    """

    def __init__(self, graph: DefiningGraph):
        self.graph = graph
        n = graph.vertex_count
        self.rank = {v: r for r, v in enumerate(graph.letter_order)}
        adj = [0] * n
        for e in graph.edges:
            u, v = (self.rank[x] for x in e)
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        self.adj = tuple(adj)
        self.rank_count = n
        self.generator_codes = tuple(range(2 * n))
        self.names = tuple(graph.names[graph.letter_order[r]] for r in range(n))
        self._digest = graph.digest()
        self.identity = Element(self, ())

    def __repr__(self):
        return f"RAAG({' '.join(self.names)}; {len(self.graph.edges)} edges)"

    def __eq__(self, other):
        return isinstance(other, RAAG) and self._digest == other._digest

    def __hash__(self):
        return hash(self._digest)

    @property
    def digest(self) -> str:
        return self._digest

    # letters <-> codes
    def code(self, letter: Letter) -> int:
        v, s = letter
        if not (isinstance(v, int) and 0 <= v < self.rank_count):
            raise InputError(f"invalid vertex index {v!r} for a {self.rank_count}-vertex graph")
        if s not in (1, -1):
            raise InputError(f"letter sign must be +1 or -1, got {s!r}")
        return 2 * self.rank[v] + (s < 0)

    def letter(self, code: int) -> Letter:
        return Letter(self.graph.letter_order[code >> 1], -1 if code & 1 else 1)

    def commute(self, c1: int, c2: int) -> bool:
        """True if the generators of the two codes commute and differ as vertices."""
        return bool((self.adj[c1 >> 1] >> (c2 >> 1)) & 1)

    # construction
    def from_codes(self, codes: Iterable[int]) -> "Element":
        w: list = []
        adj = self.adj
        for c in codes:
            push_letter(w, c, adj)
        return Element(self, tuple(w))

    def element(self, word: Iterable) -> "Element":
        """Normalize a sequence of :class:`Letter` (or ``(vertex, sign)`` pairs)."""
        return self.from_codes(self.code(Letter(*x)) for x in word)

    def generator(self, name: str, sign: int = 1) -> "Element":
        return self.parse(name if sign > 0 else f"{name}^-1")

    def generators(self) -> list:
        return [Element(self, (c,)) for c in self.generator_codes]

    def parse(self, text: str) -> "Element":
        """Parse ``"a^2 b c^-1"``; ``1``, ``e`` (if not a vertex name) or ``""`` is the identity.

        When every vertex name is a single character, juxtaposition (``"aab"``) and
        upper case for inverses (``"aB"``) are also accepted.
        """
        return self.from_codes(self._parse_codes(text))

    def parse_word(self, text: str) -> list:
        """Letter codes of a word, as written (no reduction)."""
        return self._parse_codes(text)

    def _parse_codes(self, text: str) -> list:
        text = text.strip()
        if text in ("", "1") or (text == "e" and "e" not in self.names):
            return []
        index = {name: r for r, name in enumerate(self.names)}
        if all(len(nm) == 1 for nm in self.names):
            body = re.sub(r"[\s*.]", "", text)
            toks = re.findall(r"(.)(?:\^\(?(-?\d+)\)?)?", body)
        else:
            toks = [re.fullmatch(r"(.+?)(?:\^\(?(-?\d+)\)?)?", t).groups() for t in text.replace("*", " ").split()]
        codes = []
        for base, exp in toks:
            e = int(exp) if exp else 1
            if base in index:
                r = index[base]
            elif len(base) == 1 and base.swapcase() in index:
                r, e = index[base.swapcase()], -e
            else:
                raise InputError(f"unknown generator {base!r} in {text!r}")
            codes.extend([2 * r + (e < 0)] * abs(e))
        return codes

    def format_codes(self, codes: Sequence[int]) -> str:
        if not codes:
            return "1"
        out = []
        i = 0
        while i < len(codes):
            c = codes[i]
            j = i
            while j < len(codes) and codes[j] == c:
                j += 1
            k = j - i
            name = self.names[c >> 1]
            e = -k if c & 1 else k
            out.append(name if e == 1 else f"{name}^{e}")
            i = j
        return " ".join(out)


GroupModel = RAAG


class Element:
    """A group element stored as its canonical (ShortLex-least geodesic) word."""

    __slots__ = ("group", "codes", "_hash")

    def __init__(self, group: RAAG, codes: tuple):
        self.group = group
        self.codes = codes
        self._hash = hash(codes)

    # public accessors
    @property
    def normal_form(self) -> tuple:
        return tuple(self.group.letter(c) for c in self.codes)

    def __len__(self):
        return len(self.codes)

    def __eq__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        return self.codes == other.codes and (self.group is other.group or self.group == other.group)

    def __hash__(self):
        return self._hash

    def __lt__(self, other: "Element"):
        return shortlex_key(self) < shortlex_key(other)

    def __mul__(self, other: "Element") -> "Element":
        return multiply(self, other)

    def __invert__(self) -> "Element":
        return invert(self)

    def __pow__(self, k: int) -> "Element":
        return power(self, k)

    def __repr__(self):
        return f"Element({self.group.format_codes(self.codes)!r})"

    def __str__(self):
        return self.group.format_codes(self.codes)

    def is_identity(self) -> bool:
        return not self.codes


def shortlex_key(x: Element) -> tuple:
    return (len(x.codes), x.codes)


def normalize(w: Iterable, group: RAAG) -> Element:
    """Canonical representative of the word ``w`` (a sequence of letters)."""
    return group.element(w)


def _same_group(x: Element, y: Element) -> None:
    if x.group is not y.group and x.group != y.group:
        raise UsageError("elements belong to different group models")


def multiply(x: Element, y: Element) -> Element:
    _same_group(x, y)
    w = list(x.codes)
    adj = x.group.adj
    for c in y.codes:
        push_letter(w, c, adj)
    return Element(x.group, tuple(w))


def invert(x: Element) -> Element:
    return x.group.from_codes(inverse_codes(x.codes))


def power(x: Element, k: int) -> Element:
    base = x if k >= 0 else invert(x)
    w: list = []
    adj = x.group.adj
    for _ in range(abs(k)):
        for c in base.codes:
            push_letter(w, c, adj)
    return Element(x.group, tuple(w))


def length(x: Element) -> int:
    return len(x.codes)


def right_mul_code(x: Element, c: int) -> Element:
    w = list(x.codes)
    push_letter(w, c, x.group.adj)
    return Element(x.group, tuple(w))


def free_group(rank: int = 2) -> RAAG:
    return RAAG(DefiningGraph(rank))


def free_abelian(rank: int = 2) -> RAAG:
    pairs = [(i, j) for i in range(rank) for j in range(i + 1, rank)]
    return RAAG(DefiningGraph.from_pairs(rank, pairs))


def z2_free_z() -> RAAG:
    """ℤ² ∗ ℤ: vertices a < b < c with the single edge a–b."""
    return RAAG(DefiningGraph.from_pairs(3, [(0, 1)]))


STANDARD_GROUPS = {
    "F2": lambda: free_group(2),
    "Z2": lambda: free_abelian(2),
    "Z3": lambda: free_abelian(3),
    "Z2*Z": z2_free_z,
}
