"""Words over signed generator alphabets, free reduction and RAAG normal forms.

A letter is a nonzero integer: generator ``i`` is the letter ``i + 1`` and its
inverse is ``-(i + 1)``.  A word is a tuple of letters.  Reduced words are the
normal forms: for free groups the freely reduced word, for right-angled Artin
groups the shortlex-least geodesic, where letters are ordered
``a < a^-1 < b < b^-1 < ...`` following the generator indices.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import MalformedWordError, ResourceError

Word = tuple

DEFAULT_ELEMENT_CAP = 10**6


def gen(letter: int) -> int:
    """Generator index of a letter."""
    return abs(letter) - 1


def letter_key(letter: int) -> int:
    return 2 * (abs(letter) - 1) + (letter < 0)


def shortlex_key(word: Sequence[int]):
    return (len(word), tuple(letter_key(x) for x in word))


def inverse(word: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(word))


def letters(rank: int):
    """All letters of a rank-``rank`` alphabet in shortlex order."""
    out = []
    for i in range(rank):
        out.extend((i + 1, -(i + 1)))
    return out


def check_word(word: Iterable[int], rank: int) -> Word:
    word = tuple(word)
    for x in word:
        if not isinstance(x, int) or x == 0 or abs(x) > rank:
            raise MalformedWordError(f"letter {x!r} outside alphabet of rank {rank}")
    return word


def free_reduce(word: Sequence[int], rank: int | None = None) -> Word:
    """Cancel adjacent inverse pairs until none remain."""
    if rank is not None:
        check_word(word, rank)
    stack = []
    for x in word:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


_TOKEN = re.compile(r"\^\s*\(?\s*(-?\d+)\s*\)?|⁻¹")


class Alphabet:
    """Generator names with a parser and printer for words.

    Tokens are generator names, each optionally followed by ``^n`` (``n`` may
    be negative) or ``⁻¹``.  Names may be juxtaposed (``"x0x1"``); the longest
    matching name wins.
    """

    def __init__(self, names: Sequence[str]):
        names = list(names)
        if len(set(names)) != len(names):
            raise MalformedWordError(f"duplicate generator names in {names}")
        for name in names:
            if not name or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
                raise MalformedWordError(f"invalid generator name {name!r}")
        self.names = names
        self.index = {name: i for i, name in enumerate(names)}
        self._by_length = sorted(names, key=len, reverse=True)

    @classmethod
    def default(cls, rank: int, prefix: str | None = None) -> "Alphabet":
        if prefix is None and rank <= 26:
            base = "abcdefghijklmnopqrstuvwxyz" if rank > 3 else "xyz"
            return cls(list(base[:rank]))
        return cls([f"{prefix or 'x'}{i}" for i in range(rank)])

    @property
    def rank(self) -> int:
        return len(self.names)

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.names == other.names

    def __hash__(self):
        return hash(tuple(self.names))

    def __repr__(self):
        return f"Alphabet({self.names})"

    def parse(self, text: str) -> Word:
        """Parse text such as ``"x x^-1 y"`` or ``"b^2 a⁻¹"`` into a word."""
        if isinstance(text, (tuple, list)):
            return check_word(text, self.rank)
        s = text.replace("*", " ").replace("·", " ").replace(".", " ").strip()
        out = []
        pos = 0
        while pos < len(s):
            if s[pos].isspace():
                pos += 1
                continue
            if s[pos] in "1ε" and (pos + 1 == len(s) or s[pos + 1].isspace()):
                pos += 1  # explicit identity
                continue
            for name in self._by_length:
                if s.startswith(name, pos):
                    break
            else:
                raise MalformedWordError(f"cannot parse {text!r} at offset {pos}")
            pos += len(name)
            exponent = 1
            m = _TOKEN.match(s, pos)
            if m:
                exponent = -1 if m.group(0) == "⁻¹" else int(m.group(1))
                pos = m.end()
            x = self.index[name] + 1
            out.extend([x if exponent > 0 else -x] * abs(exponent))
        return tuple(out)

    def format(self, word: Sequence[int]) -> str:
        """Print a word, compressing runs into powers."""
        if not word:
            return "1"
        parts = []
        for x, run in itertools.groupby(word):
            n = len(list(run)) * (1 if x > 0 else -1)
            name = self.names[gen(x)]
            parts.append(name if n == 1 else f"{name}^{n}")
        return " ".join(parts)


@dataclass(frozen=True)
class DefiningGraph:
    """Simplicial graph on generator indices ``0..n-1``."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        norm = set()
        for e in self.edges:
            u, v = tuple(e)
            if u == v:
                raise ValueError(f"defining graph must be irreflexive (loop at {u})")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge {e} outside vertex range {self.n}")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))
        adj = [set() for _ in range(self.n)]
        for u, v in norm:
            adj[u].add(v)
            adj[v].add(u)
        object.__setattr__(self, "_adj", tuple(frozenset(a) for a in adj))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple]) -> "DefiningGraph":
        return cls(n, frozenset(tuple(e) for e in edges))

    @classmethod
    def cycle(cls, n: int) -> "DefiningGraph":
        return cls.from_edges(n, [(i, (i + 1) % n) for i in range(n)])

    @classmethod
    def complete(cls, n: int) -> "DefiningGraph":
        return cls.from_edges(n, itertools.combinations(range(n), 2))

    def adjacent(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def link(self, v: int) -> frozenset:
        return self._adj[v]

    def star(self, v: int) -> frozenset:
        return self._adj[v] | {v}

    def sorted_edges(self):
        return sorted(self.edges)

    def triangles(self):
        return [
            (u, v, w)
            for u, v in self.sorted_edges()
            for w in sorted(self._adj[u] & self._adj[v])
            if w > v
        ]

    def triangle_free(self) -> bool:
        return not self.triangles()

    def min_valence(self) -> int:
        return min((len(a) for a in self._adj), default=0)

    def connected(self) -> bool:
        if self.n == 0:
            return True
        seen = {0}
        todo = [0]
        while todo:
            u = todo.pop()
            for v in self._adj[u]:
                if v not in seen:
                    seen.add(v)
                    todo.append(v)
        return len(seen) == self.n


def nf_raag(graph: DefiningGraph, word: Sequence[int]) -> Word:
    """Shortlex-least reduced word equal to ``word`` in the RAAG on ``graph``.

    Uses one pile per generator: a letter is pushed onto its own pile and
    blocks (a ``0`` marker) every pile of a generator it does not commute
    with.  A letter cancels when the top of its pile is its inverse.  Reading
    off piles by always taking the least available bottom letter yields the
    lexicographically least arrangement.
    """
    n = graph.n
    check_word(word, n)
    noncomm = _noncommuting(graph)
    piles = [deque() for _ in range(n)]
    size = 0
    for x in word:
        i = abs(x) - 1
        e = 1 if x > 0 else -1
        pile = piles[i]
        if pile and pile[-1] == -e:
            pile.pop()
            for j in noncomm[i]:
                piles[j].pop()
            size -= 1
        else:
            pile.append(e)
            for j in noncomm[i]:
                piles[j].append(0)
            size += 1
    out = []
    for _ in range(size):
        for i in range(n):
            pile = piles[i]
            if pile and pile[0]:
                break
        out.append(pile.popleft() * (i + 1))
        for j in noncomm[i]:
            piles[j].popleft()
    return tuple(out)


_NONCOMM_CACHE: dict = {}


def _noncommuting(graph: DefiningGraph):
    cached = _NONCOMM_CACHE.get(graph)
    if cached is None:
        cached = tuple(
            tuple(j for j in range(graph.n) if j != i and not graph.adjacent(i, j))
            for i in range(graph.n)
        )
        _NONCOMM_CACHE[graph] = cached
    return cached


def support(nf: Sequence[int]) -> frozenset:
    """Generator indices occurring in a normal form."""
    return frozenset(abs(x) - 1 for x in nf)


def is_in_parabolic(graph: DefiningGraph, g: Sequence[int], subset: Iterable[int]) -> bool:
    return support(nf_raag(graph, g)) <= frozenset(subset)


def strip_parabolic_tail(graph: DefiningGraph, g: Sequence[int], subset: Iterable[int]):
    """Split ``g = head * tail`` with ``tail`` in the parabolic ``<subset>``.

    ``head`` is the minimal-length element of the coset ``g<subset>``.  Letters
    of ``subset`` that commute past everything after them are moved into the
    tail until no such letter remains.
    """
    subset = frozenset(subset)
    word = list(nf_raag(graph, g))
    tail = []
    changed = True
    while changed:
        changed = False
        for p in range(len(word) - 1, -1, -1):
            x = word[p]
            i = abs(x) - 1
            if i not in subset:
                continue
            if all(graph.adjacent(i, abs(y) - 1) for y in word[p + 1:]):
                del word[p]
                tail.insert(0, x)
                changed = True
                break
    return nf_raag(graph, word), nf_raag(graph, tail)


def strip_parabolic_head(graph: DefiningGraph, g: Sequence[int], subset: Iterable[int]):
    """Mirror of :func:`strip_parabolic_tail`: ``g = head * rest``, head in ``<subset>``."""
    rest, head = strip_parabolic_tail(graph, inverse(g), subset)
    return nf_raag(graph, inverse(head)), nf_raag(graph, inverse(rest))


def commutes(graph: DefiningGraph, g: Sequence[int], h: Sequence[int]) -> bool:
    return not nf_raag(graph, tuple(g) + tuple(h) + inverse(g) + inverse(h))


class RAAG:
    """Right-angled Artin group on a defining graph.

    Free groups (no edges) and free abelian groups (complete graph) are the
    two extreme cases and reuse this class.
    """

    tag = "raag"

    def __init__(self, graph: DefiningGraph, alphabet: Alphabet | None = None):
        self.graph = graph
        self.alphabet = alphabet or Alphabet.default(graph.n)
        if self.alphabet.rank != graph.n:
            raise ValueError("alphabet size does not match the defining graph")

    @property
    def rank(self) -> int:
        return self.graph.n

    def normal_form(self, word: Sequence[int]) -> Word:
        if not self.graph.edges:
            return free_reduce(word, self.rank)
        return nf_raag(self.graph, word)

    key = normal_form

    def multiply(self, *words) -> Word:
        return self.normal_form(tuple(itertools.chain.from_iterable(words)))

    def inverse(self, word) -> Word:
        return self.normal_form(inverse(word))

    def equal(self, u, v) -> bool:
        return self.normal_form(u) == self.normal_form(v)

    def describe(self) -> dict:
        names = self.alphabet.names
        return {
            "group": "raag",
            "vertices": list(names),
            "edges": [[names[u], names[v]] for u, v in self.graph.sorted_edges()],
        }


class FreeGroup(RAAG):
    tag = "free"

    def __init__(self, rank: int, alphabet: Alphabet | None = None):
        super().__init__(DefiningGraph(rank), alphabet or Alphabet.default(rank))

    def normal_form(self, word):
        return free_reduce(word, self.rank)

    key = normal_form

    def describe(self) -> dict:
        return {"group": "free", "rank": self.rank, "names": list(self.alphabet.names)}


def ball_enumerate(group, radius: int, cap: int = DEFAULT_ELEMENT_CAP):
    """All elements of word length at most ``radius``, as shortlex-least words.

    ``group`` needs ``rank`` and ``key(word)`` (a hashable element invariant).
    Breadth-first search in shortlex order discovers each element first
    through its shortlex-least geodesic.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    gens = letters(group.rank)
    seen = {group.key(()): ()}
    out = [()]
    frontier = [()]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for x in gens:
                if w and w[-1] == -x:
                    continue
                v = w + (x,)
                k = group.key(v)
                if k in seen:
                    continue
                seen[k] = v
                nxt.append(v)
                if len(seen) > cap:
                    raise ResourceError(f"ball exceeds element cap {cap}")
        out.extend(nxt)
        frontier = nxt
    return out
