"""Integer lattice helpers for free abelian groups ``Z^n``.

Sublattices are stored as triangular integer bases obtained from sympy's
Hermite normal form; residues modulo a sublattice are reduced coordinate by
coordinate along the pivots, which makes them canonical.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Sequence

from sympy import Matrix
from sympy.matrices.normalforms import hermite_normal_form


def word_to_vector(word: Sequence[int], n: int) -> tuple:
    v = [0] * n
    for x in word:
        v[abs(x) - 1] += 1 if x > 0 else -1
    return tuple(v)


def vector_to_word(v: Sequence[int]) -> tuple:
    out = []
    for i, c in enumerate(v):
        out.extend([(i + 1) if c > 0 else -(i + 1)] * abs(c))
    return tuple(out)


class Sublattice:
    """A sublattice of ``Z^n`` given by generating vectors."""

    def __init__(self, gens: Sequence[Sequence[int]], n: int):
        self.n = n
        gens = [tuple(int(c) for c in g) for g in gens if any(g)]
        self.gens = gens
        self.basis = []
        if gens:
            h = hermite_normal_form(Matrix(gens).T)
            cols = [tuple(int(h[r, c]) for r in range(n)) for c in range(h.shape[1])]
            for col in cols:
                piv = max(r for r in range(n) if col[r] != 0)
                if col[piv] < 0:
                    col = tuple(-c for c in col)
                self.basis.append((piv, col))
            self.basis.sort(reverse=True)
            pivots = [p for p, _ in self.basis]
            if len(set(pivots)) != len(pivots):
                raise ArithmeticError("Hermite basis is not triangular")

    @property
    def rank(self) -> int:
        return len(self.basis)

    def reduce(self, v: Sequence[int]) -> tuple:
        """Canonical representative of ``v`` modulo the lattice."""
        v = list(v)
        for piv, col in self.basis:
            q = v[piv] // col[piv]
            if q:
                for r in range(self.n):
                    v[r] -= q * col[r]
        return tuple(v)

    def contains(self, v) -> bool:
        return not any(self.reduce(v))

    def __add__(self, other: "Sublattice") -> "Sublattice":
        return Sublattice(self.gens + other.gens, self.n)

    def index_bound(self) -> int:
        """Product of pivots: bounds the order of any vector of the saturation modulo the lattice."""
        out = 1
        for piv, col in self.basis:
            out *= col[piv]
        return out


def _column_space(vectors, n):
    if not vectors:
        return []
    m = Matrix(vectors).T
    return [tuple(c) for c in m.columnspace()]


def rational_intersection(lattices: Sequence[Sublattice]):
    """Basis (rational column vectors) of the intersection of the ``Q``-spans."""
    n = lattices[0].n
    space = _column_space([col for _, col in lattices[0].basis], n)
    for lat in lattices[1:]:
        other = _column_space([col for _, col in lat.basis], n)
        if not space or not other:
            return []
        a = Matrix(space).T
        b = Matrix(other).T
        kernel = a.row_join(-b).nullspace()
        vecs = [tuple(a * k[: a.shape[1], :]) for k in kernel]
        space = _column_space(vecs, n)
    return space


def intersection_witness(lattices: Sequence[Sublattice]):
    """A nonzero integer vector in every lattice, or ``None`` if the intersection is zero."""
    space = rational_intersection(lattices)
    if not space:
        return None
    v = [Fraction(str(c)) for c in space[0]]
    den = reduce(lcm, (c.denominator for c in v), 1)
    ints = [int(c * den) for c in v]
    g = reduce(gcd, (abs(c) for c in ints), 0)
    ints = [c // g for c in ints]
    mult = 1
    for lat in lattices:
        m = 1
        while not lat.contains([m * c for c in ints]):
            m += 1
            if m > lat.index_bound():
                raise ArithmeticError("no multiple of the rational witness lies in the lattice")
        mult = lcm(mult, m)
    return tuple(mult * c for c in ints)
