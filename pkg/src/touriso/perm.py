"""Permutations and permutation groups.

Permutations are plain tuples of images (``p[x]`` is the image of ``x``).
``compose(a, b)`` applies ``b`` first, then ``a``.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .core import Tournament, VertexPartition
from .errors import DegreeMismatch, ParseError

Perm = tuple


def identity(n: int) -> Perm:
    return tuple(range(n))


def as_perm(p: Iterable[int]) -> Perm:
    t = tuple(int(x) for x in p)
    if sorted(t) != list(range(len(t))):
        raise ValueError(f"not a permutation: {t}")
    return t


def compose(a: Perm, b: Perm) -> Perm:
    """``(a o b)(x) = a[b[x]]``."""
    return tuple(a[x] for x in b)


def inverse(p: Perm) -> Perm:
    out = [0] * len(p)
    for x, y in enumerate(p):
        out[y] = x
    return tuple(out)


def is_identity(p: Perm) -> bool:
    return all(x == y for x, y in enumerate(p))


def support(p: Perm) -> list[int]:
    return [x for x, y in enumerate(p) if x != y]


def cycle_perm(n: int, *cycles: Sequence[int]) -> Perm:
    out = list(range(n))
    for cyc in cycles:
        for i, x in enumerate(cyc):
            out[x] = cyc[(i + 1) % len(cyc)]
    return tuple(out)


def format_cycles(p: Perm) -> str:
    seen = set()
    out = []
    for i in range(len(p)):
        if i in seen or p[i] == i:
            continue
        cyc = [i]
        seen.add(i)
        j = p[i]
        while j != i:
            seen.add(j)
            cyc.append(j)
            j = p[j]
        out.append("(" + " ".join(map(str, cyc)) + ")")
    return "".join(out) or "()"


def perm_to_line(p: Perm) -> str:
    return "p " + " ".join(map(str, p)) if p else "p"


def parse_perm_line(line: str) -> Perm:
    tok = line.split()
    if not tok or tok[0] != "p":
        raise ParseError("permutation lines start with 'p'")
    try:
        return as_perm(int(x) for x in tok[1:])
    except ValueError as exc:
        raise ParseError(str(exc)) from None


class _Level:
    __slots__ = ("base", "gens", "trans")

    def __init__(self, base: int):
        self.base = base
        self.gens: list[Perm] = []
        # orbit point -> u with u[base] == point
        self.trans: dict[int, Perm] = {}


class PermGroup:
    """Group given by generators; a stabilizer chain is built on first use.

    Base points are always the lowest-index point moved by the element that
    forces a new level, so the chain is a deterministic function of the
    generator list.
    """

    def __init__(self, degree: int, generators: Iterable[Sequence[int]] = ()):
        self.degree = degree
        gens = []
        for g in generators:
            t = tuple(int(x) for x in g)
            if len(t) != degree:
                raise DegreeMismatch(f"generator of degree {len(t)} in group of degree {degree}")
            if not is_identity(t):
                gens.append(t)
        self.generators: list[Perm] = gens
        self._levels: list[_Level] | None = None

    @classmethod
    def from_generators(cls, generators: Sequence[Sequence[int]], degree: int | None = None) -> "PermGroup":
        gens = list(generators)
        if degree is None:
            if not gens:
                raise DegreeMismatch("degree needed for an empty generator list")
            degree = len(gens[0])
        return cls(degree, gens)

    def __repr__(self) -> str:
        return f"PermGroup(degree={self.degree}, order={self.order()}, gens={len(self.generators)})"

    # -- chain -------------------------------------------------------------

    @property
    def chain(self) -> list[_Level]:
        if self._levels is None:
            self._build()
        return self._levels

    def _orbit_update(self, lvl: _Level) -> None:
        n = self.degree
        if not lvl.trans:
            lvl.trans[lvl.base] = identity(n)
        queue = list(lvl.trans)
        while queue:
            x = queue.pop()
            ux = lvl.trans[x]
            for s in lvl.gens:
                y = s[x]
                if y not in lvl.trans:
                    lvl.trans[y] = compose(s, ux)
                    queue.append(y)

    def _sift(self, g: Perm, start: int) -> tuple[Perm, int]:
        levels = self._levels
        for j in range(start, len(levels)):
            lvl = levels[j]
            x = g[lvl.base]
            u = lvl.trans.get(x)
            if u is None:
                return g, j
            g = compose(inverse(u), g)
        return g, len(levels)

    def _build(self) -> None:
        self._levels = []
        for g in self.generators:
            r, j = self._sift(g, 0)
            if not is_identity(r):
                self._insert(r, j)

    def _insert(self, g: Perm, j: int) -> None:
        """Add ``g`` (which fixes the first ``j`` base points) as strong generator."""
        levels = self._levels
        if j == len(levels):
            levels.append(_Level(support(g)[0]))
        for k in range(j + 1):
            levels[k].gens.append(g)
        for k in range(j, -1, -1):
            self._orbit_update(levels[k])
        self._complete(j)

    def _complete(self, top: int) -> None:
        """Schreier-Sims closure for levels ``top`` down to 0."""
        levels = self._levels
        i = top
        while i >= 0:
            lvl = levels[i]
            restart = False
            for x, ux in list(lvl.trans.items()):
                for s in list(lvl.gens):
                    y = s[x]
                    h = compose(inverse(lvl.trans[y]), compose(s, ux))
                    r, j = self._sift(h, i + 1)
                    if not is_identity(r):
                        if j == len(levels):
                            levels.append(_Level(support(r)[0]))
                        for k in range(i + 1, j + 1):
                            levels[k].gens.append(r)
                        for k in range(j, i, -1):
                            self._orbit_update(levels[k])
                        i = j
                        restart = True
                        break
                if restart:
                    break
            if not restart:
                i -= 1

    def add_generator(self, g: Sequence[int]) -> bool:
        """Append ``g`` unless it already lies in the group; report whether it was new."""
        t = tuple(int(x) for x in g)
        if len(t) != self.degree:
            raise DegreeMismatch(f"generator of degree {len(t)} in group of degree {self.degree}")
        self.chain
        r, j = self._sift(t, 0)
        if is_identity(r):
            return False
        self.generators.append(t)
        self._insert(r, j)
        return True

    # -- queries -----------------------------------------------------------

    @property
    def base(self) -> list[int]:
        return [lvl.base for lvl in self.chain]

    def transversal_sizes(self) -> list[int]:
        return [len(lvl.trans) for lvl in self.chain]

    def order(self) -> int:
        out = 1
        for s in self.transversal_sizes():
            out *= s
        return out

    def is_trivial(self) -> bool:
        return not self.generators

    def contains(self, p: Sequence[int]) -> bool:
        t = tuple(int(x) for x in p)
        if len(t) != self.degree:
            raise DegreeMismatch("degree mismatch in membership test")
        self.chain
        r, _ = self._sift(t, 0)
        return is_identity(r)

    __contains__ = contains

    def elements(self) -> list[Perm]:
        """All elements (products of transversal elements); small groups only."""
        out = [identity(self.degree)]
        for lvl in reversed(self.chain):
            out = [compose(u, g) for u in lvl.trans.values() for g in out]
        return out

    def orbit(self, x: int) -> list[int]:
        return sorted(_orbit(x, self.generators))

    def orbits(self) -> VertexPartition:
        return orbits(self)


def _orbit(x: int, gens: Sequence[Perm]) -> set[int]:
    seen = {x}
    stack = [x]
    while stack:
        y = stack.pop()
        for g in gens:
            z = g[y]
            if z not in seen:
                seen.add(z)
                stack.append(z)
    return seen


def build_chain(generators: Sequence[Sequence[int]], degree: int | None = None) -> PermGroup:
    G = PermGroup.from_generators(generators, degree)
    G.chain
    return G


def orbits(group: PermGroup) -> VertexPartition:
    labels = list(range(group.degree))

    def find(x):
        while labels[x] != x:
            labels[x] = labels[labels[x]]
            x = labels[x]
        return x

    for g in group.generators:
        for x, y in enumerate(g):
            rx, ry = find(x), find(y)
            if rx != ry:
                labels[max(rx, ry)] = min(rx, ry)
    return VertexPartition.from_labels([find(x) for x in range(group.degree)])


# --------------------------------------------------------------------------
# solvability
# --------------------------------------------------------------------------


def commutator(a: Perm, b: Perm) -> Perm:
    return compose(inverse(a), compose(inverse(b), compose(a, b)))


def normal_closure(G: PermGroup, gens: Sequence[Perm]) -> PermGroup:
    H = PermGroup(G.degree, gens)
    queue = list(H.generators)
    while queue:
        h = queue.pop()
        for g in G.generators:
            c = compose(g, compose(h, inverse(g)))
            if not H.contains(c):
                H = PermGroup(G.degree, H.generators + [c])
                queue.append(c)
    return H


def derived_subgroup(G: PermGroup) -> PermGroup:
    gens = G.generators
    comms = [commutator(a, b) for i, a in enumerate(gens) for b in gens[i + 1 :]]
    return normal_closure(G, [c for c in comms if not is_identity(c)])


def is_solvable(group: PermGroup) -> bool:
    G = group
    order = G.order()
    while order > 1:
        D = derived_subgroup(G)
        d = D.order()
        if d == order:
            return False
        G, order = D, d
    return True


def is_odd_order(group: PermGroup) -> bool:
    return group.order() % 2 == 1


# --------------------------------------------------------------------------
# intersection with an automorphism group
# --------------------------------------------------------------------------


def intersect_with_aut(group: PermGroup, T: Tournament) -> PermGroup:
    """Generators for ``group`` intersected with ``Aut(T)`` (edges and colors).

    Backtrack over the stabilizer chain of ``group``: a partial element is
    determined by its base images, which must stay inside the refined color
    cell of the base point and preserve orientations among base points. The
    subgroup is assembled bottom-up, skipping base images already reached by
    the part of the subgroup found so far.
    """
    if group.degree != T.n:
        raise DegreeMismatch(f"group degree {group.degree} vs tournament on {T.n} vertices")
    n = T.n
    if group.is_trivial() or n == 0:
        return PermGroup(n)
    levels = group.chain
    base = [lvl.base for lvl in levels]
    cell = _kernels.refine(T.adj, T.colors).tolist()
    adj = T.adj
    m = len(base)

    def consistent(prefix: Perm, j: int) -> bool:
        bj = base[j]
        ij = prefix[bj]
        if cell[ij] != cell[bj]:
            return False
        for i in range(j):
            bi = base[i]
            if adj[bi, bj] != adj[prefix[bi], ij]:
                return False
        return True

    def search(prefix: Perm, j: int):
        if j == m:
            p = np.asarray(prefix, dtype=np.int64)
            return prefix if _kernels.is_automorphism(adj, T.colors, p) else None
        for u in levels[j].trans.values():
            cand = compose(prefix, u)
            if consistent(cand, j):
                hit = search(cand, j + 1)
                if hit is not None:
                    return hit
        return None

    found: list[Perm] = []
    for j in range(m - 1, -1, -1):
        b = base[j]
        fixed = base[:j]
        local = [g for g in found if all(g[x] == x for x in fixed)]
        reached = _orbit(b, local)
        for gamma in sorted(levels[j].trans):
            if gamma in reached:
                continue
            u = levels[j].trans[gamma]
            if not consistent(u, j):
                continue
            hit = search(u, j + 1)
            if hit is not None:
                found.append(hit)
                local.append(hit)
                reached = _orbit(b, local)
    return PermGroup(n, found)
