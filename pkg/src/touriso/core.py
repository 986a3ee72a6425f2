"""Tournaments, vertex partitions, individualization and gadget constructions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import (
    BadParameter,
    DegreeMismatch,
    DuplicatePair,
    EvenPartSize,
    MissingPair,
    ParseError,
    SelfLoop,
    SizeMismatch,
    TooFewColors,
    TournamentError,
    VertexOutOfRange,
)


class Tournament:
    """Immutable colored tournament backed by a dense 0/1 adjacency matrix.

    ``adj[u, v] == 1`` iff ``u -> v``. Colors are non-negative integers; an
    all-zero coloring is the uncolored (monochromatic) case.
    """

    __slots__ = ("adj", "colors", "_key")

    def __init__(self, adj, colors=None, *, check: bool = True):
        adj = np.ascontiguousarray(adj, dtype=np.uint8)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise TournamentError("adjacency must be a square matrix")
        n = adj.shape[0]
        if colors is None:
            colors = np.zeros(n, dtype=np.int64)
        else:
            colors = np.ascontiguousarray(colors, dtype=np.int64)
            if colors.shape != (n,):
                raise TournamentError("need exactly one color per vertex")
        if check:
            if np.any(adj > 1):
                raise TournamentError("adjacency entries must be 0 or 1")
            if np.any(np.diag(adj)):
                raise SelfLoop("tournaments have no self-loops")
            both = adj.astype(np.int16) + adj.T
            np.fill_diagonal(both, 1)
            if np.any(both == 0):
                u, v = map(int, np.argwhere(both == 0)[0])
                raise MissingPair(f"no edge between {u} and {v}")
            if np.any(both == 2):
                u, v = map(int, np.argwhere(both == 2)[0])
                raise DuplicatePair(f"both orientations present between {u} and {v}")
            if n and colors.min() < 0:
                raise TournamentError("colors must be non-negative")
        adj.flags.writeable = False
        colors.flags.writeable = False
        self.adj = adj
        self.colors = colors
        self._key = None

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        extra = "" if self.is_monochromatic() else f", colors={self.colors.tolist()}"
        return f"Tournament(n={self.n}{extra})"

    def key(self) -> bytes:
        """Exact byte identity of (n, edges, colors); used for oracle caching."""
        if self._key is None:
            self._key = (
                self.n.to_bytes(4, "little")
                + np.packbits(self.adj).tobytes()
                + self.colors.tobytes()
            )
        return self._key

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tournament):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adj[u, v])

    def out_neighbors(self, v: int) -> list[int]:
        return np.flatnonzero(self.adj[v]).tolist()

    def in_neighbors(self, v: int) -> list[int]:
        return np.flatnonzero(self.adj[:, v]).tolist()

    def edges(self) -> list[tuple[int, int]]:
        return [(int(u), int(v)) for u, v in np.argwhere(self.adj)]

    def is_monochromatic(self) -> bool:
        return self.n == 0 or bool(np.all(self.colors == self.colors[0]))

    def is_uncolored(self) -> bool:
        return not np.any(self.colors)

    def color_classes(self) -> list[list[int]]:
        """Color classes ordered by color value; vertices ascending."""
        classes: dict[int, list[int]] = {}
        for v, c in enumerate(self.colors.tolist()):
            classes.setdefault(c, []).append(v)
        return [classes[c] for c in sorted(classes)]

    def recolor(self, colors) -> "Tournament":
        return Tournament(self.adj, colors, check=False)

    def uncolored(self) -> "Tournament":
        return Tournament(self.adj, None, check=False)

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise VertexOutOfRange(f"vertex {v} not in range(0, {self.n})")


@dataclass(frozen=True)
class VertexPartition:
    """Partition of ``range(n)``; parts sorted internally and ordered by minimum."""

    parts: tuple[tuple[int, ...], ...]

    def __init__(self, parts: Iterable[Iterable[int]], n: int | None = None):
        normed = [tuple(sorted(int(x) for x in p)) for p in parts]
        if any(not p for p in normed):
            raise BadParameter("partition parts must be non-empty")
        normed.sort(key=lambda p: p[0])
        seen = [x for p in normed for x in p]
        if len(seen) != len(set(seen)):
            raise BadParameter("partition parts overlap")
        size = len(seen) if n is None else n
        if sorted(seen) != list(range(size)):
            raise BadParameter(f"parts do not cover range(0, {size})")
        object.__setattr__(self, "parts", tuple(normed))

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "VertexPartition":
        groups: dict[int, list[int]] = {}
        for v, lab in enumerate(labels):
            groups.setdefault(int(lab), []).append(v)
        return cls(groups.values(), n=len(labels))

    @classmethod
    def discrete(cls, n: int) -> "VertexPartition":
        return cls([[v] for v in range(n)], n=n)

    @classmethod
    def trivial(cls, n: int) -> "VertexPartition":
        return cls([range(n)] if n else [], n=n)

    @property
    def n(self) -> int:
        return sum(len(p) for p in self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def is_discrete(self) -> bool:
        return all(len(p) == 1 for p in self.parts)

    def is_trivial(self) -> bool:
        return len(self.parts) == 1

    def labels(self) -> np.ndarray:
        out = np.empty(self.n, dtype=np.int64)
        for i, p in enumerate(self.parts):
            out[list(p)] = i
        return out

    def class_of(self, v: int) -> tuple[int, ...]:
        for p in self.parts:
            if v in p:
                return p
        raise VertexOutOfRange(v)

    def sizes(self) -> list[int]:
        return [len(p) for p in self.parts]

    def as_lists(self) -> list[list[int]]:
        return [list(p) for p in self.parts]


@dataclass(frozen=True)
class IndividualizationTrace:
    """A base tournament plus an ordered sequence of individualized vertices.

    Vertex ``u_i`` gets the composite color ``(color(u_i), i)``, every other
    vertex ``(color(v), 0)``; pairs are encoded as ``color * (n + 1) + rank``,
    which is injective and preserves the lexicographic order.
    """

    base: Tournament
    sequence: tuple[int, ...] = ()

    def __post_init__(self):
        if len(set(self.sequence)) != len(self.sequence):
            raise BadParameter("individualized vertices must be distinct")
        for v in self.sequence:
            self.base._check_vertex(v)

    def extend(self, v: int) -> "IndividualizationTrace":
        return IndividualizationTrace(self.base, self.sequence + (v,))

    def colors(self) -> np.ndarray:
        n = self.base.n
        out = self.base.colors * (n + 1)
        for rank, u in enumerate(self.sequence, start=1):
            out[u] += rank
        return out

    def tournament(self) -> Tournament:
        return self.base.recolor(self.colors())

    def nonsingleton_vertices(self) -> list[int]:
        """Vertices whose class under the composite coloring is not a singleton."""
        fixed = set(self.sequence)
        counts: dict[int, int] = {}
        for v, c in enumerate(self.base.colors.tolist()):
            if v not in fixed:
                counts[c] = counts.get(c, 0) + 1
        return [
            v
            for v, c in enumerate(self.base.colors.tolist())
            if v not in fixed and counts[c] > 1
        ]

    def same_class(self, v: int) -> list[int]:
        """Vertices sharing ``v``'s composite color (``v`` included)."""
        if v in self.sequence:
            return [v]
        fixed = set(self.sequence)
        c = self.base.colors[v]
        return [u for u in range(self.base.n) if u not in fixed and self.base.colors[u] == c]


# --------------------------------------------------------------------------
# construction and basic operations
# --------------------------------------------------------------------------


def new_tournament(n: int, edges: Iterable[tuple[int, int]], colors=None) -> Tournament:
    """Validated tournament from an explicit list of oriented pairs."""
    if n < 0:
        raise BadParameter("n must be non-negative")
    adj = np.zeros((n, n), dtype=np.uint8)
    seen: set[frozenset[int]] = set()
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise VertexOutOfRange(f"edge ({u}, {v}) out of range for n={n}")
        if u == v:
            raise SelfLoop(f"self-loop at {u}")
        pair = frozenset((u, v))
        if pair in seen:
            raise DuplicatePair(f"pair {{{u}, {v}}} given twice")
        seen.add(pair)
        adj[u, v] = 1
    for u in range(n):
        for v in range(u + 1, n):
            if frozenset((u, v)) not in seen:
                raise MissingPair(f"no orientation given for {{{u}, {v}}}")
    if colors is not None and isinstance(colors, dict):
        colors = [colors.get(v, 0) for v in range(n)]
    return Tournament(adj, colors)


def induced(T: Tournament, S: Iterable[int]) -> Tournament:
    """Subtournament on ``S``, re-indexed in increasing original order."""
    idx = sorted(set(int(v) for v in S))
    for v in idx:
        T._check_vertex(v)
    sel = np.asarray(idx, dtype=np.int64)
    return Tournament(T.adj[np.ix_(sel, sel)], T.colors[sel], check=False)


def individualize(T: Tournament, v: int) -> Tournament:
    """Give ``v`` a fresh color (one above the current maximum)."""
    T._check_vertex(v)
    colors = T.colors.copy()
    colors[v] = int(colors.max()) + 1
    return T.recolor(colors)


def star_coloring(T: Tournament, v: int) -> Tournament:
    """Color ``v`` with 1, its in-neighbors with 2 and its out-neighbors with 3."""
    T._check_vertex(v)
    colors = np.where(T.adj[:, v] == 1, 2, 3).astype(np.int64)
    colors[v] = 1
    return T.recolor(colors)


def quotient(T: Tournament, pi: VertexPartition) -> Tournament:
    """Majority tournament on the (odd-sized) parts of ``pi``, in part order."""
    if pi.n != T.n:
        raise SizeMismatch("partition and tournament sizes differ")
    for p in pi.parts:
        if len(p) % 2 == 0:
            raise EvenPartSize(f"part of even size {len(p)}")
    k = len(pi)
    counts = _kernels.block_counts(T.adj, pi.labels(), k)
    adj = (counts > counts.T).astype(np.uint8)
    off = ~np.eye(k, dtype=bool)
    if np.any((counts == counts.T) & off):
        raise EvenPartSize("tied majority between parts")
    return Tournament(adj, check=False)


def tri(T1: Tournament, T2: Tournament) -> Tournament:
    """Triangle gadget: blocks T1, a copy of T1, T2 with edges T1 -> T1' -> T2 -> T1."""
    if T1.n != T2.n:
        raise SizeMismatch(f"tri needs equal sizes, got {T1.n} and {T2.n}")
    n = T1.n
    adj = np.zeros((3 * n, 3 * n), dtype=np.uint8)
    a, b, c = slice(0, n), slice(n, 2 * n), slice(2 * n, 3 * n)
    adj[a, a] = T1.adj
    adj[b, b] = T1.adj
    adj[c, c] = T2.adj
    adj[a, b] = 1
    adj[b, c] = 1
    adj[c, a] = 1
    colors = np.concatenate([T1.colors, T1.colors, T2.colors])
    return Tournament(adj, colors, check=False)


def color_palette(*tournaments: Tournament) -> list[int]:
    """Sorted color values used by the given tournaments, padded to length >= 2."""
    values = sorted(set().union(*(set(T.colors.tolist()) for T in tournaments)))
    if not values:
        values = [0]
    if len(values) < 2:
        values.append(values[-1] + 1)
    return values


def encode_colors(T: Tournament, palette: Sequence[int] | None = None) -> Tournament:
    """Uncolored tournament on ``n + l + 2`` vertices with the same automorphisms.

    Colors are mapped to ``1..l`` through ``palette`` (sorted distinct values,
    default: the colors of ``T``). Vertices ``n..n+l-1`` form the transitive
    path ``u_1 -> ... -> u_l``; ``u_j -> v`` iff ``v`` has color ``j``. Then
    come ``a`` (only out-neighbor ``b``) and ``b`` (in-neighbors ``a`` and the
    path). ``a`` is the unique vertex of maximum in-degree.
    """
    if palette is None:
        palette = sorted(set(T.colors.tolist()))
    palette = list(palette)
    ell = len(palette)
    if ell < 2:
        raise TooFewColors("need at least two colors; pad the palette")
    index = {c: j for j, c in enumerate(palette)}
    try:
        cls = np.asarray([index[c] for c in T.colors.tolist()], dtype=np.int64)
    except KeyError as exc:
        raise BadParameter(f"color {exc.args[0]} missing from palette") from None
    n = T.n
    N = n + ell + 2
    a_, b_ = n + ell, n + ell + 1
    adj = np.zeros((N, N), dtype=np.uint8)
    adj[:n, :n] = T.adj
    path = np.arange(n, n + ell)
    # transitive path block
    adj[np.ix_(path, path)] = np.triu(np.ones((ell, ell), dtype=np.uint8), 1)
    member = np.zeros((ell, n), dtype=np.uint8)
    if n:
        member[cls, np.arange(n)] = 1
    adj[n : n + ell, :n] = member
    adj[:n, n : n + ell] = 1 - member.T
    adj[:a_, a_] = 1
    adj[a_, b_] = 1
    adj[path, b_] = 1
    adj[b_, :n] = 1
    return Tournament(adj, check=False)


def _as_perm(s, n: int) -> np.ndarray:
    p = np.asarray(s, dtype=np.int64)
    if p.shape != (n,):
        raise DegreeMismatch(f"permutation of degree {p.shape[0] if p.ndim else 0} on {n} vertices")
    return np.ascontiguousarray(p)


def apply_perm(T: Tournament, s) -> Tournament:
    """Relabel vertex ``x`` as ``s[x]``."""
    p = _as_perm(s, T.n)
    inv = np.empty_like(p)
    inv[p] = np.arange(T.n)
    return Tournament(T.adj[np.ix_(inv, inv)], T.colors[inv], check=False)


def is_automorphism(T: Tournament, s) -> bool:
    p = _as_perm(s, T.n)
    return bool(_kernels.is_automorphism(T.adj, T.colors, p))


def is_isomorphism(T1: Tournament, T2: Tournament, s) -> bool:
    """True iff ``s`` maps ``T1`` onto ``T2`` preserving edges and colors."""
    if T1.n != T2.n:
        return False
    p = _as_perm(s, T1.n)
    if sorted(p.tolist()) != list(range(T1.n)):
        return False
    if not np.array_equal(T2.colors[p], T1.colors):
        return False
    return bool(np.array_equal(T2.adj[np.ix_(p, p)], T1.adj))


# --------------------------------------------------------------------------
# instance families
# --------------------------------------------------------------------------


def random_tournament(n: int, seed=None) -> Tournament:
    """Uniformly random orientation of K_n."""
    if n < 0:
        raise BadParameter("n must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(n, n), dtype=np.uint8)
    upper = np.triu(bits, 1)
    adj = upper + np.triu(1 - bits, 1).T
    return Tournament(adj, check=False)


def transitive(n: int) -> Tournament:
    if n < 0:
        raise BadParameter("n must be non-negative")
    return Tournament(np.triu(np.ones((n, n), dtype=np.uint8), 1), check=False)


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    f = 2
    while f * f <= q:
        if q % f == 0:
            return False
        f += 1
    return True


def paley(q: int) -> Tournament:
    """Paley tournament: ``i -> j`` iff ``j - i`` is a nonzero square mod ``q``."""
    if not _is_prime(q) or q % 4 != 3:
        raise BadParameter(f"paley needs a prime q = 3 mod 4, got {q}")
    squares = {(x * x) % q for x in range(1, q)}
    return circulant(q, squares)


def circulant(n: int, residues: Iterable[int] | None = None) -> Tournament:
    """Circulant tournament ``i -> j`` iff ``(j - i) mod n`` is in ``residues``.

    Default residues are ``1..(n-1)/2``.
    """
    if n < 1 or n % 2 == 0:
        raise BadParameter(f"circulant tournaments need odd n, got {n}")
    S = set(range(1, (n - 1) // 2 + 1)) if residues is None else {int(r) % n for r in residues}
    neg = {(-r) % n for r in S}
    if 0 in S or S & neg or (S | neg) != set(range(1, n)):
        raise BadParameter("residues and their negations must partition 1..n-1")
    diff = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    adj = np.isin(diff, sorted(S)).astype(np.uint8)
    return Tournament(adj, check=False)


def cycle3() -> Tournament:
    """The directed 3-cycle 0 -> 1 -> 2 -> 0."""
    return circulant(3, {1})


def lex_product(T1: Tournament, T2: Tournament) -> Tournament:
    """Lexicographic product: ``(a, x) -> (b, y)`` iff ``a -> b``, or ``a == b`` and ``x -> y``.

    Vertex ``(a, x)`` is numbered ``a * |T2| + x``; the outer factor is ``T1``.
    """
    m = T2.n
    adj = np.kron(T1.adj, np.ones((m, m), dtype=np.uint8)) + np.kron(
        np.eye(T1.n, dtype=np.uint8), T2.adj
    )
    return Tournament(adj, check=False)


# --------------------------------------------------------------------------
# text format
# --------------------------------------------------------------------------


def to_text(T: Tournament) -> str:
    """``n k`` line, optional color line, then the n x n orientation rows."""
    n = T.n
    lines = []
    if T.is_uncolored():
        lines.append(f"{n} 0")
    else:
        k = len(set(T.colors.tolist()))
        lines.append(f"{n} {k}")
        lines.append(" ".join(str(c) for c in T.colors.tolist()))
    for u in range(n):
        row = ["-" if u == v else str(int(T.adj[u, v])) for v in range(n)]
        lines.append("".join(row))
    return "\n".join(lines) + "\n"


def parse_text(text: str) -> Tournament:
    T, rest = _parse_one(text.splitlines())
    if any(line.strip() for line in rest):
        raise ParseError("trailing data after tournament")
    return T


def _parse_one(lines: list[str]) -> tuple[Tournament, list[str]]:
    it = list(lines)
    if not it:
        raise ParseError("empty input")
    head = it.pop(0).split()
    if len(head) != 2:
        raise ParseError("header must be 'n k'")
    try:
        n, k = int(head[0]), int(head[1])
    except ValueError:
        raise ParseError("header must hold two integers") from None
    if n < 0 or k < 0:
        raise ParseError("negative header values")
    colors = None
    if k > 0:
        if not it:
            raise ParseError("missing color line")
        try:
            colors = [int(x) for x in it.pop(0).split()]
        except ValueError:
            raise ParseError("colors must be integers") from None
        if len(colors) != n:
            raise ParseError(f"expected {n} colors, got {len(colors)}")
        if any(c < 0 for c in colors):
            raise ParseError("colors must be non-negative")
        if len(set(colors)) != k:
            raise ParseError(f"header announces {k} colors, found {len(set(colors))}")
    if len(it) < n:
        raise ParseError(f"expected {n} matrix rows, got {len(it)}")
    adj = np.zeros((n, n), dtype=np.uint8)
    for u in range(n):
        row = it.pop(0).strip()
        if len(row) != n:
            raise ParseError(f"row {u} has length {len(row)}, expected {n}")
        for v, ch in enumerate(row):
            if u == v:
                if ch != "-":
                    raise ParseError(f"diagonal entry ({u},{u}) must be '-'")
            elif ch in "01":
                adj[u, v] = ch == "1"
            else:
                raise ParseError(f"bad character {ch!r} at ({u},{v})")
    try:
        return Tournament(adj, colors), it
    except TournamentError as exc:
        raise ParseError(str(exc)) from exc


def read_tournament(path) -> Tournament:
    with open(path, encoding="ascii") as fh:
        return parse_text(fh.read())


def write_tournament(T: Tournament, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(to_text(T))
