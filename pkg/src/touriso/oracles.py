"""Reference oracles and the asymmetry-oracle adapter stack.

``brute_aut`` is an exact individualization/refinement search. The
``AsymmetryOracle`` classes answer "is Aut(T) trivial?" for uncolored
tournaments and count their queries; ``OracleStack`` derives colored
asymmetry (o2) and asymmetric isomorphism (o3) from nothing but o1 queries
plus polynomial local work.
"""

from __future__ import annotations

import selectors
import subprocess
import time
from typing import Callable

import numpy as np

from . import _kernels
from .core import (
    IndividualizationTrace,
    Tournament,
    color_palette,
    encode_colors,
    is_isomorphism,
    to_text,
    tri,
)
from .errors import (
    BadParameter,
    NotIsomorphic,
    OracleProtocolError,
    SizeMismatch,
    WitnessCheckFailed,
)
from .perm import Perm, PermGroup, compose

# --------------------------------------------------------------------------
# individualization-refinement search
# --------------------------------------------------------------------------


def _individualized(part: np.ndarray, v: int) -> np.ndarray:
    out = part.copy()
    out[v] = part.shape[0]
    return out


def _first_nonsingleton(part: np.ndarray) -> int:
    counts = np.bincount(part)
    return int(np.flatnonzero(counts > 1)[0])


class _Node:
    __slots__ = ("part", "target", "cell", "shape")

    def __init__(self, adj, part):
        self.part = part
        k = int(part.max()) + 1 if part.size else 0
        self.shape = _kernels.block_counts(adj, part, k) if k < part.shape[0] else None
        if k < part.shape[0]:
            self.target = _first_nonsingleton(part)
            self.cell = np.flatnonzero(part == self.target).tolist()
        else:
            self.target = -1
            self.cell = []

    def matches(self, other: "_Node") -> bool:
        if self.part.max() != other.part.max():
            return False
        if self.shape is None or other.shape is None:
            return self.shape is None and other.shape is None
        if not np.array_equal(np.bincount(self.part), np.bincount(other.part)):
            return False
        return bool(np.array_equal(self.shape, other.shape))


def _first_path(A: Tournament) -> tuple[list[_Node], np.ndarray]:
    refine = _kernels.refine
    node = _Node(A.adj, refine(A.adj, A.colors))
    path = []
    while node.cell:
        path.append(node)
        node = _Node(A.adj, refine(A.adj, _individualized(node.part, node.cell[0])))
    return path, node.part


def _leaf_map(leaf_from: np.ndarray, leaf_to: np.ndarray) -> np.ndarray:
    inv = np.empty_like(leaf_to)
    inv[leaf_to] = np.arange(leaf_to.shape[0])
    return inv[leaf_from]


def _dfs_match(B: Tournament, A: Tournament, path, leaf0, part, depth, accept):
    """Search the subtree of ``B`` rooted at ``part`` for a leaf mapping ``A`` onto ``B``."""
    refine = _kernels.refine
    node = _Node(B.adj, part)
    if depth == len(path):
        if node.cell:
            return None
        sigma = _leaf_map(leaf0, part)
        return sigma if accept(sigma) else None
    if not node.matches(path[depth]):
        return None
    for w in node.cell:
        hit = _dfs_match(B, A, path, leaf0, refine(B.adj, _individualized(part, w)), depth + 1, accept)
        if hit is not None:
            return hit
    return None


def _aut_generators(T: Tournament, first_only: bool = False) -> list[Perm]:
    n = T.n
    if n <= 1:
        return []
    refine = _kernels.refine
    path, leaf0 = _first_path(T)

    def accept(sigma):
        return bool(_kernels.is_automorphism(T.adj, T.colors, sigma))

    gens: list[Perm] = []
    for k in range(len(path) - 1, -1, -1):
        node = path[k]
        v = node.cell[0]
        reached = {v}
        for w in node.cell[1:]:
            if w in reached:
                continue
            start = refine(T.adj, _individualized(node.part, w))
            sigma = _dfs_match(T, T, path, leaf0, start, k + 1, accept)
            if sigma is None:
                continue
            g = tuple(int(x) for x in sigma)
            gens.append(g)
            if first_only:
                return gens
            reached = _orbit_of(v, gens)
    return gens


def _orbit_of(x: int, gens) -> set[int]:
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


def brute_aut(T: Tournament) -> PermGroup:
    """Exact (colored) automorphism group by individualization-refinement."""
    return PermGroup(T.n, _aut_generators(T))


def is_asymmetric_brute(T: Tournament) -> bool:
    return not _aut_generators(T, first_only=True)


def brute_iso(T1: Tournament, T2: Tournament) -> Perm | None:
    """An isomorphism ``T1 -> T2`` by the same search, or ``None``."""
    if T1.n != T2.n:
        return None
    if sorted(T1.colors.tolist()) != sorted(T2.colors.tolist()):
        return None
    if T1.n == 0:
        return ()
    path, leaf0 = _first_path(T1)

    def accept(sigma):
        return is_isomorphism(T1, T2, sigma)

    sigma = _dfs_match(T2, T1, path, leaf0, _kernels.refine(T2.adj, T2.colors), 0, accept)
    return None if sigma is None else tuple(int(x) for x in sigma)


# --------------------------------------------------------------------------
# asymmetry oracles (o1)
# --------------------------------------------------------------------------


class AsymmetryOracle:
    """Answers "is Aut(T) trivial?" for uncolored tournaments.

    Subclasses implement ``_answer``; ``__call__`` validates the input and
    increments ``call_count`` exactly once per query.
    """

    name = "abstract"

    def __init__(self):
        self.call_count = 0

    def __call__(self, T: Tournament) -> bool:
        if not T.is_uncolored():
            raise BadParameter("the asymmetry oracle takes uncolored tournaments")
        self.call_count += 1
        return self._answer(T)

    answer = __call__

    def _answer(self, T: Tournament) -> bool:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class BruteAsymmetryOracle(AsymmetryOracle):
    """In-process oracle backed by the brute-force search, with an exact-key cache."""

    name = "internal"

    def __init__(self, cache: bool = True):
        super().__init__()
        self._cache: dict[bytes, bool] | None = {} if cache else None
        self.cache_hits = 0

    def _answer(self, T: Tournament) -> bool:
        if self._cache is None:
            return is_asymmetric_brute(T)
        key = T.key()
        hit = self._cache.get(key)
        if hit is not None:
            self.cache_hits += 1
            return hit
        ans = is_asymmetric_brute(T)
        self._cache[key] = ans
        return ans


class ExternalAsymmetryOracle(AsymmetryOracle):
    """Oracle running in a child process.

    Each request is one tournament in the text format written to the child's
    stdin; the child answers with a single line ``asym`` or ``sym``.
    """

    name = "exec"

    def __init__(self, command, timeout: float = 30.0):
        super().__init__()
        if isinstance(command, str):
            command = [command]
        self.command = list(command)
        self.timeout = timeout
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._sel = selectors.DefaultSelector()
        self._sel.register(self._proc.stdout, selectors.EVENT_READ)

    def _answer(self, T: Tournament) -> bool:
        proc = self._proc
        if proc.poll() is not None:
            raise OracleProtocolError(f"oracle process exited with code {proc.returncode}")
        try:
            proc.stdin.write(to_text(T))
            proc.stdin.flush()
        except BrokenPipeError:
            raise OracleProtocolError("oracle process closed its input") from None
        deadline = time.monotonic() + self.timeout
        if not self._sel.select(max(0.0, deadline - time.monotonic())):
            raise OracleProtocolError(f"oracle did not answer within {self.timeout}s")
        line = proc.stdout.readline()
        reply = line.strip()
        if reply == "asym":
            return True
        if reply == "sym":
            return False
        raise OracleProtocolError(f"unexpected oracle reply {line!r}")

    def close(self) -> None:
        proc = self._proc
        if proc.poll() is None:
            try:
                proc.stdin.close()
                proc.wait(timeout=self.timeout)
            except (OSError, subprocess.TimeoutExpired):
                proc.kill()
                proc.wait()
        self._sel.close()


def make_oracle(spec: str | None) -> AsymmetryOracle:
    """``"internal"`` or ``"exec:<path>"``."""
    if spec in (None, "", "internal"):
        return BruteAsymmetryOracle()
    if spec.startswith("exec:"):
        return ExternalAsymmetryOracle(spec[len("exec:") :])
    raise BadParameter(f"unknown oracle spec {spec!r}")


def serve_brute_oracle(stdin, stdout) -> None:
    """Answer oracle requests on a stream pair with the brute-force search."""
    from .core import _parse_one

    buf: list[str] = []
    for line in stdin:
        buf.append(line.rstrip("\n"))
        try:
            T, rest = _parse_one(buf)
        except Exception:
            continue
        buf = [r for r in rest if r.strip()]
        stdout.write("asym\n" if is_asymmetric_brute(T) else "sym\n")
        stdout.flush()


# --------------------------------------------------------------------------
# adapter stack (o2, o3)
# --------------------------------------------------------------------------


class OracleStack:
    """Colored asymmetry and asymmetric-isomorphism adapters over one o1 oracle."""

    def __init__(self, o1: AsymmetryOracle | None = None):
        self.o1 = o1 if o1 is not None else BruteAsymmetryOracle()
        self.o2_calls = 0
        self.o3_calls = 0
        self.o3_search_calls = 0

    def counts(self) -> dict[str, int]:
        return {
            "o1": self.o1.call_count,
            "o2": self.o2_calls,
            "o3": self.o3_calls,
            "o3_search": self.o3_search_calls,
        }

    def o2(self, T: Tournament) -> bool:
        """Is the colored tournament ``T`` asymmetric?"""
        self.o2_calls += 1
        return self.o1(encode_colors(T, color_palette(T)))

    colored_asymmetric = o2

    def o3_decide(self, T1: Tournament, T2: Tournament) -> bool:
        """Isomorphism of two colored asymmetric tournaments via the Tri gadget."""
        self.o3_calls += 1
        if T1.n != T2.n:
            return False
        if T1.n == 0:
            return True
        if sorted(T1.colors.tolist()) != sorted(T2.colors.tolist()):
            return False
        gadget = tri(T1, T2)
        return not self.o1(encode_colors(gadget, color_palette(gadget)))

    def o3_search(self, T1: Tournament, T2: Tournament) -> Perm | None:
        """The isomorphism ``T1 -> T2`` of colored asymmetric tournaments, verified.

        Matched vertex pairs are individualized one at a time, keeping the pair
        isomorphic according to ``o3_decide``. Color refinement is used as
        local work to order candidates and to read off the bijection once both
        sides refine to discrete colorings.
        """
        self.o3_search_calls += 1
        if not self.o3_decide(T1, T2):
            return None
        n = T1.n
        refine = _kernels.refine
        tr1, tr2 = IndividualizationTrace(T1), IndividualizationTrace(T2)
        while True:
            A, B = tr1.tournament(), tr2.tournament()
            r1, r2 = refine(A.adj, A.colors), refine(B.adj, B.colors)
            if not np.array_equal(np.bincount(r1), np.bincount(r2)):
                raise WitnessCheckFailed("refined colorings disagree on an isomorphic pair")
            if int(r1.max()) + 1 == n:
                sigma = tuple(int(x) for x in _leaf_map(r1, r2))
                if is_isomorphism(T1, T2, sigma):
                    return sigma
                raise WitnessCheckFailed("candidate bijection is not an isomorphism")
            counts = np.bincount(r1)
            x = next(v for v in range(n) if counts[r1[v]] > 1)
            for y in np.flatnonzero(r2 == r1[x]).tolist():
                e1, e2 = tr1.extend(x), tr2.extend(y)
                if self.o3_decide(e1.tournament(), e2.tournament()):
                    tr1, tr2 = e1, e2
                    break
            else:
                raise WitnessCheckFailed(f"no partner for vertex {x}; inputs not asymmetric?")


# --------------------------------------------------------------------------
# isomorphism from automorphism groups
# --------------------------------------------------------------------------


def block_carrier(group: PermGroup, block_size: int, src: int, dst: int) -> Perm | None:
    """An element of ``group`` mapping block ``src`` onto block ``dst``.

    Blocks are consecutive index ranges of length ``block_size`` and must form
    a block system for the group (true for Aut of a Tri gadget).
    """
    n = group.degree
    start = src * block_size
    words: dict[int, Perm] = {src: tuple(range(n))}
    queue = [src]
    while queue:
        b = queue.pop(0)
        g = words[b]
        for s in group.generators:
            h = compose(s, g)
            c = h[start] // block_size
            if c not in words:
                words[c] = h
                queue.append(c)
    return words.get(dst)


def aut_to_iso(T1: Tournament, T2: Tournament, aut_solver: Callable[[Tournament], PermGroup]) -> Perm:
    """Isomorphism ``T1 -> T2`` from generators of ``Aut(Tri(T1, T2))``.

    Raises ``NotIsomorphic`` when no group element carries block ``V(T1)``
    onto block ``V(T2)``.
    """
    if T1.n != T2.n:
        raise SizeMismatch(f"sizes {T1.n} and {T2.n} differ")
    n = T1.n
    if n == 0:
        return ()
    group = aut_solver(tri(T1, T2))
    g = block_carrier(group, n, 0, 2)
    if g is None:
        raise NotIsomorphic("no automorphism of the Tri gadget moves block 1 onto block 3")
    sigma = tuple(g[x] - 2 * n for x in range(n))
    if not is_isomorphism(T1, T2, sigma):
        raise WitnessCheckFailed("extracted bijection is not an isomorphism")
    return sigma


__all__ = [
    "AsymmetryOracle",
    "BruteAsymmetryOracle",
    "ExternalAsymmetryOracle",
    "OracleStack",
    "aut_to_iso",
    "block_carrier",
    "brute_aut",
    "brute_iso",
    "is_asymmetric_brute",
    "make_oracle",
    "serve_brute_oracle",
]
