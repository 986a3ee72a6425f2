"""Shared fixtures and independent brute-force ground truth.

The helpers here enumerate permutations directly and never call package
search code, so tests can compare the package against them.
"""

import itertools

import numpy as np
import pytest

from touriso.core import Tournament

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def record_acceptance(name: str, passed: bool, detail: str) -> None:
    _ACCEPTANCE.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def all_tournaments(n: int):
    """Every orientation of the complete graph on ``n`` vertices."""
    pairs = list(itertools.combinations(range(n), 2))
    for bits in range(2 ** len(pairs)):
        adj = np.zeros((n, n), dtype=np.uint8)
        for k, (u, v) in enumerate(pairs):
            if bits >> k & 1:
                adj[u, v] = 1
            else:
                adj[v, u] = 1
        yield Tournament(adj, check=False)


def perm_preserves(T: Tournament, p) -> bool:
    n = T.n
    for u in range(n):
        if T.colors[p[u]] != T.colors[u]:
            return False
        for v in range(n):
            if T.adj[p[u], p[v]] != T.adj[u, v]:
                return False
    return True


def enum_aut(T: Tournament) -> list[tuple[int, ...]]:
    """All automorphisms by enumerating ``n!`` permutations (keep ``n`` small)."""
    return [p for p in itertools.permutations(range(T.n)) if perm_preserves(T, p)]


def enum_iso(A: Tournament, B: Tournament):
    if A.n != B.n:
        return None
    for p in itertools.permutations(range(A.n)):
        ok = all(A.colors[u] == B.colors[p[u]] for u in range(A.n)) and all(
            A.adj[u, v] == B.adj[p[u], p[v]] for u in range(A.n) for v in range(A.n)
        )
        if ok:
            return p
    return None


def orbit_labels(n: int, elements) -> list[int]:
    """Orbit representative (minimum) of each vertex under a list of group elements."""
    lab = list(range(n))
    for g in elements:
        for x in range(n):
            lab[g[x]] = min(lab[g[x]], lab[x])
    changed = True
    while changed:
        changed = False
        for g in elements:
            for x in range(n):
                m = min(lab[x], lab[g[x]])
                if lab[x] != m or lab[g[x]] != m:
                    lab[x] = lab[g[x]] = m
                    changed = True
    return lab
