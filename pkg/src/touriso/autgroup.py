"""Automorphism groups from invariant suborbits, and isomorphism on top.

``aut_group`` dispatches on the shape of the suborbit partition:

* case 0: several colors; recurse per color class, intersect with Aut(T)
* asymmetric: discrete partition, trivial group
* case 1: one class; certificates plus the stabilizer of a star-colored vertex
* case 2: classes of unequal size; recolor by class size
* case 3a: equal sizes, several isomorphism types of classes; recolor by type
* case 3b: one type; lift the quotient's group along class isomorphisms,
  add the class groups, intersect with Aut(T)

Every returned generator is an automorphism: case 0 and 3b end with an
exact intersection, case 1 adds only verified certificates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .core import (
    Tournament,
    color_palette,
    encode_colors,
    induced,
    is_automorphism,
    is_isomorphism,
    quotient,
    star_coloring,
    tri,
)
from .errors import NotIsomorphic, OracleInconsistent, RecursionLimit, WitnessCheckFailed
from .oracles import block_carrier
from .perm import Perm, PermGroup, identity, intersect_with_aut, inverse, is_solvable
from .suborbits import SuborbitOracle, SuborbitResult


@dataclass
class AutConfig:
    """Run-level settings.

    Each suborbit call gets ``epsilon / n**budget_exponent`` where ``n`` is
    the size of the top-level input.
    """

    epsilon: float = 0.05
    budget_exponent: int = 3
    check_solvable: bool = False
    max_depth: int = 200
    memoize: bool = False

    def per_call_epsilon(self, n: int) -> float:
        return self.epsilon / max(n, 2) ** self.budget_exponent

    def to_dict(self) -> dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "budget_exponent": self.budget_exponent,
            "check_solvable": self.check_solvable,
            "memoize": self.memoize,
        }


@dataclass
class CaseNode:
    case: str
    n: int
    color_sizes: list[int]
    pi_sizes: list[int] | None = None
    oracle_calls: int = 0
    children: list["CaseNode"] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "case": self.case,
            "n": self.n,
            "color_sizes": self.color_sizes,
            "pi_sizes": self.pi_sizes,
            "oracle_calls": self.oracle_calls,
            "children": [c.to_dict() for c in self.children],
        }


@dataclass
class CaseTrace:
    root: CaseNode | None = None

    def nodes(self) -> list[CaseNode]:
        out = []
        stack = [self.root] if self.root else []
        while stack:
            node = stack.pop()
            out.append(node)
            stack.extend(reversed(node.children))
        return out

    def node_count(self) -> int:
        return len(self.nodes())

    def case_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for node in self.nodes():
            counts[node.case] = counts.get(node.case, 0) + 1
        return dict(sorted(counts.items()))

    def max_depth(self) -> int:
        def depth(node):
            return 1 + max((depth(c) for c in node.children), default=0)

        return depth(self.root) if self.root else 0

    def to_json(self) -> dict[str, Any]:
        return {
            "nodes": self.node_count(),
            "depth": self.max_depth(),
            "cases": self.case_counts(),
            "tree": self.root.to_dict() if self.root else None,
        }


def _lift(local: Perm, verts: list[int], n: int) -> Perm:
    out = list(range(n))
    for a, b in enumerate(local):
        out[verts[a]] = verts[b]
    return tuple(out)


class _Run:
    def __init__(self, oracle: SuborbitOracle, config: AutConfig, epsilon: float, rng: np.random.Generator):
        self.oracle = oracle
        self.config = config
        self.epsilon = epsilon
        self.rng = rng
        self.cache: dict[bytes, list[Perm]] = {}
        self.root: CaseNode | None = None

    def child_rng(self) -> np.random.Generator:
        return self.rng.spawn(1)[0]

    def intersect(self, gens: list[Perm], T: Tournament) -> list[Perm]:
        group = PermGroup(T.n, gens)
        if self.config.check_solvable and not is_solvable(group):
            raise OracleInconsistent("intermediate group is not solvable")
        return intersect_with_aut(group, T).generators

    def aut(self, T: Tournament, parent: CaseNode | None, depth: int) -> list[Perm]:
        if depth > self.config.max_depth:
            raise RecursionLimit(f"recursion deeper than {self.config.max_depth}")
        key = T.key() if self.config.memoize else None
        if key is not None and key in self.cache:
            return self.cache[key]
        node = CaseNode("", T.n, sorted(len(c) for c in T.color_classes()))
        if parent is not None:
            parent.children.append(node)
        else:
            self.root = node
        gens = self._dispatch(T, node, depth)
        if key is not None:
            self.cache[key] = gens
        return gens

    def _dispatch(self, T: Tournament, node: CaseNode, depth: int) -> list[Perm]:
        n = T.n
        if n <= 1:
            node.case = "asymmetric"
            return []
        if not T.is_monochromatic():
            node.case = "0"
            lifted = []
            for cls in T.color_classes():
                for g in self.aut(induced(T, cls), node, depth + 1):
                    lifted.append(_lift(g, cls, n))
            return self.intersect(lifted, T)

        before = self.oracle.stack.o1.call_count
        res: SuborbitResult = self.oracle(T, self.child_rng(), self.epsilon)
        node.oracle_calls = self.oracle.stack.o1.call_count - before
        pi = res.pi
        node.pi_sizes = pi.sizes()
        if pi.is_discrete():
            node.case = "asymmetric"
            return []
        if pi.is_trivial():
            node.case = "1"
            rest = self.aut(star_coloring(T, 0), node, depth + 1)
            return [c for c in res.certificates if is_automorphism(T, c)] + rest
        sizes = pi.sizes()
        if len(set(sizes)) > 1:
            node.case = "2"
            colors = [len(pi.class_of(v)) for v in range(n)]
            return self.aut(T.recolor(colors), node, depth + 1)
        return self._case3(T, node, depth, pi)

    def _class_iso(self, A: Tournament, B: Tournament, node: CaseNode, depth: int) -> Perm | None:
        """Isomorphism ``A -> B`` read off generators of ``Aut(Tri(A, B))``."""
        m = A.n
        gens = self.aut(tri(A, B), node, depth + 1)
        g = block_carrier(PermGroup(3 * m, gens), m, 0, 2)
        if g is None:
            return None
        sigma = tuple(g[x] - 2 * m for x in range(m))
        if sorted(sigma) != list(range(m)) or not is_isomorphism(A, B, sigma):
            raise WitnessCheckFailed("block-carrying automorphism does not restrict to an isomorphism")
        return sigma

    def _case3(self, T: Tournament, node: CaseNode, depth: int, pi) -> list[Perm]:
        n = T.n
        parts = [list(p) for p in pi.parts]
        starred = [star_coloring(induced(T, p), 0) for p in parts]
        reps: list[int] = []
        kind = [0] * len(parts)
        from_rep: list[Perm | None] = [None] * len(parts)
        for j in range(len(parts)):
            for t, r in enumerate(reps):
                phi = self._class_iso(starred[r], starred[j], node, depth)
                if phi is not None:
                    kind[j], from_rep[j] = t, phi
                    break
            else:
                kind[j] = len(reps)
                reps.append(j)
                from_rep[j] = identity(len(parts[j]))
        if len(reps) > 1:
            node.case = "3a"
            colors = [0] * n
            for j, p in enumerate(parts):
                for v in p:
                    colors[v] = kind[j]
            return self.aut(T.recolor(colors), node, depth + 1)

        node.case = "3b"
        if any(len(p) % 2 == 0 for p in parts):
            raise OracleInconsistent("suborbit classes of even size reached the quotient step")
        # psi[j][a]: vertex of class j matched with position a of the first class
        psi = [[parts[j][x] for x in from_rep[j]] for j in range(len(parts))]
        pos = {}
        for j, p in enumerate(parts):
            for a, v in enumerate(p):
                pos[v] = (j, a)
        inv_psi = [inverse(from_rep[j]) for j in range(len(parts))]

        def carry(v: int, target: int) -> int:
            j, a = pos[v]
            return psi[target][inv_psi[j][a]]

        lifted = []
        for g in self.aut(quotient(T, pi), node, depth + 1):
            lifted.append(tuple(carry(v, g[pos[v][0]]) for v in range(n)))
        for p in parts:
            for g in self.aut(induced(T, p), node, depth + 1):
                lifted.append(_lift(g, p, n))
        return self.intersect(lifted, T)


def aut_group(
    T: Tournament,
    suborbit_oracle: SuborbitOracle | None = None,
    rng: np.random.Generator | None = None,
    config: AutConfig | None = None,
    trace: CaseTrace | None = None,
) -> PermGroup:
    """Generators of ``Aut(T)`` (colors respected) via the suborbit oracle."""
    oracle = suborbit_oracle if suborbit_oracle is not None else SuborbitOracle()
    config = config or AutConfig()
    rng = rng if rng is not None else np.random.default_rng()
    run = _Run(oracle, config, config.per_call_epsilon(T.n), rng)
    gens = run.aut(T, None, 0)
    if trace is not None:
        trace.root = run.root
    group = PermGroup(T.n, gens)
    if not verify_generators(T, group):
        raise WitnessCheckFailed("a generator is not an automorphism")
    return group


def verify_generators(T: Tournament, group: PermGroup) -> bool:
    return group.degree == T.n and all(is_automorphism(T, g) for g in group.generators)


def iso_tournaments(
    T1: Tournament,
    T2: Tournament,
    suborbit_oracle: SuborbitOracle | None = None,
    rng: np.random.Generator | None = None,
    config: AutConfig | None = None,
    trace: CaseTrace | None = None,
) -> Perm:
    """A verified isomorphism ``T1 -> T2``; raises ``NotIsomorphic`` otherwise.

    Errors are one-sided: a returned map is always checked, while
    ``NotIsomorphic`` may rarely be a false negative.
    """
    if T1.n != T2.n:
        raise NotIsomorphic(f"sizes {T1.n} and {T2.n} differ")
    n = T1.n
    if sorted(T1.colors.tolist()) != sorted(T2.colors.tolist()):
        raise NotIsomorphic("color multisets differ")
    if n == 0:
        return ()
    if T1.is_uncolored() and T2.is_uncolored():
        A, B = T1, T2
    else:
        palette = color_palette(T1, T2)
        A, B = encode_colors(T1, palette), encode_colors(T2, palette)
    m = A.n
    group = aut_group(tri(A, B), suborbit_oracle, rng, config, trace)
    g = block_carrier(group, m, 0, 2)
    if g is None:
        raise NotIsomorphic("no automorphism of the Tri gadget moves block 1 onto block 3")
    sigma = tuple(g[x] - 2 * m for x in range(n))
    if sorted(sigma) != list(range(n)) or not is_isomorphism(T1, T2, sigma):
        raise WitnessCheckFailed("extracted map is not an isomorphism")
    return sigma


def aut_solver(
    suborbit_oracle: SuborbitOracle | None = None,
    rng: np.random.Generator | None = None,
    config: AutConfig | None = None,
) -> Callable[[Tournament], PermGroup]:
    """``aut_group`` as a one-argument solver, e.g. for ``aut_to_iso``."""

    def solve(T: Tournament) -> PermGroup:
        return aut_group(T, suborbit_oracle, rng, config)

    return solve


__all__ = [
    "AutConfig",
    "CaseNode",
    "CaseTrace",
    "aut_group",
    "aut_solver",
    "iso_tournaments",
    "verify_generators",
]
