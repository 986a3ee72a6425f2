"""Invariant automorphism sampling and invariant suborbits.

``sample_automorphism`` runs the individualize-until-asymmetric sampler
once, asking only the oracle stack. ``automorphism_law`` computes the exact
output distribution of that sampler by walking its random choices as a
Markov chain on the set of individualized vertices (the oracle answers and
the returned automorphism depend only on that set). Drawing from the law is
distributionally identical to running the sampler, and makes the large
sample counts of the characteristic-subset extraction affordable.

``invariant_suborbits`` turns pair samples ``(v, phi(v))`` into a partition
and a certificate set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .core import IndividualizationTrace, Tournament, VertexPartition, is_automorphism
from .errors import (
    BadParameter,
    CertificateInvalid,
    NotSymmetric,
    OracleInconsistent,
    WitnessCheckFailed,
)
from .oracles import OracleStack
from .perm import Perm, PermGroup, compose, identity, inverse, support
from .sampling import SamplerConfig, extract_characteristic, multinomial_counts

Pair = tuple[int, int]


def _trace(T: Tournament, S) -> IndividualizationTrace:
    return IndividualizationTrace(T, tuple(sorted(S)))


def _terminal_choices(T: Tournament, stack: OracleStack, prev: IndividualizationTrace, v: int) -> tuple[list[int], Tournament]:
    """``V'''`` for the last symmetric trace ``prev`` and the final pivot ``v``."""
    current = prev.extend(v).tournament()
    same = [x for x in prev.same_class(v) if x != v]
    v2 = [x for x in same if stack.o2(prev.extend(x).tournament())]
    if not v2:
        raise OracleInconsistent("no other vertex of the pivot's class individualizes to an asymmetric tournament")
    v3 = [x for x in v2 if stack.o3_decide(current, prev.extend(x).tournament())]
    if not v3:
        raise OracleInconsistent("no partner vertex yields an isomorphic individualization")
    return v3, current


def _finish(T: Tournament, stack: OracleStack, prev: IndividualizationTrace, current: Tournament, u: int) -> Perm:
    phi = stack.o3_search(current, prev.extend(u).tournament())
    if phi is None or not is_automorphism(T, phi):
        raise WitnessCheckFailed("sampled map is not an automorphism")
    return phi


def sample_automorphism(T: Tournament, stack: OracleStack, rng: np.random.Generator) -> Perm:
    """One non-identity automorphism of ``T`` from the invariant sampler."""
    trace = IndividualizationTrace(T)
    prev = None
    v = -1
    while not stack.o2(trace.tournament()):
        cands = trace.nonsingleton_vertices()
        if not cands:
            raise OracleInconsistent("oracle calls a discretely colored tournament symmetric")
        v = cands[int(rng.integers(len(cands)))]
        prev, trace = trace, trace.extend(v)
    if prev is None:
        raise NotSymmetric("input tournament is asymmetric")
    v3, current = _terminal_choices(T, stack, prev, v)
    u = v3[int(rng.integers(len(v3)))]
    return _finish(T, stack, prev, current, u)


def pair_sampler(T: Tournament, stack: OracleStack, rng: np.random.Generator) -> tuple[Pair, Perm]:
    """One pair ``(v, phi(v))`` with ``v`` uniform in the support of a sampled ``phi``."""
    phi = sample_automorphism(T, stack, rng)
    supp = support(phi)
    v = supp[int(rng.integers(len(supp)))]
    return (v, phi[v]), phi


def automorphism_law(T: Tournament, stack: OracleStack) -> dict[Perm, Fraction]:
    """Exact output distribution of ``sample_automorphism`` on ``T``.

    States are sets ``S`` of individualized vertices. If ``S`` is symmetric
    and ``S + v`` is not, the stabilizer ``G_S`` of ``S`` acts regularly on
    the orbit of ``v``; the partners ``u`` and the maps ``v -> u`` therefore
    run through ``G_S`` minus the identity, whatever the terminal pivot. That
    set is computed once per ``S``: the o3 witnesses found so far are composed
    to reach further partners, and o3 is asked only about the rest.
    """
    asym: dict[frozenset, bool] = {}

    def is_asym(S: frozenset) -> bool:
        hit = asym.get(S)
        if hit is None:
            hit = stack.o2(_trace(T, S).tournament())
            asym[S] = hit
        return hit

    if is_asym(frozenset()):
        raise NotSymmetric("input tournament is asymmetric")
    memo: dict[frozenset, dict[Perm, Fraction]] = {}
    terminal: dict[frozenset, dict[Perm, Fraction]] = {}

    def finish(S: frozenset, v: int) -> dict[Perm, Fraction]:
        hit = terminal.get(S)
        if hit is not None:
            return hit
        prev = _trace(T, S)
        current = prev.extend(v).tournament()
        partners = [x for x in prev.same_class(v) if x != v and is_asym(S | {x})]
        if not partners:
            raise OracleInconsistent("no other vertex of the pivot's class individualizes to an asymmetric tournament")
        reach: dict[int, Perm] = {v: identity(T.n)}
        gens: list[Perm] = []
        for x in partners:
            if x in reach or not stack.o3_decide(current, prev.extend(x).tournament()):
                continue
            gens.append(_finish(T, stack, prev, current, x))
            queue = list(reach)
            while queue:
                y = queue.pop()
                for s in gens:
                    z = s[y]
                    if z not in reach:
                        reach[z] = compose(s, reach[y])
                        queue.append(z)
        if len(reach) == 1:
            raise OracleInconsistent("no partner vertex yields an isomorphic individualization")
        q = Fraction(1, len(reach) - 1)
        hit = {reach[u]: q for u in sorted(reach) if u != v}
        terminal[S] = hit
        return hit

    def walk(S: frozenset) -> dict[Perm, Fraction]:
        hit = memo.get(S)
        if hit is not None:
            return hit
        cands = _trace(T, S).nonsingleton_vertices()
        if not cands:
            raise OracleInconsistent("oracle calls a discretely colored tournament symmetric")
        p = Fraction(1, len(cands))
        out: dict[Perm, Fraction] = {}
        for v in cands:
            S2 = S | {v}
            sub = finish(S, v) if is_asym(S2) else walk(S2)
            for phi, q in sub.items():
                out[phi] = out.get(phi, 0) + p * q
        memo[S] = out
        return out

    return walk(frozenset())


def pair_law(aut_law: dict[Perm, Fraction]) -> tuple[dict[Pair, Fraction], dict[Pair, Perm]]:
    """Distribution of ``(v, phi(v))`` plus one automorphism realizing each pair."""
    law: dict[Pair, Fraction] = {}
    witness: dict[Pair, Perm] = {}
    for phi in sorted(aut_law):
        q = aut_law[phi]
        supp = support(phi)
        share = q / len(supp)
        for v in supp:
            pair = (v, phi[v])
            law[pair] = law.get(pair, 0) + share
            witness.setdefault(pair, phi)
    return law, witness


def _mask_image(mask: int, g: Perm) -> int:
    out = 0
    while mask:
        low = mask & -mask
        out |= 1 << g[low.bit_length() - 1]
        mask ^= low
    return out


def _mask_members(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


class _SetOrbits:
    """Representatives of vertex sets (bit masks) under a growing automorphism group.

    Each set explored so far points to a parent set and the generator that
    carries the parent onto it; following parents leads to a representative.
    Orbits explored before the group grew are not merged afterwards, which
    costs some duplicate work but never correctness.
    """

    def __init__(self, group: PermGroup):
        self.group = group
        self.parent: dict[int, tuple[int, int]] = {}
        self._cache: dict[int, list[list[int]]] = {}

    def canon(self, mask: int) -> tuple[int, Perm]:
        """``(rep, h)`` with ``h`` in the group and ``h(rep) == mask``."""
        if mask not in self.parent:
            self._explore(mask)
        gens = self.group.generators
        steps = []
        x = mask
        while True:
            p, k = self.parent[x]
            if k < 0:
                break
            steps.append(k)
            x = p
        h = identity(self.group.degree)
        for k in reversed(steps):
            h = compose(gens[k], h)
        return x, h

    def _tables(self, k: int) -> list[list[int]]:
        """Per-byte image tables of generator ``k``: OR of lookups gives the set image."""
        tabs = self._cache.get(k)
        if tabs is None:
            g = self.group.generators[k]
            n = self.group.degree
            tabs = []
            for b in range((n + 7) // 8):
                row = [0] * 256
                for byte in range(1, 256):
                    low = byte & -byte
                    x = 8 * b + low.bit_length() - 1
                    row[byte] = row[byte ^ low] | (1 << g[x] if x < n else 0)
                tabs.append(row)
            self._cache[k] = tabs
        return tabs

    def _explore(self, mask: int) -> None:
        tables = [self._tables(k) for k in range(len(self.group.generators))]
        parent = self.parent
        parent[mask] = (mask, -1)
        queue = [mask]
        while queue:
            x = queue.pop()
            chunks = []
            m = x
            while m:
                chunks.append(m & 255)
                m >>= 8
            for k, tabs in enumerate(tables):
                y = 0
                for b, c in enumerate(chunks):
                    if c:
                        y |= tabs[b][c]
                if y not in parent:
                    parent[y] = (x, k)
                    queue.append(y)


class GroupWitness:
    """Automorphisms mapping ``v`` to ``w``, read off a group of verified automorphisms."""

    def __init__(self, group: PermGroup):
        self.group = group
        self._orbits: dict[int, dict[int, Perm]] = {}

    def __getitem__(self, pair: Pair) -> Perm:
        v, w = pair
        orb = self._orbits.get(v)
        if orb is None:
            orb = {v: identity(self.group.degree)}
            queue = [v]
            while queue:
                y = queue.pop(0)
                for s in self.group.generators:
                    z = s[y]
                    if z not in orb:
                        orb[z] = compose(s, orb[y])
                        queue.append(z)
            self._orbits[v] = orb
        return orb[w]


def _transport(law: dict[Pair, Fraction], h: Perm) -> dict[Pair, Fraction]:
    return {(h[a], h[b]): q for (a, b), q in law.items()}


def equivariant_pair_law(T: Tournament, stack: OracleStack, seed_draws: int = 8) -> tuple[dict[Pair, Fraction], PermGroup]:
    """Exact law of ``pair_sampler`` on ``T`` and a group of verified automorphisms.

    Same chain as ``automorphism_law``, but states are reduced modulo the
    group ``H`` generated by the automorphisms found so far: for ``h`` in
    ``Aut(T)`` the law started from ``h(S)`` is the ``h``-image of the law
    started from ``S``. ``H`` is seeded with a few literal sampler runs (fixed
    internal seed); it affects running time only, never the law.
    """
    n = T.n
    stack_asym: dict[int, bool] = {}

    def trace(mask: int) -> IndividualizationTrace:
        return IndividualizationTrace(T, tuple(_mask_members(mask)))

    def is_asym(mask: int) -> bool:
        hit = stack_asym.get(mask)
        if hit is None:
            hit = stack.o2(trace(mask).tournament())
            stack_asym[mask] = hit
        return hit

    if is_asym(0):
        raise NotSymmetric("input tournament is asymmetric")
    H = PermGroup(n, [])
    seed_rng = np.random.default_rng(0)
    for _ in range(seed_draws):
        H.add_generator(sample_automorphism(T, stack, seed_rng))
    orbits = _SetOrbits(H)
    memo: dict[int, dict[Pair, Fraction]] = {}
    terminal: dict[int, dict[Pair, Fraction]] = {}

    def finish(S: int, v: int) -> dict[Pair, Fraction]:
        hit = terminal.get(S)
        if hit is not None:
            return hit
        prev = trace(S)
        current = prev.extend(v).tournament()
        partners = [x for x in prev.same_class(v) if x != v and is_asym(S | (1 << x))]
        if not partners:
            raise OracleInconsistent("no other vertex of the pivot's class individualizes to an asymmetric tournament")
        reach: dict[int, Perm] = {v: identity(n)}
        gens: list[Perm] = []
        for x in partners:
            if x in reach or not stack.o3_decide(current, prev.extend(x).tournament()):
                continue
            g = _finish(T, stack, prev, current, x)
            gens.append(g)
            H.add_generator(g)
            queue = list(reach)
            while queue:
                y = queue.pop()
                for s in gens:
                    z = s[y]
                    if z not in reach:
                        reach[z] = compose(s, reach[y])
                        queue.append(z)
        if len(reach) == 1:
            raise OracleInconsistent("no partner vertex yields an isomorphic individualization")
        q = Fraction(1, len(reach) - 1)
        hit = {}
        for u in sorted(reach):
            if u == v:
                continue
            phi = reach[u]
            supp = support(phi)
            share = q / len(supp)
            for x in supp:
                pair = (x, phi[x])
                hit[pair] = hit.get(pair, 0) + share
        terminal[S] = hit
        return hit

    def walk(S: int) -> dict[Pair, Fraction]:
        hit = memo.get(S)
        if hit is not None:
            return hit
        cands = trace(S).nonsingleton_vertices()
        if not cands:
            raise OracleInconsistent("oracle calls a discretely colored tournament symmetric")
        acc: dict[Pair, Fraction] = {}
        for v in cands:
            rep, h = orbits.canon(S | (1 << v))
            if is_asym(rep):
                sub = finish(S, v)
            else:
                sub = _transport(walk(rep), h)
            for pair, q in sub.items():
                acc[pair] = acc.get(pair, 0) + q
        p = Fraction(1, len(cands))
        out = {pair: q * p for pair, q in acc.items()}
        memo[S] = out
        return out

    return walk(0), H


class PairSampler:
    """Sampler over ordered pairs in a common orbit, retaining automorphisms.

    ``mode="law"`` draws from the exact distribution of the literal sampler
    (and supports bulk ``draw_counts``); ``mode="literal"`` runs the sampler
    for every draw.
    """

    def __init__(self, T: Tournament, stack: OracleStack, mode: str = "law"):
        if mode not in ("law", "literal"):
            raise BadParameter(f"unknown pair sampler mode {mode!r}")
        self.T = T
        self.stack = stack
        self.mode = mode
        self.retained: dict[Pair, Perm] = {}
        self.samples = 0
        if mode == "law":
            law, group = equivariant_pair_law(T, stack)
            self._witness = GroupWitness(group)
            self.elements = sorted(law)
            self.law = law
            self._p = np.array([float(law[m]) for m in self.elements])
            self.draw_counts = self._draw_counts

    def draw(self, rng: np.random.Generator) -> Pair:
        self.samples += 1
        if self.mode == "literal":
            pair, phi = pair_sampler(self.T, self.stack, rng)
            self.retained.setdefault(pair, phi)
            return pair
        pair = self.elements[int(rng.choice(len(self.elements), p=self._p))]
        self.retained.setdefault(pair, self._witness[pair])
        return pair

    def _draw_counts(self, T: int, rng: np.random.Generator) -> dict[Pair, int]:
        self.samples += T
        out = {}
        for pair, c in zip(self.elements, multinomial_counts(self._p, T, rng)):
            if c:
                out[pair] = c
                self.retained.setdefault(pair, self._witness[pair])
        return out


# --------------------------------------------------------------------------
# suborbits
# --------------------------------------------------------------------------

Step = tuple[int, bool]


@dataclass
class SuborbitResult:
    """Partition ``pi`` with certificates.

    ``recipes[x]`` composes certificates (``(index, inverted)`` steps, applied
    left to right) into an automorphism taking the root of ``x``'s class to
    ``x``; roots are the smallest vertex of each class.
    """

    pi: VertexPartition
    certificates: list[Perm]
    recipes: dict[int, list[Step]] = field(default_factory=dict)
    epsilon: float | None = None
    samples: int = 0
    rounds: list[dict] = field(default_factory=list)
    oracle_calls: dict[str, int] = field(default_factory=dict)

    def _root_map(self, x: int) -> Perm:
        n = self.pi.n
        g = identity(n)
        for idx, inv in self.recipes.get(x, []):
            c = self.certificates[idx]
            g = compose(inverse(c) if inv else c, g)
        return g

    def recipe(self, v: int, w: int) -> list[Step]:
        """Steps composing to an automorphism mapping ``v`` to ``w``."""
        if self.pi.class_of(v) != self.pi.class_of(w):
            raise BadParameter(f"{v} and {w} lie in different classes")
        back = [(idx, not inv) for idx, inv in reversed(self.recipes.get(v, []))]
        return back + list(self.recipes.get(w, []))

    def certificate(self, v: int, w: int) -> Perm:
        if self.pi.class_of(v) != self.pi.class_of(w):
            raise BadParameter(f"{v} and {w} lie in different classes")
        return compose(self._root_map(w), inverse(self._root_map(v)))

    def cert_index(self) -> dict[Pair, list[Step]]:
        return {(v, w): self.recipe(v, w) for part in self.pi for v in part for w in part if v != w}

    def verify(self, T: Tournament) -> bool:
        if not all(is_automorphism(T, c) for c in self.certificates):
            return False
        for part in self.pi:
            root = part[0]
            for x in part:
                if self._root_map(x)[root] != x:
                    return False
        return True

    def to_json(self) -> dict[str, Any]:
        return {
            "partition": self.pi.as_lists(),
            "certificates": [list(c) for c in self.certificates],
            "epsilon": self.epsilon,
            "samples": self.samples,
            "rounds": self.rounds,
            "oracle_calls": self.oracle_calls,
        }


def _discrete_result(T: Tournament, stack: OracleStack, eps) -> SuborbitResult:
    return SuborbitResult(
        VertexPartition.discrete(T.n),
        [identity(T.n)],
        {},
        eps,
        0,
        [],
        stack.counts(),
    )


def closure_with_recipes(n: int, pairs, witness) -> tuple[VertexPartition, list[Perm], dict[int, list[Step]]]:
    """Equivalence closure of ``pairs`` with certificate recipes along BFS trees."""
    adj: dict[int, list[tuple[int, Perm, bool]]] = {}
    certs: list[Perm] = []
    index: dict[Perm, int] = {}
    for v, w in sorted(pairs):
        phi = witness[(v, w)]
        if phi not in index:
            index[phi] = len(certs)
            certs.append(phi)
        adj.setdefault(v, []).append((w, phi, False))
        adj.setdefault(w, []).append((v, phi, True))
    seen: dict[int, list[Step]] = {}
    parts = []
    for r in range(n):
        if r in seen:
            continue
        seen[r] = []
        part = [r]
        queue = [r]
        while queue:
            x = queue.pop(0)
            for y, phi, inv in adj.get(x, []):
                if y not in seen:
                    seen[y] = seen[x] + [(index[phi], inv)]
                    part.append(y)
                    queue.append(y)
        parts.append(part)
    recipes = {x: steps for x, steps in seen.items() if steps}
    return VertexPartition(parts, n), certs, recipes


def invariant_suborbits(
    T: Tournament,
    stack: OracleStack,
    c: int = 1,
    config: SamplerConfig | None = None,
    rng: np.random.Generator | None = None,
    *,
    epsilon: float | None = None,
    mode: str = "law",
    retries: int = 3,
) -> SuborbitResult:
    """Invariant suborbits and certificates of ``T`` (discrete if asymmetric).

    The error target is ``|T|^-c`` unless ``epsilon`` is given.
    """
    n = T.n
    rng = rng if rng is not None else np.random.default_rng()
    if n <= 1 or stack.o2(T):
        return _discrete_result(T, stack, epsilon)
    eps = epsilon if epsilon is not None else float(n) ** (-c)
    cfg = (config or SamplerConfig()).with_epsilon(eps)
    last_error = None
    streams = rng.spawn(retries + 1)
    for attempt in range(retries + 1):
        sampler = PairSampler(T, stack, mode)
        log = []
        subset = extract_characteristic(sampler, cfg, streams[attempt], log)
        pi, certs, recipes = closure_with_recipes(n, subset, sampler.retained)
        res = SuborbitResult(
            pi,
            certs,
            recipes,
            eps,
            sum(r.samples for r in log),
            [r.to_dict() for r in log],
            stack.counts(),
        )
        if res.verify(T):
            return res
        last_error = CertificateInvalid(f"certificate verification failed on attempt {attempt + 1}")
    raise last_error


class SuborbitOracle:
    """Callable ``(T, rng) -> SuborbitResult`` bound to one oracle stack and configuration."""

    def __init__(
        self,
        stack: OracleStack | None = None,
        c: int = 1,
        config: SamplerConfig | None = None,
        epsilon: float | None = None,
        mode: str = "law",
        retries: int = 3,
    ):
        self.stack = stack if stack is not None else OracleStack()
        self.c = c
        self.config = config or SamplerConfig()
        self.epsilon = epsilon
        self.mode = mode
        self.retries = retries
        self.calls = 0
        self.samples = 0

    def __call__(self, T: Tournament, rng: np.random.Generator, epsilon: float | None = None) -> SuborbitResult:
        self.calls += 1
        eps = epsilon if epsilon is not None else self.epsilon
        res = invariant_suborbits(
            T,
            self.stack,
            self.c,
            self.config,
            rng,
            epsilon=eps,
            mode=self.mode,
            retries=self.retries,
        )
        self.samples += res.samples
        return res
