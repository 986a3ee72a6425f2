import itertools
import json

import numpy as np
import pytest

from conftest import all_tournaments, enum_aut, enum_iso
from touriso.autgroup import AutConfig, CaseTrace, aut_group, aut_solver, iso_tournaments, verify_generators
from touriso.core import (
    apply_perm,
    circulant,
    cycle3,
    lex_product,
    new_tournament,
    paley,
    random_tournament,
    transitive,
)
from touriso.errors import NotIsomorphic, RecursionLimit
from touriso.oracles import aut_to_iso, brute_aut
from touriso.perm import PermGroup, cycle_perm, is_odd_order, is_solvable

C3 = cycle3()
CASES = {"asymmetric", "0", "1", "2", "3a", "3b"}


def c3_plus_source():
    """C3 with a fourth vertex beating all three; orbits of sizes 3 and 1."""
    edges = [(0, 1), (1, 2), (2, 0), (3, 0), (3, 1), (3, 2)]
    return new_tournament(4, edges)


def run(T, seed=0, **kw):
    trace = CaseTrace()
    G = aut_group(T, rng=np.random.default_rng(seed), config=AutConfig(**kw), trace=trace)
    return G, trace


def test_transitive_trivial():
    G, trace = run(transitive(6))
    assert G.order() == 1
    assert trace.root.case == "asymmetric"


def test_c3_case1():
    G, trace = run(C3)
    assert G.order() == 3
    assert trace.root.case == "1"


def test_lex_case3b():
    G, trace = run(lex_product(C3, C3))
    assert G.order() == 81
    assert trace.root.case == "3b"


def test_paley7():
    G, _ = run(paley(7))
    assert G.order() == 21


def test_case0_and_case2():
    T = c3_plus_source()
    G, trace = run(T)
    assert G.order() == 3
    assert trace.root.case == "2"
    assert trace.root.children[0].case == "0"
    colored = paley(7).recolor([0, 1, 1, 0, 1, 0, 0])
    G, trace = run(colored)
    assert trace.root.case == "0"
    assert G.order() == len(enum_aut(colored))


@pytest.mark.parametrize(
    "T",
    [circulant(9), circulant(11), paley(11), lex_product(transitive(3), C3), lex_product(C3, transitive(3))],
    ids=["circ9", "circ11", "p11", "lexT3C3", "lexC3T3"],
)
def test_families_match_brute(T):
    G, trace = run(T, seed=1)
    B = brute_aut(T)
    assert G.order() == B.order()
    assert all(B.contains(g) for g in G.generators)
    assert set(trace.case_counts()) <= CASES


@pytest.mark.parametrize("n", range(1, 6))
def test_exhaustive_small(n):
    seen = []
    for T in all_tournaments(n):
        if any(enum_iso(T, S) is not None for S in seen):
            continue
        seen.append(T)
        G, _ = run(T, seed=n)
        assert verify_generators(T, G)
        assert G.order() == len(enum_aut(T))


def test_random_soundness_and_structure():
    rng = np.random.default_rng(4)
    for _ in range(15):
        n = int(rng.integers(3, 11))
        T = random_tournament(n, int(rng.integers(1 << 30)))
        G, trace = run(T, seed=int(rng.integers(1 << 30)), check_solvable=True)
        B = brute_aut(T)
        assert verify_generators(T, G)
        assert all(B.contains(g) for g in G.generators)
        assert is_odd_order(G) and is_solvable(G)
        assert trace.node_count() <= 10 * n**3


def test_verify_generators_examples():
    assert not verify_generators(C3, PermGroup(3, [cycle_perm(3, (0, 1))]))
    assert verify_generators(paley(7), brute_aut(paley(7)))


def test_memoize_and_depth_guard():
    G, _ = run(lex_product(C3, C3), memoize=True)
    assert G.order() == 81
    with pytest.raises(RecursionLimit):
        run(C3, max_depth=0)


def test_trace_json():
    _, trace = run(lex_product(C3, C3))
    data = json.loads(json.dumps(trace.to_json()))
    assert data["nodes"] == trace.node_count() and data["tree"]["case"] == "3b"
    assert set(data["tree"]) == {"case", "n", "color_sizes", "pi_sizes", "oracle_calls", "children"}


def test_seed_determinism():
    a, _ = run(paley(7), seed=3)
    b, _ = run(paley(7), seed=3)
    assert a.generators == b.generators


# -- isomorphism -----------------------------------------------------------------------


def test_iso_c3():
    s = iso_tournaments(C3, C3, rng=np.random.default_rng(0))
    assert apply_perm(C3, s) == C3


def test_iso_permuted_copies():
    rng = np.random.default_rng(5)
    ok = 0
    for _ in range(20):
        n = int(rng.integers(3, 13))
        T = random_tournament(n, int(rng.integers(1 << 30)))
        p = rng.permutation(n)
        U = apply_perm(T, p)
        try:
            s = iso_tournaments(T, U, rng=rng)
        except NotIsomorphic:
            continue
        assert apply_perm(T, s) == U
        ok += 1
    assert ok >= 19


def test_iso_colored():
    base = random_tournament(7, 3)
    T = base.recolor([0, 1, 1, 0, 1, 0, 0])
    p = np.random.default_rng(1).permutation(7)
    U = apply_perm(T, p)
    s = iso_tournaments(T, U, rng=np.random.default_rng(2))
    assert apply_perm(T, s) == U
    other = base.recolor([1, 0, 1, 0, 1, 0, 0])
    assert enum_iso(T, other) is None
    with pytest.raises(NotIsomorphic):
        iso_tournaments(T, other, rng=np.random.default_rng(2))


def test_non_isomorphic_five_vertex_pairs():
    reps = []
    for T in all_tournaments(5):
        if all(enum_iso(T, S) is None for S in reps):
            reps.append(T)
    assert len(reps) == 12
    rng = np.random.default_rng(6)
    pairs = list(itertools.combinations(range(12), 2))
    # same score sequence pairs are the hard ones; keep all of them plus a few others
    score = [tuple(sorted(T.adj.sum(axis=1).tolist())) for T in reps]
    hard = [(a, b) for a, b in pairs if score[a] == score[b]]
    easy = [pairs[k] for k in rng.choice(len(pairs), 6, replace=False)]
    for a, b in hard + easy:
        with pytest.raises(NotIsomorphic):
            iso_tournaments(reps[a], reps[b], rng=rng)


def test_aut_solver_plugs_into_aut_to_iso():
    T = random_tournament(7, 3)
    p = np.random.default_rng(0).permutation(7)
    s = aut_to_iso(T, apply_perm(T, p), aut_solver(rng=np.random.default_rng(0)))
    assert apply_perm(T, s) == apply_perm(T, p)
