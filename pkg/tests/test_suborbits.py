from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from conftest import enum_aut, orbit_labels, perm_preserves
from touriso.core import circulant, cycle3, lex_product, paley, random_tournament, transitive, tri
from touriso.errors import NotSymmetric, OracleInconsistent
from touriso.oracles import AsymmetryOracle, OracleStack, brute_aut
from touriso.perm import compose, identity
from touriso.sampling import SamplerConfig
from touriso.suborbits import (
    GroupWitness,
    PairSampler,
    SuborbitOracle,
    automorphism_law,
    closure_with_recipes,
    equivariant_pair_law,
    invariant_suborbits,
    pair_law,
    pair_sampler,
    sample_automorphism,
)

C3 = cycle3()
L33 = lex_product(C3, C3)


class AlwaysSymmetric(AsymmetryOracle):
    def _answer(self, T):
        return False


def is_invariant(T, parts):
    for g in brute_aut(T).elements():
        images = {frozenset(g[v] for v in p) for p in parts}
        if images != {frozenset(p) for p in parts}:
            return False
    return True


def refines_orbits(T, parts):
    lab = orbit_labels(T.n, brute_aut(T).generators)
    return all(len({lab[v] for v in p}) == 1 for p in parts)


# -- invariant sampler -------------------------------------------------------------


def test_c3_rotation_frequencies():
    st = OracleStack()
    rng = np.random.default_rng(0)
    counts = Counter(sample_automorphism(C3, st, rng) for _ in range(400))
    assert set(counts) == {(1, 2, 0), (2, 0, 1)}
    for c in counts.values():
        assert 0.4 <= c / 400 <= 0.6


def test_lex_draws_are_automorphisms():
    st = OracleStack()
    rng = np.random.default_rng(1)
    for _ in range(40):
        phi = sample_automorphism(L33, st, rng)
        assert phi != identity(9) and perm_preserves(L33, phi)


def test_asymmetric_input_raises():
    with pytest.raises(NotSymmetric):
        sample_automorphism(transitive(4), OracleStack(), np.random.default_rng(0))


def test_lying_oracle_detected():
    with pytest.raises(OracleInconsistent):
        sample_automorphism(C3, OracleStack(AlwaysSymmetric()), np.random.default_rng(0))


def test_c3_pairs_uniform():
    st = OracleStack()
    rng = np.random.default_rng(2)
    counts = Counter(pair_sampler(C3, st, rng)[0] for _ in range(600))
    assert len(counts) == 6
    for c in counts.values():
        assert abs(c / 600 - 1 / 6) <= 0.05


def test_lex_pairs_lie_in_pair_orbits():
    st = OracleStack()
    rng = np.random.default_rng(3)
    auts = enum_aut(L33)
    for _ in range(40):
        (v, w), phi = pair_sampler(L33, st, rng)
        assert v != w and phi[v] == w
        assert any(g[v] == w for g in auts)


# -- exact laws ---------------------------------------------------------------


@pytest.mark.parametrize("T", [C3, L33, paley(7), circulant(9), tri(C3, C3)], ids=["c3", "lex", "p7", "circ9", "tri"])
def test_equivariant_law_equals_reference(T):
    ref, _ = pair_law(automorphism_law(T, OracleStack()))
    law, H = equivariant_pair_law(T, OracleStack())
    assert law == ref
    assert sum(law.values()) == 1
    auts = set(enum_aut(T)) if T.n <= 9 else set(brute_aut(T).elements())
    assert all(g in auts for g in H.generators)


def test_law_is_aut_invariant():
    for T in (L33, paley(7), circulant(9)):
        law, _ = equivariant_pair_law(T, OracleStack())
        for g in brute_aut(T).generators:
            for (v, w), p in law.items():
                assert law.get((g[v], g[w]), 0) == p


def test_literal_matches_law_on_lex():
    law, _ = equivariant_pair_law(L33, OracleStack())
    p_in = float(sum(p for (v, w), p in law.items() if v // 3 == w // 3))
    st = OracleStack()
    rng = np.random.default_rng(4)
    hits = sum(v // 3 == w // 3 for (v, w), _ in (pair_sampler(L33, st, rng) for _ in range(400)))
    assert abs(hits / 400 - p_in) < 0.08


def test_automorphism_law_c3():
    law = automorphism_law(C3, OracleStack())
    assert law == {(1, 2, 0): Fraction(1, 2), (2, 0, 1): Fraction(1, 2)}


def test_group_witness():
    G = brute_aut(paley(7))
    W = GroupWitness(G)
    for v in range(7):
        for w in range(7):
            g = W[(v, w)]
            assert g[v] == w and G.contains(g)


def test_pair_sampler_modes():
    st = OracleStack()
    rng = np.random.default_rng(5)
    for mode in ("law", "literal"):
        s = PairSampler(C3, st, mode)
        for _ in range(10):
            v, w = s.draw(rng)
            assert s.retained[(v, w)][v] == w
    s = PairSampler(C3, st, "law")
    counts = s.draw_counts(6000, rng)
    assert sum(counts.values()) == 6000 and s.samples == 6000
    with pytest.raises(Exception):
        PairSampler(C3, st, "guess")


# -- suborbits ------------------------------------------------------------------


def test_asymmetric_gives_discrete():
    res = invariant_suborbits(transitive(5), OracleStack(), rng=np.random.default_rng(0))
    assert res.pi.is_discrete() and res.certificates == [identity(5)]


def test_c3_single_class():
    res = invariant_suborbits(C3, OracleStack(), rng=np.random.default_rng(0))
    assert res.pi.as_lists() == [[0, 1, 2]]
    assert brute_aut(C3).order() == len({compose(a, b) for a in res.certificates for b in res.certificates} | set(res.certificates))
    assert res.verify(C3)


def test_lex_refines_and_is_invariant():
    st = OracleStack()
    rng = np.random.default_rng(6)
    runs = 20
    good = 0
    for _ in range(runs):
        res = invariant_suborbits(L33, st, rng=rng)
        assert res.verify(L33)
        parts = res.pi.as_lists()
        good += refines_orbits(L33, parts) and is_invariant(L33, parts)
    assert good >= 0.95 * runs


def test_certificate_recipes_map_pairs():
    res = invariant_suborbits(paley(7), OracleStack(), rng=np.random.default_rng(7))
    idx = res.cert_index()
    for (v, w), steps in idx.items():
        g = identity(7)
        for k, inv in steps:
            c = res.certificates[k]
            if inv:
                c = tuple(np.argsort(c).tolist())
            g = compose(c, g)
        assert g[v] == w and perm_preserves(paley(7), g)
        assert res.certificate(v, w)[v] == w
    assert set(res.to_json()) == {"partition", "certificates", "epsilon", "samples", "rounds", "oracle_calls"}


def test_random_symmetric_tournaments():
    rng = np.random.default_rng(8)
    done = 0
    while done < 10:
        T = random_tournament(int(rng.integers(5, 10)), int(rng.integers(1 << 30)))
        if brute_aut(T).order() == 1:
            continue
        res = invariant_suborbits(T, OracleStack(), rng=rng)
        assert res.verify(T)
        assert refines_orbits(T, res.pi.as_lists())
        assert not res.pi.is_discrete()
        done += 1


def test_closure_with_recipes_symmetric():
    W = GroupWitness(brute_aut(C3))
    pi, certs, recipes = closure_with_recipes(4, [(0, 1), (2, 1)], W)
    assert pi.as_lists() == [[0, 1, 2], [3]]


def test_suborbit_oracle_counts():
    oracle = SuborbitOracle(OracleStack(), config=SamplerConfig())
    oracle(C3, np.random.default_rng(0))
    oracle(transitive(3), np.random.default_rng(0))
    assert oracle.calls == 2 and oracle.samples > 0


def test_suborbits_seed_deterministic():
    a = invariant_suborbits(L33, OracleStack(), rng=np.random.default_rng(42)).to_json()
    b = invariant_suborbits(L33, OracleStack(), rng=np.random.default_rng(42)).to_json()
    assert a == b
