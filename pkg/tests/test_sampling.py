import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from touriso.errors import BadParameter, RoundCapExceeded, SampleBudgetExceeded
from touriso.sampling import (
    CHARACTERISTIC,
    EMPTY,
    FAILED,
    EstimatorTable,
    SamplerConfig,
    TableSampler,
    draw_table,
    extract_characteristic,
    extract_round,
    find_cutoff,
    first_eps_prime,
    is_characteristic,
    multinomial_counts,
    normalize_probs,
    run_extraction,
    sample_size,
)


def mp_sample_size(i, eps_prime, c1, c2):
    mpmath.mp.dps = 50
    L = mpmath.log(1 / mpmath.mpf(eps_prime))
    a = int(mpmath.ceil(i**3 * c1 * L))
    b = int(mpmath.ceil(i**3 * c2 * L))
    return max(a, b * b)


# -- cut-off -------------------------------------------------------------------


def test_cutoff_single_value():
    assert find_cutoff({Fraction(1)}, 1) == 7


def test_cutoff_dense_cover_fails():
    Q = {Fraction(7, 8), Fraction(1)}
    Q |= {(j + s) / 8 for j in (7, 8) for s in (Fraction(1, 16), Fraction(-1, 16))}
    assert find_cutoff(Q, 1) is None


def test_cutoff_window_edges_are_closed():
    # (7 - 1/8)/8 lies on the window edge of l = 7
    assert find_cutoff({Fraction(55, 64)}, 1) == 8
    assert find_cutoff({Fraction(55, 64) - Fraction(1, 10**9)}, 1) == 7


def test_cutoff_range():
    for i in (1, 2, 3, 7, 16):
        assert find_cutoff(set(), i) == 6 * i + 1
    with pytest.raises(BadParameter):
        find_cutoff(set(), 0)


def test_free_window_exists_random_tables():
    """Any probability table leaves a window of half-width 1/4 free at every scale."""
    rng = np.random.default_rng(11)
    for _ in range(1000):
        k = int(rng.integers(1, 60))
        counts = rng.integers(1, 10**6, k)
        total = int(counts.sum())
        P = {Fraction(int(c), total) for c in counts}
        i = int(rng.integers(1, 9))
        assert find_cutoff(P, i, half_width=Fraction(1, 4)) is not None


@given(
    st.sets(st.fractions(min_value=0, max_value=1), max_size=12),
    st.sets(st.fractions(min_value=0, max_value=1), max_size=12),
    st.integers(1, 6),
)
def test_cutoff_monotone(Q, extra, i):
    big = Q | extra
    ell = find_cutoff(big, i)
    if ell is not None:
        small = find_cutoff(Q, i)
        assert small is not None and small <= ell


@given(st.lists(st.integers(1, 500), min_size=1, max_size=20), st.integers(1, 5))
def test_integer_cutoff_matches_rational(counts, i):
    from touriso.sampling import _cutoff_from_counts

    total = sum(counts)
    assert _cutoff_from_counts(counts, total, i) == find_cutoff({Fraction(c, total) for c in counts}, i)


# -- sample sizes --------------------------------------------------------------


@pytest.mark.parametrize("i,eps", [(1, math.exp(-1)), (2, 1 / 16), (4, 0.05 / 8), (8, 1e-6)])
def test_sample_size_matches_high_precision(i, eps):
    for c1, c2 in ((2**17, 2**18), (8, 16), (1, 1)):
        assert sample_size(i, eps, c1, c2) == mp_sample_size(i, eps, c1, c2)


def test_sample_size_faithful_values():
    assert sample_size(1, math.exp(-1), 2**17, 2**18) == 2**36
    L = mpmath.log(16)
    assert sample_size(2, Fraction(1, 16), 2**17, 2**18) == int(mpmath.ceil(8 * 2**18 * L)) ** 2


def test_sample_size_rejects_bad_input():
    with pytest.raises(BadParameter):
        sample_size(0, 0.1, 8, 16)
    with pytest.raises(BadParameter):
        sample_size(1, 0.5, 8, 16)


def test_first_eps_prime():
    assert first_eps_prime(0.05) == 0.05 / 8
    assert first_eps_prime(0.99) == 0.99 / 8 < math.exp(-1)


def test_config_validation():
    c = SamplerConfig(mode="faithful")
    assert (c.c1, c.c2) == (2**17, 2**18)
    assert SamplerConfig().c1 == 8 and SamplerConfig().c2 == 16
    with pytest.raises(BadParameter):
        SamplerConfig(mode="faithful", c1=8)
    with pytest.raises(BadParameter):
        SamplerConfig(epsilon=1.5)
    with pytest.raises(BadParameter):
        SamplerConfig(mode="fast")
    assert SamplerConfig(c1=4).with_epsilon(0.1).c1 == 4


# -- tables and samplers -------------------------------------------------------------


def test_estimator_table():
    t = EstimatorTable.from_draws("aabac")
    assert t.total == 5 and t.estimator("a") == Fraction(3, 5) and t.estimator("z") == 0
    assert sum(t.counts.values()) == t.total
    assert t.values() == {Fraction(3, 5), Fraction(1, 5)}


def test_normalize_probs():
    assert normalize_probs([0.5, 0.5]) == [0.5, 0.5]
    for bad in ([], [0.5, 0.6], [-0.1, 1.1], [float("nan"), 1.0]):
        with pytest.raises(BadParameter):
            normalize_probs(bad)


def test_multinomial_counts_large_totals(rng):
    c = multinomial_counts(np.array([0.5, 0.25, 0.25]), 2**70, rng)
    assert sum(c) == 2**70
    assert all(abs(x / 2**70 - p) < 1e-6 for x, p in zip(c, (0.5, 0.25, 0.25)))


def test_draw_counts_match_single_draws(rng):
    s = TableSampler([0.6, 0.3, 0.1])
    fast = draw_table(s, 20000, rng)

    class Slow:
        def draw(self, r):
            return s.draw(r)

    slow = draw_table(Slow(), 20000, rng)
    for m in range(3):
        assert abs(fast.estimator(m) - slow.estimator(m)) < 0.02


def test_level_sets_and_characteristic():
    s = TableSampler({"a": 0.4, "b": 0.4, "c": 0.1, "d": 0.1})
    assert s.level_sets() == [frozenset("ab"), frozenset("cd")]
    assert is_characteristic("ab", s) and is_characteristic("abcd", s)
    assert not is_characteristic("a", s) and not is_characteristic("abc", s)


# -- rounds and extraction ----------------------------------------------------------------


def test_constant_sampler():
    s = TableSampler({"x": 1.0})
    r = extract_round(s, 1, first_eps_prime(0.05), SamplerConfig(), np.random.default_rng(0))
    assert r.outcome == CHARACTERISTIC and r.subset == {"x"}


def test_uniform_pair_first_round_is_empty_then_full():
    s = TableSampler({"a": 0.5, "b": 0.5})
    log = []
    out = extract_characteristic(s, SamplerConfig(), np.random.default_rng(1), log)
    assert out == {"a", "b"}
    assert log[0].outcome in (EMPTY, FAILED)
    assert [r.i for r in log] == [2**k for k in range(len(log))]
    assert all(log[k + 1].eps_prime == log[k].eps_prime / 2 for k in range(len(log) - 1))


@pytest.mark.parametrize(
    "probs",
    [[0.5, 0.5], [0.4, 0.4, 0.1, 0.1], [0.5, 0.25, 0.25], [1 / 16] * 16, [1 / 5] * 5, [0.3, 0.3, 0.2, 0.1, 0.1]],
)
def test_outputs_are_characteristic(probs):
    s = TableSampler(probs)
    rng = np.random.default_rng(len(probs))
    good = 0
    for _ in range(60):
        out = extract_characteristic(s, SamplerConfig(), rng)
        assert out
        good += is_characteristic(out, s)
    assert good >= 54


def test_uniform_16_full_set():
    s = TableSampler([1 / 16] * 16)
    rng = np.random.default_rng(16)
    full = sum(extract_characteristic(s, SamplerConfig(), rng) == frozenset(range(16)) for _ in range(100))
    assert full >= 90


def test_unobserved_elements_never_output():
    s = TableSampler({"a": 0.5, "b": 0.5, "z": 0.0})
    rng = np.random.default_rng(3)
    for _ in range(50):
        assert "z" not in extract_characteristic(s, SamplerConfig(), rng)


@pytest.mark.parametrize("k", [2, 4, 8, 16])
def test_total_samples_at_most_twice_last_round(k):
    rep = run_extraction(TableSampler([1 / k] * k), SamplerConfig(), np.random.default_rng(k))
    assert rep.samples <= 2 * rep.rounds[-1]["T_drawn"]
    assert set(rep.rounds[0]) == {"i", "eps_prime", "T_drawn", "outcome", "cutoff"}


def test_round_cap():
    s = TableSampler({"a": 0.5, "b": 0.5})
    with pytest.raises(RoundCapExceeded):
        extract_characteristic(s, SamplerConfig(max_doubling_rounds=1), np.random.default_rng(0))


def test_sample_budget():
    s = TableSampler({"a": 1.0})
    with pytest.raises(SampleBudgetExceeded):
        extract_characteristic(s, SamplerConfig(mode="faithful", max_samples_per_round=10**6), np.random.default_rng(0))


def test_faithful_round_runs_with_counts():
    s = TableSampler([0.5, 0.25, 0.25])
    out = extract_characteristic(s, SamplerConfig(mode="faithful"), np.random.default_rng(0))
    assert is_characteristic(out, s)


def test_extraction_is_seed_deterministic():
    s = TableSampler([0.4, 0.4, 0.1, 0.1])
    a = run_extraction(s, SamplerConfig(), np.random.default_rng(9)).to_dict()
    b = run_extraction(s, SamplerConfig(), np.random.default_rng(9)).to_dict()
    assert a == b
