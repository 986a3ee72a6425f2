"""Extracting a characteristic subset from a black-box sampler.

A round at scale ``i`` draws ``T`` samples, finds a cut-off ``l`` in
``{6i+1, ..., 8i}`` whose window around ``l / (8 i^2)`` contains no
estimator value, and keeps every element whose estimator exceeds
``l / (8 i^2)``. The wrapper doubles ``i`` and halves the per-round error
until a round produces a non-empty set.

All threshold comparisons are done on integers: with ``#(m) = N(m)/T`` the
test ``#(m) > l/(8 i^2)`` becomes ``8 i^2 N(m) > l T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, Decimal, localcontext
from fractions import Fraction
from typing import Any, Hashable, Iterable, Mapping, Protocol, Sequence

import numpy as np

from .errors import BadParameter, RoundCapExceeded, SampleBudgetExceeded

FAITHFUL_C1 = 2**17
FAITHFUL_C2 = 2**18
DESK_C1 = 2**3
DESK_C2 = 2**4

CHARACTERISTIC = "characteristic"
FAILED = "failed"
EMPTY = "empty"

_INV_E = math.exp(-1)
_CHUNK = 2**62


class Sampler(Protocol):
    def draw(self, rng: np.random.Generator) -> Hashable: ...


@dataclass(frozen=True)
class SamplerConfig:
    epsilon: float = 0.05
    mode: str = "desk"
    c1: int | None = None
    c2: int | None = None
    max_doubling_rounds: int = 40
    max_samples_per_round: int = 2**72

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise BadParameter(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.mode == "faithful":
            for name, want in (("c1", FAITHFUL_C1), ("c2", FAITHFUL_C2)):
                got = getattr(self, name)
                if got not in (None, want):
                    raise BadParameter(f"faithful mode pins {name} to {want}")
                object.__setattr__(self, name, want)
        elif self.mode == "desk":
            if self.c1 is None:
                object.__setattr__(self, "c1", DESK_C1)
            if self.c2 is None:
                object.__setattr__(self, "c2", DESK_C2)
        else:
            raise BadParameter(f"unknown mode {self.mode!r}")
        if self.c1 < 1 or self.c2 < 1:
            raise BadParameter("sample-size constants must be positive")
        if self.max_doubling_rounds < 1:
            raise BadParameter("max_doubling_rounds must be at least 1")

    def with_epsilon(self, epsilon: float) -> "SamplerConfig":
        return SamplerConfig(
            epsilon,
            self.mode,
            self.c1,
            self.c2,
            self.max_doubling_rounds,
            self.max_samples_per_round,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "mode": self.mode,
            "c1": self.c1,
            "c2": self.c2,
            "max_doubling_rounds": self.max_doubling_rounds,
            "constants_deviate": self.mode != "faithful",
        }


def first_eps_prime(epsilon: float) -> float:
    return min(_INV_E, epsilon / 8)


def _log_inverse(eps_prime) -> Decimal:
    """``ln(1/eps_prime)`` to 40 digits; the float ``exp(-1)`` stands for ``1/e``."""
    if isinstance(eps_prime, float) and eps_prime >= _INV_E:
        return Decimal(1)
    with localcontext() as ctx:
        ctx.prec = 40
        if isinstance(eps_prime, Fraction):
            x = Decimal(eps_prime.numerator) / Decimal(eps_prime.denominator)
        else:
            x = Decimal(eps_prime)
        return -x.ln()


def sample_size(i: int, eps_prime, c1: int, c2: int) -> int:
    """``max(ceil(i^3 c1 L), ceil(i^3 c2 L)^2)`` with ``L = ln(1/eps_prime)``."""
    if i < 1:
        raise BadParameter("scale i must be at least 1")
    if not 0 < eps_prime <= _INV_E:
        raise BadParameter(f"eps_prime must lie in (0, 1/e], got {eps_prime}")
    L = _log_inverse(eps_prime)
    with localcontext() as ctx:
        ctx.prec = 60
        a = (Decimal(i**3 * c1) * L).to_integral_value(rounding=ROUND_CEILING)
        b = (Decimal(i**3 * c2) * L).to_integral_value(rounding=ROUND_CEILING)
    return max(int(a), int(b) ** 2)


# --------------------------------------------------------------------------
# estimators and cut-offs
# --------------------------------------------------------------------------


@dataclass
class EstimatorTable:
    counts: dict[Hashable, int]
    total: int

    @classmethod
    def from_draws(cls, draws: Iterable[Hashable]) -> "EstimatorTable":
        counts: dict[Hashable, int] = {}
        total = 0
        for m in draws:
            counts[m] = counts.get(m, 0) + 1
            total += 1
        return cls(counts, total)

    def estimator(self, m: Hashable) -> Fraction:
        return Fraction(self.counts.get(m, 0), self.total)

    def values(self) -> set[Fraction]:
        return {Fraction(c, self.total) for c in self.counts.values()}


def _window_hit(q: Fraction, ell: int, i: int, half_width: Fraction) -> bool:
    scale = 8 * i * i
    return (ell - half_width) <= q * scale <= (ell + half_width)


def find_cutoff(Q: Iterable, i: int, half_width: Fraction = Fraction(1, 8)) -> int | None:
    """Smallest ``l`` in ``{6i+1..8i}`` whose window misses every value in ``Q``.

    The window is ``[(l - w)/(8 i^2), (l + w)/(8 i^2)]`` with ``w = 1/8``.
    ``None`` means the round is declared failed.
    """
    if i < 1:
        raise BadParameter("scale i must be at least 1")
    qs = sorted({Fraction(q) for q in Q})
    for ell in range(6 * i + 1, 8 * i + 1):
        if not any(_window_hit(q, ell, i, half_width) for q in qs):
            return ell
    return None


def _cutoff_from_counts(counts: Iterable[int], total: int, i: int) -> int | None:
    # (8l - 1) T <= 64 i^2 N <= (8l + 1) T, all in integers
    ns = sorted(set(counts))
    s = 64 * i * i
    for ell in range(6 * i + 1, 8 * i + 1):
        lo, hi = (8 * ell - 1) * total, (8 * ell + 1) * total
        if not any(lo <= s * n <= hi for n in ns):
            return ell
    return None


# --------------------------------------------------------------------------
# rounds
# --------------------------------------------------------------------------


@dataclass
class RoundResult:
    i: int
    eps_prime: float
    samples: int
    outcome: str
    cutoff: int | None
    subset: frozenset | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "i": self.i,
            "eps_prime": self.eps_prime,
            "T_drawn": self.samples,
            "outcome": self.outcome,
            "cutoff": self.cutoff,
        }


def draw_table(sampler, T: int, rng: np.random.Generator) -> EstimatorTable:
    """``T`` i.i.d. draws as a count table, using ``draw_counts`` when offered."""
    fast = getattr(sampler, "draw_counts", None)
    if fast is not None:
        return EstimatorTable(fast(T, rng), T)
    return EstimatorTable.from_draws(sampler.draw(rng) for _ in range(T))


def extract_round(sampler, i: int, eps_prime: float, config: SamplerConfig, rng: np.random.Generator) -> RoundResult:
    T = sample_size(i, eps_prime, config.c1, config.c2)
    if T > config.max_samples_per_round:
        raise SampleBudgetExceeded(f"round i={i} needs {T} samples (cap {config.max_samples_per_round})")
    table = draw_table(sampler, T, rng)
    cutoff = _cutoff_from_counts(table.counts.values(), T, i)
    if cutoff is None:
        return RoundResult(i, eps_prime, T, FAILED, None)
    scale = 8 * i * i
    kept = frozenset(m for m, c in table.counts.items() if scale * c > cutoff * T)
    if not kept:
        return RoundResult(i, eps_prime, T, EMPTY, cutoff)
    return RoundResult(i, eps_prime, T, CHARACTERISTIC, cutoff, kept)


def extract_characteristic(
    sampler,
    config: SamplerConfig,
    rng: np.random.Generator,
    log: list[RoundResult] | None = None,
) -> frozenset:
    """Non-empty characteristic subset of the sampler's support (w.h.p.).

    Rounds use ``i = 1, 2, 4, ...`` with the per-round error halved each
    time; the first round that keeps a non-empty set wins. ``log`` collects
    every round.
    """
    i = 1
    eps_prime = first_eps_prime(config.epsilon)
    for _ in range(config.max_doubling_rounds):
        res = extract_round(sampler, i, eps_prime, config, rng)
        if log is not None:
            log.append(res)
        if res.outcome == CHARACTERISTIC:
            return res.subset
        i *= 2
        eps_prime /= 2
    raise RoundCapExceeded(f"no characteristic subset after {config.max_doubling_rounds} rounds")


# --------------------------------------------------------------------------
# samplers with an explicit table
# --------------------------------------------------------------------------


def multinomial_counts(probs: np.ndarray, T: int, rng: np.random.Generator) -> list[int]:
    """Counts of ``T`` i.i.d. draws from ``probs``, exact Python integers.

    Large ``T`` is split into chunks of at most ``2**62`` draws, so the result
    has the same law as drawing one at a time.
    """
    p = np.asarray(probs, dtype=np.float64)
    p = p / p.sum()
    out = [0] * len(p)
    remaining = int(T)
    while remaining:
        c = min(remaining, _CHUNK)
        for k, x in enumerate(rng.multinomial(c, p).tolist()):
            out[k] += int(x)
        remaining -= c
    return out


def normalize_probs(probs: Sequence[float], tol: float = 1e-9) -> list[float]:
    ps = [float(p) for p in probs]
    if not ps:
        raise BadParameter("empty probability table")
    if any(not math.isfinite(p) or p < 0 for p in ps):
        raise BadParameter("probabilities must be finite and non-negative")
    s = math.fsum(ps)
    if abs(s - 1.0) > tol:
        raise BadParameter(f"probabilities sum to {s!r}, not 1")
    return [p / s for p in ps]


class TableSampler:
    """I.i.d. sampler over an explicit table of element probabilities.

    Elements with probability zero are kept in the table but never drawn.
    """

    def __init__(self, table: Mapping[Hashable, float] | Sequence[float], tol: float = 1e-9):
        if isinstance(table, Mapping):
            self.elements = list(table)
            probs = [table[m] for m in self.elements]
        else:
            self.elements = list(range(len(table)))
            probs = list(table)
        self.probs = normalize_probs(probs, tol)
        self._p = np.asarray(self.probs)

    def probability(self, m: Hashable) -> float:
        try:
            return self.probs[self.elements.index(m)]
        except ValueError:
            return 0.0

    def level_sets(self) -> list[frozenset]:
        levels: dict[float, set] = {}
        for m, p in zip(self.elements, self.probs):
            if p > 0:
                levels.setdefault(p, set()).add(m)
        return [frozenset(levels[p]) for p in sorted(levels, reverse=True)]

    def draw(self, rng: np.random.Generator) -> Hashable:
        return self.elements[int(rng.choice(len(self.elements), p=self._p))]

    def draw_counts(self, T: int, rng: np.random.Generator) -> dict[Hashable, int]:
        counts = multinomial_counts(self._p, T, rng)
        return {m: c for m, c in zip(self.elements, counts) if c}


def is_characteristic(subset: Iterable[Hashable], sampler: TableSampler) -> bool:
    """Does ``subset`` contain every element sharing a probability with one of its members?"""
    s = set(subset)
    probs = {sampler.probability(m) for m in s}
    return all(m in s for m, p in zip(sampler.elements, sampler.probs) if p in probs)


@dataclass
class ExtractionReport:
    subset: list
    rounds: list[dict] = field(default_factory=list)
    samples: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {"subset": self.subset, "rounds": self.rounds, "samples": self.samples}


def run_extraction(sampler, config: SamplerConfig, rng: np.random.Generator) -> ExtractionReport:
    log: list[RoundResult] = []
    subset = extract_characteristic(sampler, config, rng, log)
    return ExtractionReport(
        sorted(subset),
        [r.to_dict() for r in log],
        sum(r.samples for r in log),
    )
