"""Command-line front end.

Every subcommand is deterministic for a fixed ``--seed``; the only
non-reproducible field in the JSON output is ``stats.wall_ms``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__
from .autgroup import AutConfig, CaseTrace, aut_group, iso_tournaments, verify_generators
from .core import (
    Tournament,
    apply_perm,
    circulant,
    cycle3,
    lex_product,
    paley,
    random_tournament,
    read_tournament,
    to_text,
    transitive,
)
from .errors import BadParameter, NotIsomorphic, TourisoError
from .oracles import OracleStack, brute_aut, brute_iso, make_oracle, serve_brute_oracle
from .sampling import SamplerConfig, TableSampler, run_extraction
from .suborbits import SuborbitOracle, invariant_suborbits

FAMILIES = ("random", "transitive", "paley", "circulant", "lexprod")


@dataclass
class RunStats:
    seed: int
    mode: str
    epsilon: float
    oracle_calls: dict[str, int] = field(default_factory=dict)
    samples: int = 0
    wall_ms: float = 0.0
    outcome: str = ""
    modules: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "mode": self.mode,
            "epsilon": self.epsilon,
            "oracle_calls": self.oracle_calls,
            "samples": self.samples,
            "wall_ms": self.wall_ms,
            "outcome": self.outcome,
            "modules": self.modules,
        }


# --------------------------------------------------------------------------
# instance generation
# --------------------------------------------------------------------------


def _small_family(spec: str, seed: int) -> Tournament:
    """``c3``, ``transitive:k``, ``paley:q``, ``circulant:n``, ``random:n``."""
    name, _, arg = spec.partition(":")
    if name == "c3":
        return cycle3()
    try:
        k = int(arg)
    except ValueError:
        raise BadParameter(f"family spec {spec!r} needs an integer argument") from None
    if name == "transitive":
        return transitive(k)
    if name == "paley":
        return paley(k)
    if name == "circulant":
        return circulant(k)
    if name == "random":
        return random_tournament(k, seed)
    raise BadParameter(f"unknown family spec {spec!r}")


def generate(family: str, *, n: int | None = None, q: int | None = None, residues=None, inner="c3", outer="c3", seed: int = 0) -> Tournament:
    if family == "random":
        return random_tournament(_need(n, "--n"), seed)
    if family == "transitive":
        return transitive(_need(n, "--n"))
    if family == "paley":
        return paley(_need(q if q is not None else n, "--q"))
    if family == "circulant":
        return circulant(_need(n, "--n"), residues)
    if family == "lexprod":
        return lex_product(_small_family(outer, seed), _small_family(inner, seed + 1))
    raise BadParameter(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")


def _need(value, flag):
    if value is None:
        raise BadParameter(f"{flag} is required for this family")
    return value


# --------------------------------------------------------------------------
# shared plumbing
# --------------------------------------------------------------------------


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def _sampler_config(args) -> SamplerConfig:
    kwargs = {"epsilon": args.epsilon, "mode": args.mode}
    if args.mode == "desk":
        kwargs["c1"], kwargs["c2"] = args.c1, args.c2
    return SamplerConfig(**kwargs, max_doubling_rounds=args.max_rounds)


def _aut_config(args) -> AutConfig:
    return AutConfig(epsilon=args.epsilon, budget_exponent=args.budget_exponent, check_solvable=args.check_solvable)


def _emit(args, record: dict) -> None:
    text = json.dumps(record, sort_keys=True, indent=2)
    if getattr(args, "json", None):
        with open(args.json, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _stats(args, stack: OracleStack | None, t0: float) -> RunStats:
    return RunStats(
        seed=args.seed,
        mode=args.mode,
        epsilon=args.epsilon,
        oracle_calls=stack.counts() if stack else {},
        wall_ms=round((time.perf_counter() - t0) * 1000, 3),
    )


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_gen(args) -> int:
    T = generate(
        args.family,
        n=args.n,
        q=args.q,
        residues=[int(x) for x in args.residues.split(",")] if args.residues else None,
        inner=args.inner,
        outer=args.outer,
        seed=args.seed,
    )
    if args.permute is not None:
        T = apply_perm(T, _rng(args.permute).permutation(T.n))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(to_text(T))
    else:
        sys.stdout.write(to_text(T))
    return 0


def compute_aut(T: Tournament, args, rng) -> tuple[Any, RunStats]:
    t0 = time.perf_counter()
    if args.method == "brute":
        G = brute_aut(T)
        st = _stats(args, None, t0)
        st.outcome = "brute"
        return G, st
    with make_oracle(args.oracle) as o1:
        stack = OracleStack(o1)
        oracle = SuborbitOracle(stack, c=args.c, config=_sampler_config(args), mode=args.sampler)
        trace = CaseTrace()
        G = aut_group(T, oracle, rng, _aut_config(args), trace)
        st = _stats(args, stack, t0)
    st.samples = oracle.samples
    st.outcome = "verified" if verify_generators(T, G) else "unverified"
    st.modules = {"autgroup": {"config": _aut_config(args).to_dict(), "trace": trace.to_json()}, "sampling": _sampler_config(args).to_dict()}
    return G, st


def cmd_aut(args) -> int:
    T = read_tournament(args.input)
    G, st = compute_aut(T, args, _rng(args.seed))
    _emit(
        args,
        {
            "order": G.order(),
            "generators": [list(g) for g in G.generators],
            "method": args.method,
            "stats": st.to_dict(),
        },
    )
    return 0


def cmd_iso(args) -> int:
    A, B = read_tournament(args.input_a), read_tournament(args.input_b)
    rng = _rng(args.seed)
    t0 = time.perf_counter()
    stack = None
    samples = 0
    trace = CaseTrace()
    if args.method == "brute":
        sigma = brute_iso(A, B)
    else:
        with make_oracle(args.oracle) as o1:
            stack = OracleStack(o1)
            oracle = SuborbitOracle(stack, c=args.c, config=_sampler_config(args), mode=args.sampler)
            try:
                sigma = iso_tournaments(A, B, oracle, rng, _aut_config(args), trace)
            except NotIsomorphic:
                sigma = None
            samples = oracle.samples
    st = _stats(args, stack, t0)
    st.samples = samples
    st.outcome = "isomorphic" if sigma is not None else "not_isomorphic"
    if args.method == "reduction":
        st.modules = {"autgroup": {"trace": trace.to_json()}}
    _emit(
        args,
        {
            "isomorphic": sigma is not None,
            "witness": list(sigma) if sigma is not None else None,
            "method": args.method,
            "stats": st.to_dict(),
        },
    )
    return 0


def cmd_suborbits(args) -> int:
    T = read_tournament(args.input)
    rng = _rng(args.seed)
    t0 = time.perf_counter()
    with make_oracle(args.oracle) as o1:
        stack = OracleStack(o1)
        res = invariant_suborbits(T, stack, args.c, _sampler_config(args), rng, epsilon=args.suborbit_epsilon, mode=args.sampler)
        st = _stats(args, stack, t0)
    st.samples = res.samples
    st.outcome = "discrete" if res.pi.is_discrete() else "suborbits"
    out = res.to_json()
    out["stats"] = st.to_dict()
    _emit(args, out)
    return 0


def parse_probs(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise BadParameter(f"cannot parse probability list {text!r}") from None


def cmd_sample(args) -> int:
    sampler = TableSampler(parse_probs(args.probs))
    rng = _rng(args.seed)
    t0 = time.perf_counter()
    report = run_extraction(sampler, _sampler_config(args), rng)
    st = _stats(args, None, t0)
    st.samples = report.samples
    st.outcome = "characteristic"
    out = report.to_dict()
    out["stats"] = st.to_dict()
    _emit(args, out)
    return 0


def _bench_instances(args):
    for fam in args.families.split(","):
        for n in [int(x) for x in args.sizes.split(",")]:
            if fam == "paley":
                if n % 4 != 3:
                    continue
                yield fam, n, paley(n)
            elif fam == "lexprod":
                if n != 9:
                    continue
                yield fam, n, lex_product(cycle3(), cycle3())
            else:
                yield fam, n, generate(fam, n=n, seed=args.seed + n)


BENCH_COLUMNS = ["n", "family", "method", "order_match", "o1_calls", "samples", "ms"]


def cmd_bench(args) -> int:
    rng = _rng(args.seed)
    rows = []
    for fam, n, T in _bench_instances(args):
        try:
            truth = brute_aut(T).order()
        except TourisoError:
            continue
        for method in args.methods.split(","):
            for _ in range(args.repeats):
                sub = argparse.Namespace(**vars(args))
                sub.method = method
                G, st = compute_aut(T, sub, rng.spawn(1)[0])
                rows.append(
                    {
                        "n": n,
                        "family": fam,
                        "method": method,
                        "order_match": int(G.order() == truth),
                        "o1_calls": st.oracle_calls.get("o1", 0),
                        "samples": st.samples,
                        "ms": st.wall_ms,
                    }
                )
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"rows": rows}, fh, sort_keys=True, indent=2)
    return 0


def cmd_serve_oracle(args) -> int:
    serve_brute_oracle(sys.stdin, sys.stdout)
    return 0


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.05, help="run-level error target")
    p.add_argument("--mode", choices=("desk", "faithful"), default="desk")
    p.add_argument("--json", metavar="PATH", help="also write the JSON record here")
    p.add_argument("--oracle", default="internal", help="internal | exec:<path>")
    p.add_argument("--c1", type=int, default=8)
    p.add_argument("--c2", type=int, default=16)
    p.add_argument("--c", type=int, default=1, help="suborbit error exponent")
    p.add_argument("--budget-exponent", type=int, default=3)
    p.add_argument("--max-rounds", type=int, default=40)
    p.add_argument("--sampler", choices=("law", "literal"), default="law")
    p.add_argument("--check-solvable", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="touriso", description="Tournament isomorphism from an asymmetry oracle.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a tournament")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--n", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--residues")
    p.add_argument("--inner", default="c3")
    p.add_argument("--outer", default="c3")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--permute", type=int, metavar="SEED", help="relabel by a seeded random permutation")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("aut", help="automorphism group generators")
    p.add_argument("input")
    p.add_argument("--method", choices=("reduction", "brute"), default="reduction")
    _common(p)
    p.set_defaults(func=cmd_aut)

    p = sub.add_parser("iso", help="isomorphism test with witness")
    p.add_argument("input_a")
    p.add_argument("input_b")
    p.add_argument("--method", choices=("reduction", "brute"), default="reduction")
    _common(p)
    p.set_defaults(func=cmd_iso)

    p = sub.add_parser("suborbits", help="invariant suborbits with certificates")
    p.add_argument("input")
    p.add_argument("--suborbit-epsilon", type=float, help="override |T|^-c")
    _common(p)
    p.set_defaults(func=cmd_suborbits)

    p = sub.add_parser("sample", help="characteristic subset of an explicit distribution")
    p.add_argument("--probs", required=True, help="comma-separated probabilities")
    _common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("bench", help="sweep sizes and families, emit CSV")
    p.add_argument("--sizes", default="3,5,7,9")
    p.add_argument("--families", default="random,transitive,paley,circulant,lexprod")
    p.add_argument("--methods", default="reduction,brute")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--csv", metavar="PATH")
    _common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve-oracle", help="answer asymmetry queries on stdin (brute force)")
    p.set_defaults(func=cmd_serve_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TourisoError, OSError) as exc:
        print(f"touriso: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
