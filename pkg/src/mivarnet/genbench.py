"""Synthetic chain nets and the scaling benchmark.

A chain net over parameters ``P1..Pn`` has, for every consecutive triple
``(a, b, c) = (P_i, P_{i+1}, P_{i+2})``, the rule ``c = a + b`` and, unless
disabled, its two inverses ``a = c - b`` and ``b = c - a``. That gives
``3 * (n - 2)`` rules. Starting from ``P1 = P2 = 10`` every parameter is
derivable and the last one needs ``n - 2`` launches.
"""

from __future__ import annotations

import csv
import gc
import random
import statistics
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import IO, Callable, Iterable

import numpy as np

from .errors import InsufficientData
from .expr import BinOp, Num, Var
from .inference import OpCounter, Query, TieBreak, evaluate_path, prune_path, run_inference
from .net import Adjacency, MivarNet, NumberedIds, Parameter, Rule, build_net

__all__ = [
    "GenSpec",
    "BenchRecord",
    "ScalingFit",
    "generate_chain",
    "chain_rule_count",
    "standard_query",
    "random_net",
    "run_benchmark",
    "fit_scaling",
    "write_bench_csv",
    "canned_linear_records",
    "CSV_HEADER",
]

CSV_HEADER = ["n_objects", "n_rules", "run", "solve_ms", "path_len", "counter_decrements"]

GIVEN_VALUE = 10.0


@dataclass(frozen=True)
class GenSpec:
    """Parameters of a generated chain net.

    ``bounded_values`` swaps ``c = a + b`` for ``c = (a + b) / 2`` (inverses
    ``a = 2*c - b`` and ``b = 2*c - a``) so values stay finite at any size.
    ``seed`` is reserved for randomised variants and does not affect chains.
    """

    n_objects: int
    include_inverses: bool = True
    seed: int = 0
    bounded_values: bool = False

    def __post_init__(self):
        if int(self.n_objects) != self.n_objects or self.n_objects < 3:
            raise ValueError(f"n_objects must be an integer >= 3, got {self.n_objects}")


def chain_rule_count(n_objects: int, include_inverses: bool = True) -> int:
    return (3 if include_inverses else 1) * (n_objects - 2)


class _ChainExpressions(Sequence):
    """Rule expressions of a chain net, built on access."""

    def __init__(self, per_triple: int, bounded: bool, n_rules: int):
        self.per_triple = per_triple
        self.bounded = bounded
        self.n_rules = n_rules

    def __len__(self):
        return self.n_rules

    def __getitem__(self, r):
        if isinstance(r, slice):
            return [self[k] for k in range(*r.indices(self.n_rules))]
        if r < 0:
            r += self.n_rules
        if not 0 <= r < self.n_rules:
            raise IndexError(r)
        i, kind = divmod(r, self.per_triple)
        a, b, c = Var(f"P{i + 1}"), Var(f"P{i + 2}"), Var(f"P{i + 3}")
        if self.bounded:
            if kind == 0:
                return (BinOp("/", BinOp("+", a, b), Num(2.0)),)
            other = b if kind == 1 else a
            return (BinOp("-", BinOp("*", Num(2.0), c), other),)
        if kind == 0:
            return (BinOp("+", a, b),)
        return (BinOp("-", c, b if kind == 1 else a),)


def generate_chain(spec: GenSpec | int) -> MivarNet:
    """Build the chain net described by ``spec`` (or by a bare object count)."""
    if not isinstance(spec, GenSpec):
        spec = GenSpec(int(spec))
    n = spec.n_objects
    t = n - 2
    a = np.arange(t, dtype=np.int64)
    b, c = a + 1, a + 2
    if spec.include_inverses:
        # per triple: c = a+b ; a = c-b ; b = c-a
        inputs = np.stack([a, b, c, b, c, a], axis=1).reshape(-1)
        outputs = np.stack([c, a, b], axis=1).reshape(-1)
        per_triple = 3
    else:
        inputs = np.stack([a, b], axis=1).reshape(-1)
        outputs = c
        per_triple = 1
    m = per_triple * t
    return MivarNet(
        NumberedIds("P", n),
        NumberedIds("R", m),
        Adjacency(np.arange(0, 2 * m + 1, 2), inputs),
        Adjacency(np.arange(m + 1), outputs),
        _ChainExpressions(per_triple, spec.bounded_values, m),
        param_values=[None] * n,
        param_descriptions=[""] * n,
        rule_descriptions=[""] * m,
    )


def standard_query(spec: GenSpec | int) -> Query:
    """GIVEN ``P1 = P2 = 10``, TO FIND the last parameter."""
    n = spec.n_objects if isinstance(spec, GenSpec) else int(spec)
    return Query({"P1": GIVEN_VALUE, "P2": GIVEN_VALUE}, frozenset({f"P{n}"}))


def random_net(
    rng: random.Random | int,
    n_params: int,
    n_rules: int,
    *,
    max_inputs: int = 3,
    max_outputs: int = 2,
) -> MivarNet:
    """A random valid net with arbitrary bipartite wiring.

    Each output is computed as the sum of the rule's inputs.
    """
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    if n_params < 2 and n_rules:
        raise ValueError("rules need at least two parameters")
    ids = [f"P{i}" for i in range(1, n_params + 1)]
    params = [Parameter(p) for p in ids]
    rules = []
    for j in range(1, n_rules + 1):
        k_in = rng.randint(1, min(max_inputs, n_params - 1))
        k_out = rng.randint(1, min(max_outputs, n_params - k_in))
        chosen = rng.sample(ids, k_in + k_out)
        ins, outs = chosen[:k_in], chosen[k_in:]
        total = Var(ins[0])
        for name in ins[1:]:
            total = BinOp("+", total, Var(name))
        rules.append(Rule(f"R{j}", ins, outs, (total,) * len(outs)))
    return build_net(params, rules)


@dataclass
class BenchRecord:
    n_objects: int
    n_rules: int
    solve_ms: float
    path_length: int
    stats: OpCounter
    trials_ms: list[float] = field(default_factory=list)
    mode: str = "single-thread"


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    r2: float
    intercept: float = 0.0


def _timed_solve(net: MivarNet, query: Query, policy: TieBreak, clock: Callable[[], float]):
    gc.collect()
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        t0 = clock()
        raw = run_inference(net, query, policy)
        path = prune_path(net, raw, query)
        t1 = clock()
    finally:
        if was_enabled:
            gc.enable()
    return (t1 - t0) * 1000.0, raw, path


def run_benchmark(
    sizes: Iterable[int],
    repeats: int = 10,
    *,
    include_inverses: bool = True,
    bounded_values: bool = False,
    evaluate_up_to: int = 1000,
    clock: Callable[[], float] = time.perf_counter,
    progress: Callable[[BenchRecord], None] | None = None,
) -> list[BenchRecord]:
    """Time path construction on chain nets of each size.

    Only ``run_inference`` + ``prune_path`` are inside the timed region; net
    generation and result rendering are not. Each size is generated once and
    solved ``repeats`` times; the record carries the median. Paths on nets of
    at most ``evaluate_up_to`` objects are also executed numerically, outside
    the timer, as a sanity check.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    records = []
    for size in sizes:
        spec = GenSpec(int(size), include_inverses=include_inverses, bounded_values=bounded_values)
        net = generate_chain(spec)
        query = standard_query(spec)
        trials = []
        for _ in range(repeats):
            ms, raw, path = _timed_solve(net, query, TieBreak.FIFO, clock)
            trials.append(ms)
        if spec.n_objects <= evaluate_up_to:
            evaluate_path(net, path, query.given)
        record = BenchRecord(
            n_objects=spec.n_objects,
            n_rules=net.m,
            solve_ms=statistics.median(trials),
            path_length=len(path),
            stats=raw.stats,
            trials_ms=trials,
        )
        records.append(record)
        if progress is not None:
            progress(record)
    return records


def fit_scaling(records: Sequence[BenchRecord]) -> ScalingFit:
    """Least-squares fit of log(solve time) against log(object count)."""
    n = np.array([r.n_objects for r in records], dtype=float)
    t = np.array([r.solve_ms for r in records], dtype=float)
    if len(records) < 3 or len(set(n.tolist())) < 3:
        raise InsufficientData("need at least 3 records with distinct sizes")
    if n.max() / n.min() < 100:
        raise InsufficientData("sizes must span at least two decades")
    if np.any(t <= 0) or not np.all(np.isfinite(t)):
        raise InsufficientData("solve times must be positive and finite")
    x, y = np.log(n), np.log(t)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ScalingFit(float(slope), r2, float(intercept))


def write_bench_csv(records: Iterable[BenchRecord], out: IO[str]) -> None:
    """One row per trial, then a ``median`` row, for every record."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in records:
        dec = rec.stats.counter_decrements
        for run, ms in enumerate(rec.trials_ms, start=1):
            w.writerow([rec.n_objects, rec.n_rules, run, f"{ms:.3f}", rec.path_length, dec])
        w.writerow([rec.n_objects, rec.n_rules, "median", f"{rec.solve_ms:.3f}", rec.path_length, dec])


def canned_linear_records(ms_per_object: float = 0.005) -> list[BenchRecord]:
    """Synthetic records with time exactly proportional to size."""
    out = []
    for n in (10**4, 10**5, 10**6):
        ms = ms_per_object * n
        out.append(BenchRecord(n, chain_rule_count(n), ms, n - 2, OpCounter(), [ms]))
    return out

