import csv
import io
import itertools

import pytest

from mivarnet import (
    GenSpec,
    Query,
    chain_rule_count,
    fit_scaling,
    generate_chain,
    prune_path,
    run_benchmark,
    run_inference,
    solve,
    standard_query,
    validate_net,
)
from mivarnet.errors import InsufficientData
from mivarnet.genbench import BenchRecord, canned_linear_records, random_net, write_bench_csv
from mivarnet.inference import OpCounter

from oracles import chain_value, fib


def test_single_triple():
    net = generate_chain(3)
    assert net.m == 3
    assert [(r.id, r.inputs, r.outputs) for r in net.rules] == [
        ("R1", ("P1", "P2"), ("P3",)),
        ("R2", ("P3", "P2"), ("P1",)),
        ("R3", ("P3", "P1"), ("P2",)),
    ]
    assert validate_net(net) == []


@pytest.mark.parametrize("n", [3, 4, 5, 17, 1000])
def test_rule_count_identity(n):
    assert generate_chain(n).m == 3 * (n - 2) == chain_rule_count(n)
    assert generate_chain(GenSpec(n, include_inverses=False)).m == n - 2


def test_million_scale_count_without_building():
    assert chain_rule_count(1_170_007) == 3_510_015


def test_spec_validation():
    for bad in (2, 0, -5, 3.5):
        with pytest.raises(ValueError):
            GenSpec(bad)


def test_generator_is_deterministic():
    a, b = generate_chain(GenSpec(40, seed=1)), generate_chain(GenSpec(40, seed=2))
    assert a == b
    assert [r.expressions for r in a.rules] == [r.expressions for r in b.rules]


def test_lazy_ids_match_materialised():
    net = generate_chain(20)
    assert list(net.param_ids) == [f"P{i}" for i in range(1, 21)]
    assert list(net.rule_ids) == [f"R{i}" for i in range(1, 55)]
    assert validate_net(net) == []


def test_standard_query():
    assert standard_query(100).find == {"P100"}
    assert standard_query(10000).find == {"P10000"}
    q = standard_query(3)
    assert q.given == {"P1": 10.0, "P2": 10.0} and q.find == {"P3"}


def test_five_object_chain_by_hand():
    result = solve(generate_chain(5), standard_query(5))
    assert result.path.ids == ["R1", "R4", "R7"]
    assert [result.bindings[f"P{i}"] for i in range(1, 6)] == [10, 10, 20, 30, 50]


@pytest.mark.parametrize("n", [3, 10, 33, 70])
def test_values_follow_fibonacci(n):
    assert solve(generate_chain(n), standard_query(n)).bindings[f"P{n}"] == 10 * fib(n)


@pytest.mark.parametrize("n", [3, 50, 1001, 5000])
def test_bounded_values_stay_finite(n):
    net = generate_chain(GenSpec(n, bounded_values=True))
    assert solve(net, standard_query(n)).bindings[f"P{n}"] == 10.0
    # unequal seeds so the averaging actually moves
    value = solve(net, Query({"P1": 0.0, "P2": 10.0}, {f"P{n}"})).bindings[f"P{n}"]
    assert value == pytest.approx(float(chain_value(n, 0, bounded=True, second=10)), rel=1e-9)


@pytest.mark.parametrize("n", [3, 8, 64, 500])
def test_solvable_with_linear_work(n):
    net = generate_chain(n)
    q = standard_query(n)
    raw = run_inference(net, q)
    assert len(prune_path(net, raw, q)) == n - 2
    assert raw.stats.counter_decrements <= 2 * 3 * (n - 2)
    assert raw.stats.bound_violations(net) == []


def test_work_grows_linearly():
    decs = [run_inference(generate_chain(n), standard_query(n)).stats.counter_decrements for n in (100, 200, 400)]
    # exact per-object increments
    assert decs[2] - decs[1] == 2 * (decs[1] - decs[0])


def test_random_net_is_valid():
    net = random_net(7, 30, 40)
    assert validate_net(net) == [] and (net.n, net.m) == (30, 40)
    assert random_net(7, 30, 40) == net


def test_benchmark_records():
    records = run_benchmark([10**3, 10**4], repeats=3)
    assert [r.n_rules for r in records] == [2994, 29994]
    assert [r.path_length for r in records] == [998, 9998]
    assert all(len(r.trials_ms) == 3 and r.solve_ms > 0 for r in records)
    assert records[0].mode == "single-thread"


def test_benchmark_uses_the_clock():
    ticks = itertools.count(0.0, 0.002)
    (rec,) = run_benchmark([50], repeats=1, clock=lambda: next(ticks))
    assert rec.trials_ms == [pytest.approx(2.0)]


def test_fit_linear():
    fit = fit_scaling(canned_linear_records())
    assert fit.slope == pytest.approx(1.0, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def _records(points):
    return [BenchRecord(n, 0, t, 0, OpCounter(), [t]) for n, t in points]


def test_fit_quadratic():
    assert fit_scaling(_records([(10, 1), (100, 100), (1000, 10000)])).slope == pytest.approx(2.0)


@pytest.mark.parametrize(
    "points",
    [
        [(10, 1), (1000, 100)],
        [(10, 1), (10, 2), (1000, 100)],
        [(10, 1), (50, 5), (100, 10)],
        [(10, 1), (100, 0), (1000, 100)],
    ],
)
def test_fit_needs_enough_data(points):
    with pytest.raises(InsufficientData):
        fit_scaling(_records(points))


def test_csv_layout():
    recs = _records([(10, 1.5), (100, 2.25)])
    recs[0].trials_ms = [1.0, 1.5, 2.0]
    buf = io.StringIO()
    write_bench_csv(recs, buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ["n_objects", "n_rules", "run", "solve_ms", "path_len", "counter_decrements"]
    assert [r[2] for r in rows[1:]] == ["1", "2", "3", "median", "1", "median"]
    assert rows[4][3] == "1.500"
