
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqehpc.planner import (
    EfficiencyModel,
    PlanError,
    amdahl,
    choose_plan,
    dp_efficiency,
    dp_speedup,
    format_bench,
    mpi_efficiency,
    parse_bench,
    predict_iteration_time,
    write_heatmap_csv,
    feasible_plans,
)

from oracles import brute_force_plan

EXAMPLE = {1: 100.0, 2: 60.0, 4: 40.0, 8: 30.0}


def test_amdahl_examples():
    s, e = amdahl(100, 2, 2)
    assert s == pytest.approx(102 / 52)
    assert amdahl(7, 3, 1) == (1.0, 1.0)
    assert amdahl(100, 2, 100)[0] == pytest.approx(34.0)


def test_dp_examples():
    assert dp_efficiency(100, 2, 2) == pytest.approx(102 / 104)
    assert dp_efficiency(100, 2, 3) == pytest.approx(102 / 108)
    assert dp_efficiency(37, 3, 1) == 1.0
    assert dp_speedup(100, 2, 3) == pytest.approx(102 / 36)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 500), st.integers(1, 10), st.integers(1, 64))
def test_dp_efficiency_bounded_and_reduces(n_p, n_s, s):
    assert dp_efficiency(n_p, n_s, s) <= 1 + 1e-15
    if n_p % s == 0:
        assert dp_efficiency(n_p, n_s, s) == pytest.approx(amdahl(n_p, n_s, s)[0] / s)


def test_mpi_efficiency_examples():
    assert mpi_efficiency({1: 10.0, 2: 6.0}, 2) == pytest.approx(0.8333, abs=1e-4)
    assert mpi_efficiency({4: 3.0, 8: 2.0}, 4) == 1.0
    assert mpi_efficiency({1: 20.0, 128: 1.0}, 128) == pytest.approx(20 / 128)
    with pytest.raises(PlanError):
        mpi_efficiency({1: 1.0}, 2)


def test_predict_examples():
    m = EfficiencyModel(10, 2)
    assert predict_iteration_time({1: 30.0}, 1, 1, m) == 360
    assert predict_iteration_time({1: 30.0}, 1, 4, m) == 150
    assert predict_iteration_time({1: 100.0}, 1, 8, m) == 400


def test_documented_plan():
    m = EfficiencyModel(10, 2)
    best = choose_plan(EXAMPLE, m, 8, 1)
    assert (best.partitions, best.servers, best.seconds) == (4, 2, 280)
    assert predict_iteration_time(EXAMPLE, 8, 1, m) == 360
    assert predict_iteration_time(EXAMPLE, 1, 8, m) == 400
    assert (choose_plan(EXAMPLE, m, 2, 2).partitions, choose_plan(EXAMPLE, m, 2, 2).servers) == (2, 1)


def test_infeasible():
    with pytest.raises(PlanError):
        choose_plan(EXAMPLE, EfficiencyModel(10, 2), 1, 2)
    with pytest.raises(PlanError):
        choose_plan({2: 1.0}, EfficiencyModel(10, 2), 8, 1)


bench_tables = st.dictionaries(
    st.sampled_from([1, 2, 4, 8, 16, 32, 64]), st.floats(0.01, 1000.0), min_size=1, max_size=7
)


@settings(max_examples=300, deadline=None)
@given(bench_tables, st.integers(1, 300), st.integers(1, 5), st.integers(1, 128))
def test_matches_brute_force_and_dominates(bench, n_p, n_s, budget):
    p_min = min(bench)
    if budget < p_min:
        return
    m = EfficiencyModel(n_p, n_s)
    best = choose_plan(bench, m, budget, p_min)
    p, s, t = brute_force_plan(bench, n_p, n_s, budget, p_min)
    assert (best.partitions, best.servers) == (p, s) and best.seconds == t
    pure_mpi = min(predict_iteration_time(bench, q, 1, m) for q in bench if q <= budget)
    pure_dp = min(predict_iteration_time(bench, p_min, k, m) for k in (1, 2, 4, 8, 16, 32, 64, 128) if p_min * k <= budget)
    assert best.seconds <= pure_mpi and best.seconds <= pure_dp


def test_bench_and_heatmap_files(tmp_path):
    assert parse_bench(format_bench(EXAMPLE)) == EXAMPLE
    assert parse_bench("# p t\n1 2.5\n2 1.5 # comment\n") == {1: 2.5, 2: 1.5}
    for bad in ("3 1.0\n", "1 -1\n", "1\n"):
        with pytest.raises(PlanError):
            parse_bench(bad)
    path = tmp_path / "heat.csv"
    plans = feasible_plans(EXAMPLE, EfficiencyModel(10, 2), 8, 1)
    write_heatmap_csv(plans, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "partitions,servers,nodes,seconds,eps_mpi,eps_dp,efficiency"
    assert len(lines) - 1 == len(plans) == 4 + 3 + 2 + 1
