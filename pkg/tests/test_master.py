"""Engine: column/row bookkeeping, greedy rounding, anytime bound, pool ILP,
and full column/row generation on the worked example."""

import numpy as np
import pytest

from artifact import exact, lp
from artifact.cell import CellProblem, build_cell_master
from artifact.errors import InvalidColumn
from artifact.master import (
    CELL,
    GLOBAL_POSE,
    LOCAL_POSE,
    Column,
    DualVector,
    MasterState,
    SolveConfig,
    TripleRow,
    add_columns,
    columns_conflict,
    compute_lower_bound,
    find_violated_triples,
    round_greedy,
    run_colgen,
    selection_cost,
    selection_feasible,
    solve_pool_ilp,
)
from artifact.pose import PoseProblem

from helpers import (
    AbstractCellProblem,
    counterexample_columns,
    counterexample_instance,
    counterexample_row,
    random_pose_instance,
)


def test_column_validation():
    with pytest.raises(InvalidColumn):
        Column(kind=CELL, elements=(), global_elements=(), cost=0.0)
    with pytest.raises(InvalidColumn):
        Column(kind=CELL, elements=(0, 0), global_elements=(), cost=0.0)
    with pytest.raises(InvalidColumn):
        Column(kind=GLOBAL_POSE, elements=(0,), global_elements=(), cost=0.0)
    with pytest.raises(InvalidColumn):
        Column(kind=LOCAL_POSE, elements=(0, 1), global_elements=(0, 1), cost=0.0)
    # Elements come back sorted regardless of input order.
    col = Column(kind=CELL, elements=(2, 0), global_elements=(), cost=-1.0)
    assert col.elements == (0, 2)


def test_triple_row_coefficient():
    row = counterexample_row()
    cols = counterexample_columns()
    assert [row.coefficient(c) for c in cols] == [1, 1, 1, 1]
    single = Column(kind=CELL, elements=(0,), global_elements=(), cost=-1.0)
    assert row.coefficient(single) == 0
    other_kind = Column(
        kind=GLOBAL_POSE, elements=(0, 1), global_elements=(0, 1), cost=-1.0
    )
    assert row.coefficient(other_kind) == 0


def test_conflict_semantics():
    g1 = Column(kind=GLOBAL_POSE, elements=(0, 1), global_elements=(0, 1), cost=0.0)
    g2 = Column(kind=GLOBAL_POSE, elements=(1, 2), global_elements=(1, 2), cost=0.0)
    loc = Column(kind=LOCAL_POSE, elements=(0, 3), global_elements=(0,), cost=0.0)
    loc2 = Column(kind=LOCAL_POSE, elements=(0, 4), global_elements=(0,), cost=0.0)
    loc3 = Column(kind=LOCAL_POSE, elements=(1, 3), global_elements=(1,), cost=0.0)
    assert columns_conflict(g1, g2)
    # A local conflicts with a global only through its plain members.
    assert not columns_conflict(g1, loc)
    assert columns_conflict(g2, loc3) is False
    assert columns_conflict(
        Column(kind=GLOBAL_POSE, elements=(3,), global_elements=(3,), cost=0.0), loc
    )
    # Locals conflict on any shared element, the anchor included.
    assert columns_conflict(loc, loc2)
    assert columns_conflict(loc, loc3)


def test_selection_feasible_families():
    g = Column(kind=GLOBAL_POSE, elements=(0,), global_elements=(0,), cost=0.0)
    loc = Column(kind=LOCAL_POSE, elements=(0, 1), global_elements=(0,), cost=0.0)
    assert selection_feasible([g, loc])
    # Family 3: a local pose without its covering global is inadmissible.
    assert not selection_feasible([loc])
    # Size-3 row activity caps at one.
    cols = counterexample_columns()
    assert not selection_feasible([cols[0], cols[1]])
    assert selection_feasible([cols[3]], [counterexample_row()])


def test_add_columns_dedup():
    state = MasterState()
    cols = counterexample_columns()
    assert add_columns(state, cols) == 4
    assert add_columns(state, cols) == 0
    clone = Column(kind=CELL, elements=(1, 0), global_elements=(), cost=-4.0)
    assert add_columns(state, [clone]) == 0
    assert len(state.pool) == 4


def test_compute_lower_bound_zero_duals_trivial():
    duals = DualVector(element={"lambda": np.zeros(3)}, triple=np.zeros(0))
    assert compute_lower_bound(duals, [0.0, 0.0]) == 0.0


def test_compute_lower_bound_counterexample_recipe():
    # Zero duals on the worked universe: each anchor's best reduced cost is
    # the full column's -5, and the bound is the sum over the three anchors.
    duals = DualVector(
        element={"lambda": np.zeros(3)}, triple=np.zeros(0), bound_base=0.0
    )
    assert compute_lower_bound(duals, [-5.0, -5.0, -5.0]) == -15.0


def test_compute_lower_bound_skips_positive_minima():
    duals = DualVector(
        element={"lambda": np.zeros(2)}, triple=np.zeros(0), bound_base=-3.0
    )
    assert compute_lower_bound(duals, [2.0, -1.0, np.inf]) == -4.0


def test_round_greedy_counterexample_fraction():
    # On the half-integral point every column scores -2 - (-4) = +2; the tie
    # breaks to the first, whose conflictors are then zeroed.
    pool = counterexample_columns()[:3]
    sel = round_greedy(pool, np.array([0.5, 0.5, 0.5]))
    assert sel == [0]


def test_round_greedy_output_feasible_and_deterministic():
    rng = np.random.default_rng(41)
    for _ in range(20):
        inst = random_pose_instance(rng)
        uni = exact.enumerate_universe(inst)
        pool = list(uni.columns)
        primal = rng.uniform(0.0, 1.0, len(pool))
        primal[rng.random(len(pool)) < 0.5] = 0.0
        sel = round_greedy(pool, primal)
        assert sel == round_greedy(pool, primal.copy())
        assert selection_feasible([pool[j] for j in sel])


def test_find_violated_triples_on_fraction():
    pool = counterexample_columns()[:3]
    primal = np.array([0.5, 0.5, 0.5])
    problem = CellProblem(counterexample_instance())
    rows = find_violated_triples(problem, pool, primal, [], 1e-6)
    assert len(rows) == 1
    assert rows[0].members == (0, 1, 2)
    # Already-present rows are not proposed again.
    assert find_violated_triples(problem, pool, primal, rows, 1e-6) == []


def test_pool_ilp_counterexample():
    problem = AbstractCellProblem(num_elements=3)
    res = solve_pool_ilp(problem, counterexample_columns())
    assert res.exact
    assert res.value == pytest.approx(-5.0, abs=1e-9)
    assert res.selection == [3]


def test_pool_ilp_matches_brute_force():
    rng = np.random.default_rng(42)
    for trial in range(60):
        inst = random_pose_instance(rng, max_parts=3, max_kps=2)
        uni = exact.enumerate_universe(inst)
        pool = [c for c in uni.columns if rng.random() < 0.6]
        if not pool:
            continue
        want, _ = exact.brute_force_setpack(pool)
        res = solve_pool_ilp(PoseProblem(inst), pool)
        assert res.exact
        assert res.value == pytest.approx(want, abs=1e-7)
        assert selection_cost([pool[j] for j in res.selection]) == pytest.approx(
            want, abs=1e-7
        )


def test_pool_ilp_respects_triple_rows():
    problem = AbstractCellProblem(num_elements=3)
    pool = counterexample_columns()
    res = solve_pool_ilp(problem, pool, [counterexample_row()])
    want, _ = exact.brute_force_setpack(pool, [counterexample_row()])
    assert res.value == pytest.approx(want, abs=1e-9)


def test_pool_ilp_incumbent_seed():
    problem = AbstractCellProblem(num_elements=3)
    res = solve_pool_ilp(problem, counterexample_columns(), incumbent=[0])
    assert res.value == pytest.approx(-5.0, abs=1e-9)


def test_colgen_counterexample_instance_with_cuts():
    problem = CellProblem(counterexample_instance())
    state, report, trace = run_colgen(problem, SolveConfig(use_triples=True))
    assert state.status == "converged"
    assert state.lp_objective == pytest.approx(-5.0, abs=1e-6)
    assert report.lower == pytest.approx(-5.0, abs=1e-6)
    assert report.upper == pytest.approx(-5.0, abs=1e-6)
    assert report.normalized_gap <= 1e-9
    assert len(state.triple_rows) == 1
    assert report.upper_exact


def test_colgen_counterexample_instance_without_cuts():
    problem = CellProblem(counterexample_instance())
    state, report, trace = run_colgen(problem, SolveConfig(use_triples=False))
    assert state.status == "converged"
    # The fractional optimum stays: lower -6, and the best integral point in
    # the generated pool is a single pair at -4 (the complement singleton
    # never prices in at the converged duals).
    assert state.lp_objective == pytest.approx(-6.0, abs=1e-6)
    assert report.lower == pytest.approx(-6.0, abs=1e-6)
    assert report.upper == pytest.approx(-4.0, abs=1e-6)


def test_colgen_all_positive_converges_at_zero_in_one_iteration():
    rng = np.random.default_rng(43)
    inst = random_pose_instance(rng)
    inst.theta = np.abs(inst.theta)
    inst.phi = {k: abs(v) for k, v in inst.phi.items()}
    state, report, trace = run_colgen(PoseProblem(inst), SolveConfig())
    assert state.status == "converged"
    assert state.iteration == 1
    assert state.lp_objective == 0.0
    assert report.lower == pytest.approx(0.0, abs=1e-9)
    assert report.upper == 0.0


def test_colgen_lower_bound_validity_each_iteration():
    rng = np.random.default_rng(44)
    for _ in range(15):
        inst = random_pose_instance(rng)
        state, report, trace = run_colgen(PoseProblem(inst), SolveConfig())
        uni = exact.enumerate_universe(inst)
        opt, _ = exact.brute_force_setpack(uni.columns)
        for rec in trace:
            assert rec.lower <= opt + 1e-9
            assert rec.upper >= opt - 1e-9
        assert state.status == "converged"
        assert abs(trace[-1].lower - state.lp_objective) <= 1e-6


def test_colgen_lp_monotone_while_rows_fixed():
    rng = np.random.default_rng(45)
    inst = random_pose_instance(rng)
    _, _, trace = run_colgen(PoseProblem(inst), SolveConfig())
    for prev, cur in zip(trace, trace[1:]):
        if prev.rows_added == 0:
            assert cur.lp_objective <= prev.lp_objective + 1e-9
    # Wall times are cumulative and nondecreasing.
    for prev, cur in zip(trace, trace[1:]):
        assert cur.wall_time >= prev.wall_time


def test_colgen_full_universe_lp_equals_converged_lp():
    # At natural termination the master LP over the generated pool (plus
    # rows) matches the LP over the entire universe with the same rows.
    rng = np.random.default_rng(46)
    for _ in range(5):
        inst = random_pose_instance(rng, max_parts=2, max_kps=2)
        problem = PoseProblem(inst)
        state, report, trace = run_colgen(problem, SolveConfig())
        assert state.status == "converged"
        uni = exact.enumerate_universe(inst)
        full = problem.build_master(uni.columns, state.triple_rows, with_omega=False)
        sol = lp.solve(full)
        assert sol.objective == pytest.approx(state.lp_objective, abs=1e-6)


def test_colgen_iteration_limit_status():
    problem = CellProblem(counterexample_instance())
    state, report, trace = run_colgen(problem, SolveConfig(max_iterations=1))
    assert state.status == "iteration_limit"
    assert len(trace) == 1
    # The report still carries valid bounds.
    assert report.lower <= report.upper + 1e-9


def test_colgen_jobs_deterministic():
    problem = CellProblem(counterexample_instance())
    s1, r1, _ = run_colgen(problem, SolveConfig(jobs=1))
    s2, r2, _ = run_colgen(problem, SolveConfig(jobs=4))
    assert s1.lp_objective == s2.lp_objective
    assert [c.key() for c in s1.pool] == [c.key() for c in s2.pool]
    assert r1.upper == r2.upper
