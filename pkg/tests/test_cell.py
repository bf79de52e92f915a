"""Cell costs, anchored pricing against the BQP oracle, the branch-and-bound
regime, master structure, and row separation."""

import numpy as np
import pytest

from artifact.cell import (
    MAX_CANDIDATES,
    MAX_EXHAUSTIVE,
    CellInstance,
    CellProblem,
    build_cell_master,
    candidate_set,
    cell_cost,
    cell_triples,
    price_cell,
)
from artifact.errors import CandidateSetTooLarge, InvalidColumn
from artifact.exact import brute_force_setpack, enumerate_universe
from artifact.master import (
    CELL,
    LOCAL_POSE,
    Column,
    DualVector,
    SolveConfig,
    TripleRow,
    run_colgen,
)

from helpers import (
    counterexample_instance,
    oracle_rc_cell,
    random_cell_duals,
    random_cell_instance,
)

RC_MATCH_TOL = 1e-9


def zero_duals(n, triple_rows=()):
    return DualVector(
        element={"lambda": np.zeros(n)}, triple=np.zeros(len(triple_rows))
    )


def chain_instance():
    # Three super-pixels on a line, 1.2 apart: the middle one is the only
    # centroid candidate for the full set, and the outer pair has none.
    dist = np.array(
        [[0.0, 1.2, 2.4], [1.2, 0.0, 1.2], [2.4, 1.2, 0.0]]
    )
    return CellInstance(
        dist=dist,
        area=np.ones(3),
        max_radius=2.0,
        max_area=10.0,
        theta=np.array([-1.0, -2.0, -3.0]),
        phi={(0, 1): 0.5, (1, 2): -1.5},
    )


# ---------------------------------------------------------------- costs


def test_cell_cost_hand_values():
    inst = counterexample_instance()
    assert cell_cost(inst, [0, 1]) == pytest.approx(-4.0)
    assert cell_cost(inst, [0, 1], cost_offset=0.5) == pytest.approx(-3.5)
    assert cell_cost(inst, [2]) == pytest.approx(-1.0)
    chain = chain_instance()
    # (0, 2) carries no phi entry; 1 is the centroid.
    assert cell_cost(chain, [0, 1, 2]) == pytest.approx(-6.0 + 0.5 - 1.5)


def test_cell_cost_rejections():
    inst = counterexample_instance()
    with pytest.raises(InvalidColumn):
        cell_cost(inst, [])
    with pytest.raises(InvalidColumn):
        cell_cost(inst, [0, 0])
    with pytest.raises(InvalidColumn):
        cell_cost(inst, [0, 7])
    with pytest.raises(InvalidColumn):
        cell_cost(inst, [0, 1, 2])  # area 3 over the cap 2
    with pytest.raises(InvalidColumn):
        cell_cost(chain_instance(), [0, 2])  # no centroid


def test_candidate_set_is_strict():
    dist = np.array([[0.0, 2.0, 1.0], [2.0, 0.0, 1.5], [1.0, 1.5, 0.0]])
    inst = CellInstance(
        dist=dist,
        area=np.ones(3),
        max_radius=2.0,
        max_area=5.0,
        theta=np.zeros(3),
        phi={},
    )
    # dist(0, 1) == max_radius is excluded; the anchor itself is included.
    assert candidate_set(inst, 0) == [0, 2]
    assert candidate_set(inst, 1) == [1, 2]
    assert candidate_set(inst, 2) == [0, 1, 2]


# ---------------------------------------------------------------- pricing


def sample_cell_rows(rng, n, count=2):
    rows = []
    if n < 3:
        return rows
    for _ in range(count):
        members = tuple(sorted(rng.choice(n, size=3, replace=False)))
        rows.append(TripleRow(members=members, applies_to=CELL))
    return rows


def test_price_cell_matches_bqp_oracle():
    rng = np.random.default_rng(21)
    for trial in range(60):
        inst = random_cell_instance(rng)
        rows = sample_cell_rows(rng, inst.n)
        duals = random_cell_duals(rng, inst.n, rows)
        problem = CellProblem(inst)
        for d_star in range(inst.n):
            col, rc = price_cell(inst, d_star, duals, rows)
            _, want = oracle_rc_cell(inst, d_star, duals, rows)
            if col is None:
                assert want == np.inf
                continue
            assert rc == pytest.approx(want, abs=RC_MATCH_TOL)
            assert d_star in col.elements
            assert col.cost == pytest.approx(cell_cost(inst, col.elements))
            problem.validate_column(col)


def test_price_cell_fixture_at_zero_duals():
    inst = counterexample_instance()
    col, rc = price_cell(inst, 0, zero_duals(3))
    # Best anchored cell is a pair at -4; the triple is area-infeasible.
    assert rc == pytest.approx(-4.0)
    assert len(col.elements) == 2 and 0 in col.elements


def test_price_cell_branch_and_bound_regime():
    # 18 mutually close super-pixels: the candidate set exceeds the
    # exhaustive kernel limit, so pricing takes the branch-and-bound path.
    rng = np.random.default_rng(22)
    n = 18
    pts = rng.uniform(0.0, 1.0, (n, 2))
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    phi = {}
    for d1 in range(n):
        for d2 in range(d1 + 1, n):
            if rng.random() < 0.4:
                phi[(d1, d2)] = float(rng.uniform(-2.0, 2.0))
    inst = CellInstance(
        dist=dist,
        area=rng.uniform(0.4, 0.9, n),
        max_radius=2.0,
        max_area=2.5,
        theta=rng.uniform(-2.0, 2.0, n),
        phi=phi,
    )
    assert len(candidate_set(inst, 0)) == n > MAX_EXHAUSTIVE
    duals = random_cell_duals(rng, n)
    for d_star in (0, 5, 11):
        col, rc = price_cell(inst, d_star, duals)
        _, want = oracle_rc_cell(inst, d_star, duals)
        assert rc == pytest.approx(want, abs=RC_MATCH_TOL)
        assert col.cost == pytest.approx(cell_cost(inst, col.elements))


def test_price_cell_candidate_cap():
    n = MAX_CANDIDATES + 1
    dist = np.ones((n, n)) - np.eye(n)
    inst = CellInstance(
        dist=dist,
        area=np.ones(n),
        max_radius=2.0,
        max_area=5.0,
        theta=np.zeros(n),
        phi={},
    )
    with pytest.raises(CandidateSetTooLarge):
        price_cell(inst, 0, zero_duals(n))


def test_price_cell_oversized_anchor_returns_inf():
    inst = CellInstance(
        dist=np.array([[0.0, 1.0], [1.0, 0.0]]),
        area=np.array([5.0, 1.0]),
        max_radius=2.0,
        max_area=2.0,
        theta=np.array([-1.0, -1.0]),
        phi={},
    )
    col, rc = price_cell(inst, 0, zero_duals(2))
    assert col is None and rc == np.inf
    # The engine treats the dead anchor as a no-op and still converges.
    state, report, _ = run_colgen(CellProblem(inst), SolveConfig())
    assert state.status == "converged"
    assert report.upper == pytest.approx(-1.0, abs=1e-9)


# ---------------------------------------------------------------- master


def test_build_cell_master_row_structure():
    pool = [
        Column(kind=CELL, elements=(0, 1), global_elements=(), cost=-4.0),
        Column(kind=CELL, elements=(2,), global_elements=(), cost=-1.0),
    ]
    row = TripleRow(members=(0, 1, 2), applies_to=CELL)
    lp = build_cell_master(pool, [row], num_elements=3)
    assert lp.num_rows == 4
    assert np.array_equal(lp.rhs, np.ones(4))
    a = lp.dense()
    assert np.array_equal(a[:, 0], np.array([1.0, 1.0, 0.0, 1.0]))
    assert np.array_equal(a[:, 1], np.array([0.0, 0.0, 1.0, 0.0]))
    assert np.array_equal(lp.costs, np.array([-4.0, -1.0]))


def test_cell_problem_rejects_omega_and_foreign_columns():
    problem = CellProblem(counterexample_instance())
    with pytest.raises(ValueError):
        problem.build_master([], [], with_omega=True)
    bad = Column(kind=LOCAL_POSE, elements=(0,), global_elements=(0,), cost=0.0)
    with pytest.raises(InvalidColumn):
        problem.validate_column(bad)
    with pytest.raises(InvalidColumn):
        problem.validate_column(
            Column(kind=CELL, elements=(0, 1, 2), global_elements=(), cost=-5.0)
        )


def test_cell_triples_triangle_scan():
    pool = [
        Column(kind=CELL, elements=(0, 1), global_elements=(), cost=0.0),
        Column(kind=CELL, elements=(0, 2), global_elements=(), cost=0.0),
        Column(kind=CELL, elements=(1, 2), global_elements=(), cost=0.0),
    ]
    rows = cell_triples(pool, np.array([0.5, 0.5, 0.5]), tol=1e-6)
    assert len(rows) == 1
    assert rows[0].members == (0, 1, 2)
    assert rows[0].applies_to == CELL
    assert cell_triples(pool, np.array([0.5, 0.5, 0.0]), tol=1e-6) == []


# ---------------------------------------------------------------- end to end


def test_empty_instance_converges_at_zero():
    inst = CellInstance(
        dist=np.zeros((0, 0)),
        area=np.zeros(0),
        max_radius=1.0,
        max_area=1.0,
        theta=np.zeros(0),
        phi={},
    )
    state, report, _ = run_colgen(CellProblem(inst), SolveConfig())
    assert state.status == "converged"
    assert state.iteration == 1
    assert state.lp_objective == 0.0
    assert report.upper == 0.0 and report.lower == pytest.approx(0.0, abs=1e-12)


def test_colgen_cell_matches_universe_brute_force():
    rng = np.random.default_rng(23)
    for trial in range(15):
        inst = random_cell_instance(rng)
        state, report, _ = run_colgen(CellProblem(inst), SolveConfig())
        universe = enumerate_universe(inst)
        best, _ = brute_force_setpack(universe.columns)
        assert state.status == "converged"
        assert report.upper == pytest.approx(best, abs=1e-6)
        assert report.lower <= best + 1e-9


def test_colgen_cell_with_offset_matches_offset_universe():
    rng = np.random.default_rng(24)
    for trial in range(8):
        inst = random_cell_instance(rng, max_pixels=6)
        offset = float(rng.uniform(0.0, 1.5))
        state, report, _ = run_colgen(
            CellProblem(inst, cost_offset=offset), SolveConfig(cost_offset=offset)
        )
        universe = enumerate_universe(inst, cost_offset=offset)
        best, _ = brute_force_setpack(universe.columns)
        assert state.status == "converged"
        assert report.upper == pytest.approx(best, abs=1e-6)
