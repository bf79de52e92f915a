"""Column generation engine for maximum-weight set packing masters.

The engine is generic over a pricing problem object (pose or cell) that knows
how to build its restricted master LP, extract structured duals, price columns
at an anchor, and propose violated size-3 (clique) rows. One engine iteration:

    solve restricted LP -> duals -> exact pricing sweep over all anchors
      -> add every column with reduced cost < -tol
      -> if none, scan for violated size-3 rows and add those
      -> if neither, converged.

Alongside the LP value the engine maintains anytime bounds: a lower bound from
the duals plus the pricing minima, and an upper bound from greedy rounding of
the fractional solution (sharpened at the end by an exact branch-and-bound
over the generated pool).

A pricing problem provides:

    anchors() -> list of anchor descriptors, fixed order
    price(anchor, duals, triple_rows) -> (Column, reduced cost), exact minimum
    build_master(pool, triple_rows, with_omega) -> lp.LinearProgram, pool
        variables first, then any slack variables
    extract_duals(solution, pool, triple_rows) -> DualVector
    triple_candidates(pool, primal, tol) -> violated TripleRow list
    validate_column(column) -> None, raises InvalidColumn
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import lp
from .errors import InvalidColumn, NumericalBreakdown

GLOBAL_POSE = "global_pose"
LOCAL_POSE = "local_pose"
CELL = "cell"
COLUMN_KINDS = (GLOBAL_POSE, LOCAL_POSE, CELL)

# A column prices in iff its reduced cost is below -COLUMN_VIOLATION_TOL; a
# size-3 row is violated iff its activity exceeds 1 + COLUMN_VIOLATION_TOL.
COLUMN_VIOLATION_TOL = 1e-6
# Primal entries this close to an integer are treated as integral.
INTEGRALITY_TOL = 1e-6
DEFAULT_NODE_BUDGET = 1_000_000


@dataclass(frozen=True)
class Column:
    """One set-packing variable.

    elements: the ground elements the column touches (key-points or
    super-pixels), sorted. global_elements: for a global pose, all of its
    elements; for a local pose, exactly the one key-point it labels global;
    for a cell, empty. cost: full column cost including any offset that
    applies to its kind. origin_anchor: the pricing anchor that produced it
    (bookkeeping only, not part of identity).
    """

    kind: str
    elements: tuple[int, ...]
    global_elements: tuple[int, ...]
    cost: float
    origin_anchor: int = -1

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", tuple(sorted(int(e) for e in self.elements)))
        object.__setattr__(
            self, "global_elements", tuple(sorted(int(e) for e in self.global_elements))
        )
        if self.kind not in COLUMN_KINDS:
            raise InvalidColumn(f"unknown column kind {self.kind!r}")
        if not self.elements:
            raise InvalidColumn("column with no elements")
        if len(set(self.elements)) != len(self.elements):
            raise InvalidColumn("duplicate elements in column")
        if not set(self.global_elements) <= set(self.elements):
            raise InvalidColumn("global elements not a subset of elements")
        if self.kind == GLOBAL_POSE and self.global_elements != self.elements:
            raise InvalidColumn("global pose must label every element global")
        if self.kind == LOCAL_POSE and len(self.global_elements) != 1:
            raise InvalidColumn("local pose must label exactly one element global")
        if self.kind == CELL and self.global_elements:
            raise InvalidColumn("cell columns have no global elements")
        if not np.isfinite(self.cost):
            raise InvalidColumn("non-finite column cost")

    def key(self) -> tuple:
        return (self.kind, self.elements, self.global_elements)

    def local_elements(self) -> tuple[int, ...]:
        """The elements the column claims in the family-1 packing rows."""
        if self.kind == LOCAL_POSE:
            g = self.global_elements[0]
            return tuple(e for e in self.elements if e != g)
        return self.elements


@dataclass(frozen=True)
class TripleRow:
    """Size-3 row: columns of kind applies_to holding >= 2 of members sum <= 1."""

    members: tuple[int, int, int]
    applies_to: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(sorted(int(m) for m in self.members)))
        if len(self.members) != 3 or len(set(self.members)) != 3:
            raise InvalidColumn(f"size-3 row needs 3 distinct members, got {self.members}")
        if self.applies_to not in COLUMN_KINDS:
            raise InvalidColumn(f"unknown row kind {self.applies_to!r}")

    def key(self) -> tuple:
        return (self.members, self.applies_to)

    def coefficient(self, col: Column) -> int:
        if col.kind != self.applies_to:
            return 0
        return 1 if len(set(self.members) & set(col.elements)) >= 2 else 0


@dataclass
class DualVector:
    """Structured nonnegative multipliers of one master solve.

    element maps family name to a per-element array (pose: lambda1, lambda2,
    lambda3; cell: lambda). triple holds one multiplier per active size-3 row,
    aligned with the engine's row list. bound_base is the rhs-weighted sum
    -sum_i lambda_i b_i over all master rows, i.e. the LP dual objective; it
    seeds the anytime lower bound. Rows with zero rhs contribute nothing to
    it.
    """

    element: dict[str, np.ndarray]
    triple: np.ndarray
    bound_base: float = 0.0


@dataclass
class TraceRecord:
    iteration: int
    lp_objective: float
    lower: float
    upper: float
    columns_added: int
    rows_added: int
    wall_time: float
    # Diagnostics observed by the duality and slack acceptance checks.
    duality_gap: float
    comp_slack: float
    omega_max: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MasterState:
    pool: list[Column] = field(default_factory=list)
    triple_rows: list[TripleRow] = field(default_factory=list)
    primal: np.ndarray = field(default_factory=lambda: np.zeros(0))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals: DualVector | None = None
    lp_objective: float = 0.0
    iteration: int = 0
    status: str = "new"
    pool_keys: set = field(default_factory=set, repr=False)


@dataclass
class BoundsReport:
    lower: float
    upper: float
    upper_solution: list[Column]
    normalized_gap: float
    upper_exact: bool = True


@dataclass
class SolveConfig:
    use_triples: bool = True
    use_omega_bounds: bool = False
    column_violation_tol: float = COLUMN_VIOLATION_TOL
    max_iterations: int = 200
    cost_offset: float = 0.0
    rng_seed: int = 0
    jobs: int = 1
    node_budget: int = DEFAULT_NODE_BUDGET


@dataclass
class PoolIlpResult:
    value: float
    selection: list[int]
    exact: bool
    nodes: int


def columns_conflict(a: Column, b: Column) -> bool:
    """True when no feasible integral selection contains both columns.

    Two non-local columns conflict iff they share an element (packing rows).
    Two local poses conflict iff they share an element, global or not (the
    per-element family-2 rows count both memberships). A local and a global
    pose conflict iff the global pose claims one of the local pose's
    non-global elements; sharing only the local's global element is the
    compatible covering configuration.
    """
    if (a.kind == LOCAL_POSE) != (b.kind == LOCAL_POSE):
        loc, other = (a, b) if a.kind == LOCAL_POSE else (b, a)
        return bool(set(loc.local_elements()) & set(other.elements))
    return bool(set(a.elements) & set(b.elements))


def selection_feasible(columns: list[Column], triple_rows=()) -> bool:
    """Integral feasibility of a set of columns under every master family."""
    for i in range(len(columns)):
        for j in range(i + 1, len(columns)):
            if columns_conflict(columns[i], columns[j]):
                return False
    covered = set()
    for col in columns:
        if col.kind == GLOBAL_POSE:
            covered.update(col.elements)
    for col in columns:
        if col.kind == LOCAL_POSE and col.global_elements[0] not in covered:
            return False
    for row in triple_rows:
        if sum(row.coefficient(col) for col in columns) > 1:
            return False
    return True


def selection_cost(columns: list[Column]) -> float:
    return float(sum(col.cost for col in columns))


def add_columns(state: MasterState, columns, problem=None) -> int:
    """Append new columns to the pool, skipping duplicates. Returns the count."""
    added = 0
    for col in columns:
        k = col.key()
        if k in state.pool_keys:
            continue
        if problem is not None:
            problem.validate_column(col)
        state.pool.append(col)
        state.pool_keys.add(k)
        added += 1
    return added


def compute_lower_bound(duals: DualVector, pricing_minima) -> float:
    """Anytime lower bound on the integral optimum.

    bound = -sum_i lambda_i b_i + sum_anchors min(0, pricing minimum).

    Valid for any nonnegative duals: a feasible integral selection x has
    cost c^t x = sum_q x_q rc_q - lambda^t A x >= sum_q x_q rc_q - lambda^t b,
    and the selected columns map injectively to pricing anchors (disjoint
    cells to their centroids, disjoint global poses to one of their global
    key-points, local poses to their distinct global elements), so the rc sum
    is at least the sum of the per-anchor minima clipped at zero. At converged
    duals every minimum is ~0 and the bound meets the LP value.
    """
    total = duals.bound_base
    for v in pricing_minima:
        if v < 0.0:
            total += v
    return float(total)


def round_greedy(pool: list[Column], primal) -> list[int]:
    """Greedy rounding of a feasible fractional point to an integral selection.

    Repeatedly fixes the column minimizing cost_q gamma_q minus the fractional
    cost of everything it conflicts with, zeroes the conflicting columns, and
    continues until nothing fractional remains. Local poses whose global
    element ends up uncovered are dropped at the end. Returns sorted pool
    indices.
    """
    n = len(pool)
    g = np.asarray(primal, dtype=np.float64).copy()
    if g.shape[0] != n:
        raise InvalidColumn(f"primal has {g.shape[0]} entries for pool of {n}")
    g[np.abs(g) < 1e-9] = 0.0
    conflicts: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if columns_conflict(pool[i], pool[j]):
                conflicts[i].append(j)
                conflicts[j].append(i)
    fixed = np.zeros(n, dtype=bool)
    while True:
        fractional = np.flatnonzero((g > 1e-9) & (g < 1.0 - 1e-9))
        if fractional.size == 0:
            break
        best_j = -1
        best_score = np.inf
        for j in range(n):
            if fixed[j] or g[j] <= 1e-9:
                continue
            score = pool[j].cost * g[j]
            for k in conflicts[j]:
                if g[k] > 1e-9:
                    score -= g[k] * pool[k].cost
            if score < best_score:
                best_score = score
                best_j = j
        if best_j < 0:
            break
        fixed[best_j] = True
        g[best_j] = 1.0
        for k in conflicts[best_j]:
            g[k] = 0.0
    selection = [j for j in range(n) if g[j] > 0.5]
    covered: set[int] = set()
    for j in selection:
        if pool[j].kind == GLOBAL_POSE:
            covered.update(pool[j].elements)
    return [
        j
        for j in selection
        if pool[j].kind != LOCAL_POSE or pool[j].global_elements[0] in covered
    ]


def find_violated_triples(problem, pool, primal, triple_rows, tol=COLUMN_VIOLATION_TOL):
    """Size-3 rows violated by the fractional point, minus already-active ones."""
    seen = {row.key() for row in triple_rows}
    out = []
    for row in problem.triple_candidates(pool, primal, tol):
        if row.key() not in seen:
            seen.add(row.key())
            out.append(row)
    return out


def _row_activity(lp_prob: lp.LinearProgram, x: np.ndarray) -> np.ndarray:
    act = np.zeros(lp_prob.num_rows)
    for j, col in enumerate(lp_prob.columns):
        if x[j] != 0.0:
            for row, coef in col:
                act[row] += coef * x[j]
    return act


def _price_all(problem, anchors, duals, triple_rows, jobs):
    if jobs <= 1 or len(anchors) <= 1:
        return [problem.price(a, duals, triple_rows) for a in anchors]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        futures = [ex.submit(problem.price, a, duals, triple_rows) for a in anchors]
        return [f.result() for f in futures]


def solve_pool_ilp(
    problem,
    pool: list[Column],
    triple_rows=(),
    *,
    node_budget: int = DEFAULT_NODE_BUDGET,
    incumbent: list[int] | None = None,
) -> PoolIlpResult:
    """Exact 0/1 optimum over the pool columns, all master families enforced.

    Depth-first branch and bound with LP bounding. Fixing a column to one
    substitutes it into the right-hand side (family-3 rows can then go
    negative, which the two-phase LP absorbs). Branches on the most
    fractional variable, one-branch first. Returns the incumbent, flagged
    inexact, if the node budget runs out.
    """
    n = len(pool)
    if n == 0:
        return PoolIlpResult(0.0, [], True, 0)
    base = problem.build_master(list(pool), list(triple_rows), with_omega=False)
    a = base.dense()[:, :n]
    b = np.asarray(base.rhs, dtype=np.float64)
    costs = np.asarray([col.cost for col in pool])

    best_sel = sorted(incumbent) if incumbent is not None else []
    best_val = float(costs[best_sel].sum()) if best_sel else 0.0

    nodes = 0
    exact = True
    stack: list[tuple[frozenset, frozenset]] = [(frozenset(), frozenset())]
    while stack:
        if nodes >= node_budget:
            exact = False
            break
        fixed0, fixed1 = stack.pop()
        nodes += 1
        free = [j for j in range(n) if j not in fixed0 and j not in fixed1]
        const = float(costs[sorted(fixed1)].sum()) if fixed1 else 0.0
        rhs = b.copy()
        for j in fixed1:
            rhs -= a[:, j]
        sub = lp.from_dense(costs[free], a[:, free], rhs)
        sol = lp.solve(sub)
        if sol.status == "infeasible":
            continue
        if sol.status != "optimal":
            raise NumericalBreakdown(f"pool ILP node LP ended {sol.status}")
        bound = const + sol.objective
        if bound >= best_val - 1e-9:
            continue
        x = sol.primal
        frac = np.minimum(x, 1.0 - x)
        if free and frac.max() > INTEGRALITY_TOL:
            k = int(np.argmax(frac))
            j = free[k]
            # LIFO stack: push the zero branch first so the one branch pops first.
            stack.append((fixed0 | {j}, fixed1))
            stack.append((fixed0, fixed1 | {j}))
            continue
        chosen = sorted(set(fixed1) | {free[k] for k in np.flatnonzero(x > 0.5)})
        val = float(costs[chosen].sum()) if chosen else 0.0
        if val < best_val - 1e-12:
            best_val = val
            best_sel = chosen
    return PoolIlpResult(best_val, best_sel, exact, nodes)


def run_colgen(problem, config: SolveConfig | None = None):
    """Column/row generation to convergence or the iteration cap.

    Returns (MasterState, BoundsReport, trace list). state.status is
    "converged" or "iteration_limit"; the report's upper bound comes from the
    exact pool search seeded with the last greedy rounding.
    """
    config = config or SolveConfig()
    state = MasterState()
    trace: list[TraceRecord] = []
    anchors = list(problem.anchors())
    tol = config.column_violation_tol
    t0 = time.perf_counter()
    state.status = "iteration_limit"
    last_greedy: list[int] = []

    for it in range(1, config.max_iterations + 1):
        state.iteration = it
        lp_prob = problem.build_master(
            state.pool, state.triple_rows, with_omega=config.use_omega_bounds
        )
        sol = lp.solve(lp_prob)
        if sol.status != "optimal":
            raise NumericalBreakdown(f"master LP ended {sol.status}")
        npool = len(state.pool)
        state.primal = sol.primal[:npool]
        state.omega = sol.primal[npool:]
        state.lp_objective = sol.objective
        duals = problem.extract_duals(sol, state.pool, state.triple_rows)
        duals.bound_base = -float(sol.duals @ lp_prob.rhs)
        state.duals = duals

        results = _price_all(problem, anchors, duals, state.triple_rows, config.jobs)
        minima = [rc for _, rc in results]
        lower = compute_lower_bound(duals, minima)
        last_greedy = round_greedy(state.pool, state.primal)
        upper = selection_cost([state.pool[j] for j in last_greedy])

        activity = _row_activity(lp_prob, sol.primal)
        comp_slack = float(np.max(np.abs(sol.duals * (lp_prob.rhs - activity)), initial=0.0))
        duality_gap = abs(sol.objective - duals.bound_base) / max(1.0, abs(sol.objective))
        omega_max = float(state.omega.max()) if state.omega.size else 0.0

        violated = [col for col, rc in results if rc < -tol]
        added = add_columns(state, violated, problem)
        rows_added = 0
        if added == 0 and config.use_triples:
            new_rows = find_violated_triples(
                problem, state.pool, state.primal, state.triple_rows, tol
            )
            state.triple_rows.extend(new_rows)
            rows_added = len(new_rows)

        trace.append(
            TraceRecord(
                iteration=it,
                lp_objective=state.lp_objective,
                lower=lower,
                upper=upper,
                columns_added=added,
                rows_added=rows_added,
                wall_time=time.perf_counter() - t0,
                duality_gap=duality_gap,
                comp_slack=comp_slack,
                omega_max=omega_max,
            )
        )
        if added == 0 and rows_added == 0:
            state.status = "converged"
            break

    ilp = solve_pool_ilp(
        problem,
        state.pool,
        state.triple_rows,
        node_budget=config.node_budget,
        incumbent=last_greedy,
    )
    if state.status == "converged":
        lower_final = trace[-1].lower
    else:
        lower_final = max(rec.lower for rec in trace) if trace else 0.0
    upper_final = ilp.value
    gap = abs(upper_final - lower_final) / max(abs(lower_final), 1e-12)
    report = BoundsReport(
        lower=lower_final,
        upper=upper_final,
        upper_solution=[state.pool[j] for j in ilp.selection],
        normalized_gap=gap,
        upper_exact=ilp.exact,
    )
    return state, report, trace
