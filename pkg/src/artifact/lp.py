"""Dense two-phase simplex for the restricted master problems.

Solves

    min  c^t x   s.t.   A x <= b,   x >= 0

and reports, next to the optimal primal vector, nonnegative row multipliers
lambda following the sign convention the pricing code expects:

    reduced cost of variable j  =  c_j + sum_i lambda_i A_ij  >= 0  at optimum,
    dual objective              =  - b^t lambda  =  c^t x.

lambda is the negation of the textbook dual of the <= system, which is what
makes the pricing formulas additive in the multipliers. Solutions are
deterministic: identical input yields a bit-identical LpSolution under the
fixed pivot rule (Dantzig by most negative reduced cost, switching to Bland's
rule after a run of degenerate pivots).

Sizes here are desk scale (hundreds of rows and columns), so the tableau is
dense and the final primal/dual pair is recomputed from the optimal basis with
a direct solve to shed accumulated pivot drift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NumericalBreakdown

# Feasibility and optimality tolerances for the simplex itself. The master
# engine layers its own looser tolerances (1e-6) on top of these.
FEAS_TOL = 1e-7
RC_TOL = 1e-7
PIVOT_TOL = 1e-11
RATIO_TIE_TOL = 1e-9
# Consecutive degenerate pivots tolerated before switching to Bland's rule.
DEGENERATE_LIMIT = 200


@dataclass
class LinearProgram:
    """min costs^t x  s.t.  (sparse columns) x <= rhs,  x >= 0.

    columns[j] lists the (row index, coefficient) entries of variable j.
    Duplicate row entries within one column are summed.
    """

    costs: np.ndarray
    columns: list[list[tuple[int, float]]]
    rhs: np.ndarray

    def __post_init__(self) -> None:
        self.costs = np.asarray(self.costs, dtype=np.float64)
        self.rhs = np.asarray(self.rhs, dtype=np.float64)
        if self.costs.ndim != 1 or self.rhs.ndim != 1:
            raise DimensionMismatch("costs and rhs must be one dimensional")
        if len(self.columns) != self.costs.shape[0]:
            raise DimensionMismatch(
                f"{len(self.columns)} columns for {self.costs.shape[0]} costs"
            )
        if not np.all(np.isfinite(self.costs)) or not np.all(np.isfinite(self.rhs)):
            raise DimensionMismatch("non-finite cost or rhs entry")
        m = self.rhs.shape[0]
        for j, col in enumerate(self.columns):
            for row, coef in col:
                if not 0 <= row < m:
                    raise DimensionMismatch(f"column {j} touches row {row}, have {m} rows")
                if not np.isfinite(coef):
                    raise DimensionMismatch(f"column {j} has a non-finite coefficient")

    @property
    def num_vars(self) -> int:
        return self.costs.shape[0]

    @property
    def num_rows(self) -> int:
        return self.rhs.shape[0]

    def dense(self) -> np.ndarray:
        a = np.zeros((self.num_rows, self.num_vars))
        for j, col in enumerate(self.columns):
            for row, coef in col:
                a[row, j] += coef
        return a


def from_dense(costs, a, rhs) -> LinearProgram:
    """Build a LinearProgram from a dense constraint matrix."""
    a = np.asarray(a, dtype=np.float64)
    columns: list[list[tuple[int, float]]] = []
    for j in range(a.shape[1]):
        rows = np.flatnonzero(a[:, j])
        columns.append([(int(i), float(a[i, j])) for i in rows])
    return LinearProgram(np.asarray(costs, dtype=np.float64), columns, rhs)


@dataclass
class LpSolution:
    """status is one of "optimal", "infeasible", "unbounded".

    primal and duals are None unless optimal; objective is nan when
    infeasible and -inf when unbounded. duals are the nonnegative
    multipliers described in the module docstring.
    """

    status: str
    primal: np.ndarray | None
    duals: np.ndarray | None
    objective: float


def _reset_objective_row(tab: np.ndarray, basis: np.ndarray, costs: np.ndarray) -> None:
    # Row 0 carries (reduced costs | -objective); rebuilt from scratch so a
    # phase switch cannot inherit stale entries.
    tab[0, :-1] = costs
    tab[0, -1] = 0.0
    for i, b in enumerate(basis):
        if costs[b] != 0.0:
            tab[0, :] -= costs[b] * tab[i + 1, :]


def _pivot(tab: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    piv = tab[row + 1, col]
    tab[row + 1, :] /= piv
    pivrow = tab[row + 1, :]
    for i in range(tab.shape[0]):
        if i != row + 1:
            f = tab[i, col]
            if f != 0.0:
                tab[i, :] -= f * pivrow
    basis[row] = col


def _run_simplex(tab: np.ndarray, basis: np.ndarray, allowed: np.ndarray) -> str:
    """Pivot tab to optimality. Returns "optimal" or "unbounded"."""
    m = tab.shape[0] - 1
    k = tab.shape[1] - 1
    if k == 0:
        return "optimal"
    degenerate_run = 0
    bland = False
    max_pivots = 10000 + 50 * (m + k)
    for _ in range(max_pivots):
        rc = tab[0, :k]
        if bland:
            ent = -1
            for j in range(k):
                if allowed[j] and rc[j] < -RC_TOL:
                    ent = j
                    break
            if ent < 0:
                return "optimal"
        else:
            masked = np.where(allowed, rc, np.inf)
            ent = int(np.argmin(masked))
            if masked[ent] >= -RC_TOL:
                return "optimal"

        col = tab[1:, ent]
        usable = col > PIVOT_TOL
        if not usable.any():
            if (col > 0.0).any():
                # Positive entries exist but all below the stability floor:
                # cannot certify unboundedness, cannot pivot safely.
                raise NumericalBreakdown(
                    f"all candidate pivots in column {ent} below {PIVOT_TOL}"
                )
            return "unbounded"
        ratios = np.full(m, np.inf)
        ratios[usable] = tab[1:, k][usable] / col[usable]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + RATIO_TIE_TOL)
        if bland:
            lv = int(ties[np.argmin(basis[ties])])
        else:
            lv = int(ties[np.argmax(col[ties])])

        if best <= RATIO_TIE_TOL:
            degenerate_run += 1
            if degenerate_run >= DEGENERATE_LIMIT:
                bland = True
        else:
            degenerate_run = 0
        _pivot(tab, basis, lv, ent)
    raise NumericalBreakdown(f"no convergence within {max_pivots} pivots")


def solve(lp: LinearProgram) -> LpSolution:
    """Two-phase dense simplex. See the module docstring for conventions."""
    n = lp.num_vars
    m = lp.num_rows
    a = lp.dense()
    b = lp.rhs.copy()
    c = lp.costs

    # Rows with negative rhs are negated so every tableau rhs starts >= 0;
    # sigma records the flip so the original-row multipliers come back out.
    sigma = np.where(b < 0.0, -1.0, 1.0)
    a = a * sigma[:, None]
    b = b * sigma
    art_rows = np.flatnonzero(sigma < 0.0)
    n_art = art_rows.shape[0]

    # Full variable order: structural, slack, artificial.
    ncols = n + m + n_art
    full = np.zeros((m, ncols))
    full[:, :n] = a
    full[np.arange(m), n + np.arange(m)] = sigma
    for t, i in enumerate(art_rows):
        full[i, n + m + t] = 1.0

    tab = np.zeros((m + 1, ncols + 1))
    tab[1:, :ncols] = full
    tab[1:, -1] = b
    basis = np.empty(m, dtype=np.int64)
    basis[:] = n + np.arange(m)
    for t, i in enumerate(art_rows):
        basis[i] = n + m + t

    allowed = np.ones(ncols, dtype=bool)

    if n_art > 0:
        phase1 = np.zeros(ncols)
        phase1[n + m:] = 1.0
        _reset_objective_row(tab, basis, phase1)
        status = _run_simplex(tab, basis, allowed)
        if status != "optimal":
            raise NumericalBreakdown("phase 1 did not terminate at an optimum")
        if -tab[0, -1] > FEAS_TOL:
            return LpSolution("infeasible", None, None, float("nan"))
        # Drive basic artificials out where a structural or slack pivot
        # exists; rows without one are redundant and keep the artificial
        # basic at level zero.
        for i in range(m):
            if basis[i] >= n + m:
                row = tab[i + 1, :n + m]
                cand = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                if cand.size:
                    _pivot(tab, basis, i, int(cand[0]))
        allowed[n + m:] = False

    phase2 = np.zeros(ncols)
    phase2[:n] = c
    _reset_objective_row(tab, basis, phase2)
    status = _run_simplex(tab, basis, allowed)
    if status == "unbounded":
        return LpSolution("unbounded", None, None, float("-inf"))

    # Recompute the primal/dual pair from the final basis against the
    # unpivoted data: one direct solve instead of accumulated tableau error.
    basis_cols = full[:, basis] if m else np.zeros((0, 0))
    if m:
        try:
            xb = np.linalg.solve(basis_cols, b)
            y = np.linalg.solve(basis_cols.T, phase2[basis])
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown("final basis matrix is singular") from exc
    else:
        xb = np.zeros(0)
        y = np.zeros(0)
    x = np.zeros(n)
    for i, bi in enumerate(basis):
        if bi < n:
            x[bi] = xb[i]
    x[np.abs(x) < 1e-12] = 0.0
    lam = -sigma * y
    lam[np.abs(lam) < 1e-12] = 0.0
    # The stopping rule certifies slack reduced costs >= -RC_TOL, so any
    # residual negative multiplier is pivot noise; snap it to zero.
    lam[(lam < 0.0) & (lam > -1e-6)] = 0.0
    objective = float(c @ x) if n else 0.0
    return LpSolution("optimal", x, lam, objective)
