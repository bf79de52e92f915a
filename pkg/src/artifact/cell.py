"""Crowded-cell instance segmentation as set packing over super-pixels.

Ground elements are super-pixels with pairwise distances and areas. A column
is one candidate cell: a set of super-pixels that (a) fits inside a ball, in
the sense that some member (the centroid) is strictly within max_radius of
every member, and (b) has total member area at most max_area. Its cost is

    Gamma_q = sum_d theta_d + sum_{pairs} phi + cost_offset.

The master has one packing row per super-pixel plus optional size-3 rows.
Pricing is anchored at a centroid candidate d*: the search space is every
subset of {d : dist(d*, d) < max_radius} containing d*, enumerated exactly
through the kernels module up to 16 candidates and by branch and bound up to
24, beyond which the anchor is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CandidateSetTooLarge, InvalidColumn, ValidationError
from .master import CELL, Column, DualVector, TripleRow
from .lp import LinearProgram

# Exhaustive enumeration bound and the hard pricing cap.
MAX_EXHAUSTIVE = 16
MAX_CANDIDATES = 24


@dataclass
class CellInstance:
    """Super-pixels with distances, areas, and potentials.

    dist: symmetric nonnegative matrix with zero diagonal. area: positive per
    super-pixel. max_radius bounds the centroid-to-member distance strictly;
    max_area bounds the summed member area. phi: {(d1, d2): potential}, any
    pair allowed.
    """

    dist: np.ndarray
    area: np.ndarray
    max_radius: float
    max_area: float
    theta: np.ndarray
    phi: dict

    def __post_init__(self) -> None:
        self.dist = np.asarray(self.dist, dtype=np.float64)
        self.area = np.asarray(self.area, dtype=np.float64)
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.ndim != 1:
            raise ValidationError("theta must be one dimensional")
        # n == 0 is legal: an empty instance solves to the empty packing.
        n = self.theta.shape[0]
        if n == 0 and self.dist.size == 0:
            self.dist = self.dist.reshape(0, 0)
        if self.dist.shape != (n, n):
            raise ValidationError("dist must be n x n")
        if not np.all(np.isfinite(self.dist)) or (self.dist < 0).any():
            raise ValidationError("dist must be finite and nonnegative")
        if not np.allclose(self.dist, self.dist.T, atol=1e-12):
            raise ValidationError("dist must be symmetric")
        if n and np.abs(np.diag(self.dist)).max() > 0:
            raise ValidationError("dist diagonal must be zero")
        if self.area.shape != (n,) or (self.area <= 0).any() or not np.all(
            np.isfinite(self.area)
        ):
            raise ValidationError("area must be positive with one entry per super-pixel")
        if not np.all(np.isfinite(self.theta)):
            raise ValidationError("theta must be finite")
        self.max_radius = float(self.max_radius)
        self.max_area = float(self.max_area)
        if not (self.max_radius > 0 and np.isfinite(self.max_radius)):
            raise ValidationError("max_radius must be positive and finite")
        if not (self.max_area > 0 and np.isfinite(self.max_area)):
            raise ValidationError("max_area must be positive and finite")
        norm: dict[tuple[int, int], float] = {}
        for key, value in self.phi.items():
            d1, d2 = int(key[0]), int(key[1])
            if not (0 <= d1 < n and 0 <= d2 < n) or d1 == d2:
                raise ValidationError(f"bad phi pair ({d1}, {d2})")
            if not np.isfinite(value):
                raise ValidationError(f"non-finite phi at ({d1}, {d2})")
            k = (d1, d2) if d1 < d2 else (d2, d1)
            if k in norm and norm[k] != float(value):
                raise ValidationError(f"conflicting phi values for pair {k}")
            norm[k] = float(value)
        self.phi = norm

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    def phi_of(self, d1: int, d2: int) -> float:
        if d1 == d2:
            return 0.0
        k = (d1, d2) if d1 < d2 else (d2, d1)
        return self.phi.get(k, 0.0)


def candidate_set(instance: CellInstance, d_star: int) -> list[int]:
    """Super-pixels strictly within max_radius of d_star, d_star included."""
    return [int(d) for d in np.flatnonzero(instance.dist[d_star] < instance.max_radius)]


def cell_cost(instance: CellInstance, elements, cost_offset: float = 0.0) -> float:
    """Gamma_q, after checking the centroid and area invariants."""
    elems = sorted(int(e) for e in elements)
    if not elems:
        raise InvalidColumn("cell with no super-pixels")
    if len(set(elems)) != len(elems):
        raise InvalidColumn("duplicate super-pixels in cell")
    if not all(0 <= d < instance.n for d in elems):
        raise InvalidColumn(f"cell references unknown super-pixels: {elems}")
    has_centroid = any(
        all(instance.dist[c, d] < instance.max_radius for d in elems) for c in elems
    )
    if not has_centroid:
        raise InvalidColumn(f"no member of {elems} is within max_radius of all members")
    if float(instance.area[elems].sum()) > instance.max_area:
        raise InvalidColumn(f"cell {elems} exceeds the area cap")
    total = float(sum(instance.theta[d] for d in elems)) + cost_offset
    for i in range(len(elems)):
        for j in range(i + 1, len(elems)):
            total += instance.phi_of(elems[i], elems[j])
    return total


def _cell_triples_for(cands, triple_rows, triple_duals):
    pos = {d: i for i, d in enumerate(cands)}
    out = []
    for row, w in zip(triple_rows, triple_duals):
        if row.applies_to != CELL or w == 0.0:
            continue
        idx = tuple(pos[m] for m in row.members if m in pos)
        if len(idx) >= 2:
            out.append((idx, w))
    return out


def _price_cell_bnb(lin, quad, sizes, cap, trips, const):
    """Exact include/exclude search over candidate positions, anchor at 0.

    Bound: current value plus every still-undecided negative linear term and
    every negative pairwise term with an undecided endpoint. Size-3 duals are
    nonnegative and ignored by the bound.
    """
    m = lin.shape[0]
    tail_lin = np.zeros(m + 1)
    for i in range(m - 1, 0, -1):
        tail_lin[i] = tail_lin[i + 1] + min(0.0, lin[i])
    pair_bucket = np.zeros(m + 1)
    for i in range(m):
        for j in range(i + 1, m):
            if quad[i, j] < 0.0:
                pair_bucket[j] += quad[i, j]
    tail_pair = np.zeros(m + 2)
    for i in range(m, 0, -1):
        tail_pair[i] = tail_pair[i + 1] + pair_bucket[i]

    trip_members = [set(idx) for idx, _ in trips]
    trip_w = [w for _, w in trips]
    counts = [0] * len(trips)
    chosen: list[int] = []
    best_val = np.inf
    best_mask = 0

    def include_delta(i: int) -> float:
        delta = lin[i]
        for c in chosen:
            delta += quad[c, i]
        return delta

    def dfs(i: int, val: float, used: float, mask: int) -> None:
        nonlocal best_val, best_mask
        if val + tail_lin[i] + tail_pair[i] >= best_val:
            return
        if i == m:
            best_val = val
            best_mask = mask
            return
        if used + sizes[i] <= cap:
            delta = include_delta(i)
            fired = []
            for t, members in enumerate(trip_members):
                if i in members:
                    counts[t] += 1
                    if counts[t] == 2:
                        delta += trip_w[t]
                    fired.append(t)
            chosen.append(i)
            dfs(i + 1, val + delta, used + sizes[i], mask | (1 << i))
            chosen.pop()
            for t in fired:
                counts[t] -= 1
        dfs(i + 1, val, used, mask)

    if sizes[0] > cap:
        return 0, np.inf
    delta0 = lin[0]
    fired0 = []
    for t, members in enumerate(trip_members):
        if 0 in members:
            counts[t] += 1
            fired0.append(t)
    chosen.append(0)
    dfs(1, const + delta0, sizes[0], 1)
    return best_mask, float(best_val)


def price_cell(
    instance: CellInstance,
    d_star: int,
    duals: DualVector,
    triple_rows=(),
    cost_offset: float = 0.0,
) -> tuple[Column | None, float]:
    """Exact minimum reduced cost over cells with centroid d_star.

    reduced cost = Gamma_q + sum_{d in q} lambda_d + active size-3 duals.
    Returns (None, inf) when no feasible cell is anchored at d_star (the
    anchor's own area exceeds the cap).
    """
    cands = candidate_set(instance, d_star)
    if len(cands) > MAX_CANDIDATES:
        raise CandidateSetTooLarge(
            f"anchor {d_star} has {len(cands)} candidates, cap is {MAX_CANDIDATES}"
        )
    # Anchor first so the kernel can pin it; the rest keep ascending order.
    cands = [d_star] + [d for d in cands if d != d_star]
    m = len(cands)
    lam = duals.element["lambda"]
    lin = np.array([instance.theta[d] + lam[d] for d in cands])
    quad = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            v = instance.phi_of(cands[i], cands[j])
            quad[i, j] = v
            quad[j, i] = v
    sizes = np.array([instance.area[d] for d in cands])
    trips = _cell_triples_for(cands, triple_rows, duals.triple)

    if m <= MAX_EXHAUSTIVE:
        mask, val = kernels.enumerate_min(
            lin, quad, 0, sizes=sizes, cap=instance.max_area, triples=trips,
            const=cost_offset,
        )
    else:
        mask, val = _price_cell_bnb(
            lin, quad, sizes, instance.max_area, trips, cost_offset
        )
    if not np.isfinite(val):
        return None, np.inf
    elements = tuple(sorted(cands[i] for i in kernels.mask_to_indices(mask)))
    col = Column(
        kind=CELL,
        elements=elements,
        global_elements=(),
        cost=cell_cost(instance, elements, cost_offset),
        origin_anchor=d_star,
    )
    return col, float(val)


def build_cell_master(pool, triple_rows=(), num_elements: int = 0) -> LinearProgram:
    """Restricted master LP: one packing row per super-pixel (rhs 1), then one
    row per active size-3 row (rhs 1). Pool variables only."""
    n = num_elements
    t = len(triple_rows)
    rhs = np.ones(n + t)
    costs: list[float] = []
    columns: list[list[tuple[int, float]]] = []
    for col in pool:
        if col.kind != CELL:
            raise InvalidColumn(f"cell master got a {col.kind!r} column")
        entries: list[tuple[int, float]] = [(d, 1.0) for d in col.elements]
        for k, row in enumerate(triple_rows):
            if row.coefficient(col):
                entries.append((n + k, 1.0))
        costs.append(col.cost)
        columns.append(entries)
    return LinearProgram(np.asarray(costs), columns, rhs)


def cell_triples(pool, primal, tol) -> list[TripleRow]:
    """Violated size-3 rows at the fractional point.

    Same triangle-scan argument as the pose variant: a violated triple needs
    all three of its pairs to co-occur in active columns, otherwise every
    counted column shares the third super-pixel and its packing row caps the
    activity at 1.
    """
    active = [(col, g) for col, g in zip(pool, primal) if col.kind == CELL and g > 1e-9]
    adj: dict[int, set[int]] = {}
    for col, _ in active:
        els = col.elements
        for i in range(len(els)):
            for j in range(i + 1, len(els)):
                adj.setdefault(els[i], set()).add(els[j])
                adj.setdefault(els[j], set()).add(els[i])
    out = []
    for a in sorted(adj):
        for b in sorted(x for x in adj[a] if x > a):
            for c in sorted(x for x in (adj[a] & adj[b]) if x > b):
                members = {a, b, c}
                activity = sum(
                    g for col, g in active if len(members & set(col.elements)) >= 2
                )
                if activity > 1.0 + tol:
                    out.append(TripleRow(members=(a, b, c), applies_to=CELL))
    return out


class CellProblem:
    """Pricing-problem adapter handed to the column generation engine."""

    def __init__(self, instance: CellInstance, cost_offset: float = 0.0):
        self.instance = instance
        self.cost_offset = float(cost_offset)

    def anchors(self):
        return list(range(self.instance.n))

    def price(self, anchor, duals: DualVector, triple_rows=()):
        return price_cell(self.instance, anchor, duals, triple_rows, self.cost_offset)

    def build_master(self, pool, triple_rows, with_omega: bool = False) -> LinearProgram:
        if with_omega:
            raise ValueError("dual slack bounds are a pose-master feature")
        return build_cell_master(pool, triple_rows, num_elements=self.instance.n)

    def extract_duals(self, solution, pool, triple_rows) -> DualVector:
        n = self.instance.n
        lam = solution.duals
        return DualVector(
            element={"lambda": lam[0:n].copy()},
            triple=lam[n:].copy(),
        )

    def triple_candidates(self, pool, primal, tol):
        return cell_triples(pool, primal, tol)

    def validate_column(self, col: Column) -> None:
        if col.kind != CELL:
            raise InvalidColumn(f"cell problem cannot hold a {col.kind!r} column")
        cell_cost(self.instance, col.elements)
