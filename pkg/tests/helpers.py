"""Shared fixtures: the worked four-column example, small builders, and
independent reduced-cost oracles that restate each pricing problem as an
explicit binary quadratic program."""

import numpy as np

from artifact.cell import CellInstance, build_cell_master
from artifact.master import CELL, GLOBAL_POSE, LOCAL_POSE, Column, DualVector, TripleRow


def counterexample_columns():
    """The four-column universe of the worked example: three pairwise
    overlapping two-element columns at cost -4 and the full three-element
    column at cost -5. Its LP relaxation sits at -6 on the half-integral
    point; the size-3 row lifts it to the integral -5."""
    return [
        Column(kind=CELL, elements=(0, 1), global_elements=(), cost=-4.0),
        Column(kind=CELL, elements=(0, 2), global_elements=(), cost=-4.0),
        Column(kind=CELL, elements=(1, 2), global_elements=(), cost=-4.0),
        Column(kind=CELL, elements=(0, 1, 2), global_elements=(), cost=-5.0),
    ]


def counterexample_row():
    return TripleRow(members=(0, 1, 2), applies_to=CELL)


class AbstractCellProblem:
    """Pool-only problem over hand-built cell columns; enough surface for
    solve_pool_ilp and greedy checks."""

    def __init__(self, num_elements):
        self.num_elements = num_elements

    def build_master(self, pool, triple_rows, with_omega=False):
        return build_cell_master(pool, triple_rows, num_elements=self.num_elements)

    def validate_column(self, col):
        return None


def counterexample_instance():
    """Realizable three-super-pixel instance whose pair columns reproduce the
    worked example's fractional point: theta -1, phi -2, unit areas, area cap
    2 (the full triple is area-infeasible)."""
    dist = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
    return CellInstance(
        dist=dist,
        area=np.ones(3),
        max_radius=2.0,
        max_area=2.0,
        theta=-np.ones(3),
        phi={(0, 1): -2.0, (0, 2): -2.0, (1, 2): -2.0},
    )


def random_pose_instance(rng, max_parts=4, max_kps=3, n_global=1):
    """Seeded pose instance in the acceptance-suite regime: chain part tree,
    potentials uniform on [-3, 3], phi on a random subset of allowed pairs."""
    from artifact.pose import PoseInstance

    parts = [f"p{i}" for i in range(1 + int(rng.integers(0, max_parts)))]
    tree = [(parts[i], parts[i + 1]) for i in range(len(parts) - 1)]
    counts = [1 + int(rng.integers(0, max_kps)) for _ in parts]
    part_of = [parts[r] for r in range(len(parts)) for _ in range(counts[r])]
    n = len(part_of)
    n_global = min(n_global, len(parts))
    global_parts = frozenset(parts[:n_global])
    theta = rng.uniform(-3.0, 3.0, n)
    phi = {}
    for d1 in range(n):
        for d2 in range(d1 + 1, n):
            r1, r2 = part_of[d1], part_of[d2]
            allowed = (
                r1 == r2
                or (r1, r2) in tree
                or (r2, r1) in tree
                or parts[0] in (r1, r2)
            )
            if allowed and rng.random() < 0.7:
                phi[(d1, d2)] = float(rng.uniform(-3.0, 3.0))
    return PoseInstance(
        parts=parts,
        part_of=part_of,
        global_parts=global_parts,
        theta=theta,
        phi=phi,
        part_tree=tree,
    )


def random_cell_instance(rng, max_pixels=8):
    """Seeded cell instance: points in a box, potentials uniform on [-3, 3]."""
    n = 2 + int(rng.integers(0, max_pixels - 1))
    pts = rng.uniform(0.0, 4.0, (n, 2))
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    phi = {}
    for d1 in range(n):
        for d2 in range(d1 + 1, n):
            if dist[d1, d2] < 2.0 and rng.random() < 0.7:
                phi[(d1, d2)] = float(rng.uniform(-3.0, 3.0))
    return CellInstance(
        dist=dist,
        area=rng.uniform(0.5, 1.5, n),
        max_radius=2.0,
        max_area=float(rng.uniform(1.5, 3.5)),
        theta=rng.uniform(-3.0, 3.0, n),
        phi=phi,
    )


def random_pose_duals(rng, n, triple_rows=(), scale=2.0):
    return DualVector(
        element={
            "lambda1": rng.uniform(0.0, scale, n),
            "lambda2": rng.uniform(0.0, scale, n),
            "lambda3": rng.uniform(0.0, scale, n),
        },
        triple=rng.uniform(0.0, scale, len(triple_rows)),
    )


def random_cell_duals(rng, n, triple_rows=(), scale=2.0):
    return DualVector(
        element={"lambda": rng.uniform(0.0, scale, n)},
        triple=rng.uniform(0.0, scale, len(triple_rows)),
    )


def _fold_triple(free_idx, anchored, w, lin, quad, triples):
    """Push one size-3 row term w * [>= 2 members selected] into BQP pieces.

    free_idx: sorted variable indices of the row's free members; anchored:
    1 when the pinned anchor is itself a member (it always counts as
    selected), else 0. With the anchor in, the row fires as soon as one free
    member joins: w*(x_a + x_b - x_a x_b). Without it, two must join.
    """
    if anchored:
        if len(free_idx) == 1:
            lin[free_idx[0]] += w
        elif len(free_idx) == 2:
            a, b = free_idx
            lin[a] += w
            lin[b] += w
            quad[(a, b)] = quad.get((a, b), 0.0) - w
    else:
        if len(free_idx) == 2:
            a, b = free_idx
            quad[(a, b)] = quad.get((a, b), 0.0) + w
        elif len(free_idx) == 3:
            triples.append((tuple(free_idx), w))


def oracle_rc_local(instance, d_star, duals, triple_rows=()):
    """Minimum local-pose reduced cost at anchor d_star, restated as a BQP
    over the part's other key-points and solved by enumeration. Returns
    (elements, reduced cost)."""
    from artifact.exact import exhaustive_bqp

    part = instance.part_of[d_star]
    others = [d for d in instance.kps_of_part[part] if d != d_star]
    lam1 = duals.element["lambda1"]
    lam2 = duals.element["lambda2"]
    lam3 = duals.element["lambda3"]
    lin = np.array(
        [
            instance.theta[d] + lam1[d] + lam2[d] + instance.phi_of(d_star, d)
            for d in others
        ]
    )
    pos = {d: i for i, d in enumerate(others)}
    quad: dict[tuple[int, int], float] = {}
    triples: list[tuple[tuple, float]] = []
    for i in range(len(others)):
        for j in range(i + 1, len(others)):
            v = instance.phi_of(others[i], others[j])
            if v:
                quad[(i, j)] = v
    for row, w in zip(triple_rows, duals.triple):
        if row.applies_to != LOCAL_POSE or w == 0.0:
            continue
        free = sorted(pos[m] for m in row.members if m in pos)
        _fold_triple(free, int(d_star in row.members), w, lin, quad, triples)
    sel, val = exhaustive_bqp(lin, quad or None, triples=triples)
    elements = tuple(sorted([d_star] + [others[i] for i in sel]))
    return elements, float(lam2[d_star] + lam3[d_star] + val)


def oracle_rc_global(instance, d_star, duals, triple_rows=(), cost_offset=0.0):
    """Minimum global-pose reduced cost at anchor d_star: one variable per
    key-point on the other parts, at most one selected per part."""
    from artifact.exact import exhaustive_bqp

    r0 = instance.part_of[d_star]
    free = [d for d in range(instance.n) if instance.part_of[d] != r0]
    lam1 = duals.element["lambda1"]
    lam3 = duals.element["lambda3"]
    lin = np.array(
        [
            instance.theta[d] + lam1[d] - lam3[d] + instance.phi_of(d_star, d)
            for d in free
        ]
    )
    pos = {d: i for i, d in enumerate(free)}
    quad: dict[tuple[int, int], float] = {}
    triples: list[tuple[tuple, float]] = []
    for i in range(len(free)):
        for j in range(i + 1, len(free)):
            v = instance.phi_of(free[i], free[j])
            if v:
                quad[(i, j)] = v
    for row, w in zip(triple_rows, duals.triple):
        if row.applies_to != GLOBAL_POSE or w == 0.0:
            continue
        mem = sorted(pos[m] for m in row.members if m in pos)
        _fold_triple(mem, int(d_star in row.members), w, lin, quad, triples)

    def one_per_part(chosen):
        parts = [instance.part_of[free[i]] for i in chosen]
        return len(parts) == len(set(parts))

    sel, val = exhaustive_bqp(lin, quad or None, triples=triples, feasible=one_per_part)
    base = instance.theta[d_star] + lam1[d_star] - lam3[d_star] + cost_offset
    elements = tuple(sorted([d_star] + [free[i] for i in sel]))
    return elements, float(base + val)


def oracle_rc_cell(instance, d_star, duals, triple_rows=(), cost_offset=0.0):
    """Minimum cell reduced cost at anchor d_star over super-pixels strictly
    within max_radius, subject to the area cap."""
    from artifact.exact import exhaustive_bqp

    if instance.area[d_star] > instance.max_area:
        return None, np.inf
    others = [
        d
        for d in range(instance.n)
        if d != d_star and instance.dist[d_star, d] < instance.max_radius
    ]
    lam = duals.element["lambda"]
    lin = np.array(
        [instance.theta[d] + lam[d] + instance.phi_of(d_star, d) for d in others]
    )
    pos = {d: i for i, d in enumerate(others)}
    quad: dict[tuple[int, int], float] = {}
    triples: list[tuple[tuple, float]] = []
    for i in range(len(others)):
        for j in range(i + 1, len(others)):
            v = instance.phi_of(others[i], others[j])
            if v:
                quad[(i, j)] = v
    for row, w in zip(triple_rows, duals.triple):
        if row.applies_to != CELL or w == 0.0:
            continue
        mem = sorted(pos[m] for m in row.members if m in pos)
        _fold_triple(mem, int(d_star in row.members), w, lin, quad, triples)
    cap = instance.max_area - instance.area[d_star]

    def within_area(chosen):
        return sum(instance.area[others[i]] for i in chosen) <= cap

    sel, val = exhaustive_bqp(lin, quad or None, triples=triples, feasible=within_area)
    base = instance.theta[d_star] + lam[d_star] + cost_offset
    elements = tuple(sorted([d_star] + [others[i] for i in sel]))
    return elements, float(base + val)
