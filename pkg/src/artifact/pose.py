"""Multi-person pose segmentation as set packing over body-part key-points.

Ground elements are key-point detections, each attached to one body part.
Columns come in two kinds. A global pose selects at most one key-point per
part, at least one of them on a designated global (always visible) part set;
its cost is

    Gamma_q = sum_d theta_d + sum_{pairs} phi + cost_offset.

A local pose groups key-points of a single part around exactly one member
labeled global; its cost charges every member's pairwise terms but skips the
global element's unary:

    Psi_q = sum_{d != g} theta_d + sum_{pairs, g included} phi.

The master couples the kinds through three per-key-point row families
(claiming, local membership, and coverage of local global-labels by global
poses) plus optional size-3 rows. Pairwise potentials live on same-part
pairs, part-tree edges, and every pair touching the root part, so the part
graph of a global pose is the tree augmented with root-to-all edges; fixing a
root-part key-point cuts every augmented cycle, which is what makes the tree
DP below exact for root-part anchors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidColumn, PartTooLarge, ValidationError
from .master import (
    GLOBAL_POSE,
    LOCAL_POSE,
    Column,
    DualVector,
    TripleRow,
    compute_lower_bound,
)
from .lp import LinearProgram

# Exhaustive local pricing enumerates subsets of one part's key-points.
MAX_PART_KEYPOINTS = 20
# Scale factor of the strict margin added to every dual bound.
OMEGA_EPSILON_SCALE = 1e-4


@dataclass
class PoseInstance:
    """Key-point detections with unary and pairwise potentials.

    parts: part names, fixed order. part_of: part name per key-point.
    global_parts: parts whose detections may anchor a global pose.
    phi: {(d1, d2): potential} on allowed pairs only (same part, part-tree
    edge, or a pair touching root_part). part_tree: spanning tree over parts.
    root_part: hub of the augmented pairwise structure.
    """

    parts: list[str]
    part_of: list[str]
    global_parts: frozenset
    theta: np.ndarray
    phi: dict
    part_tree: list[tuple[str, str]]
    root_part: str = ""

    # Derived, filled in __post_init__.
    n: int = field(init=False, default=0)
    kps_of_part: dict = field(init=False, default_factory=dict)

    def __post_init__(self) -> None:
        if not self.parts or len(set(self.parts)) != len(self.parts):
            raise ValidationError("parts must be nonempty and unique")
        # Zero key-points is legal: an empty instance solves to the empty
        # packing in one iteration.
        part_set = set(self.parts)
        for r in self.part_of:
            if r not in part_set:
                raise ValidationError(f"key-point on unknown part {r!r}")
        self.global_parts = frozenset(self.global_parts)
        if not self.global_parts or not self.global_parts <= part_set:
            raise ValidationError("global_parts must be a nonempty subset of parts")
        if not self.root_part:
            self.root_part = next(r for r in self.parts if r in self.global_parts)
        if self.root_part not in part_set:
            raise ValidationError(f"unknown root part {self.root_part!r}")

        self.n = len(self.part_of)
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.shape != (self.n,) or not np.all(np.isfinite(self.theta)):
            raise ValidationError("theta must be finite with one entry per key-point")

        if len(self.part_tree) != len(self.parts) - 1:
            raise ValidationError("part_tree must have exactly (num parts - 1) edges")
        adj: dict[str, set[str]] = {r: set() for r in self.parts}
        for p, q in self.part_tree:
            if p not in part_set or q not in part_set or p == q:
                raise ValidationError(f"bad tree edge ({p!r}, {q!r})")
            adj[p].add(q)
            adj[q].add(p)
        stack = [self.parts[0]]
        seen_parts = {self.parts[0]}
        while stack:
            for q in adj[stack.pop()]:
                if q not in seen_parts:
                    seen_parts.add(q)
                    stack.append(q)
        if seen_parts != part_set:
            raise ValidationError("part_tree does not span all parts")
        self._tree_adj = {r: sorted(adj[r]) for r in self.parts}

        self.kps_of_part = {r: [] for r in self.parts}
        for d, r in enumerate(self.part_of):
            self.kps_of_part[r].append(d)

        norm: dict[tuple[int, int], float] = {}
        for key, value in self.phi.items():
            d1, d2 = int(key[0]), int(key[1])
            if not (0 <= d1 < self.n and 0 <= d2 < self.n) or d1 == d2:
                raise ValidationError(f"bad phi pair ({d1}, {d2})")
            if not np.isfinite(value):
                raise ValidationError(f"non-finite phi at ({d1}, {d2})")
            if not self.pair_allowed(self.part_of[d1], self.part_of[d2]):
                raise ValidationError(
                    f"phi pair ({d1}, {d2}) spans parts without a shared edge"
                )
            k = (d1, d2) if d1 < d2 else (d2, d1)
            if k in norm and norm[k] != float(value):
                raise ValidationError(f"conflicting phi values for pair {k}")
            norm[k] = float(value)
        self.phi = norm

    def pair_allowed(self, r1: str, r2: str) -> bool:
        if r1 == r2:
            return True
        if self.root_part in (r1, r2):
            return True
        return r2 in self._tree_adj[r1]

    def phi_of(self, d1: int, d2: int) -> float:
        if d1 == d2:
            return 0.0
        k = (d1, d2) if d1 < d2 else (d2, d1)
        return self.phi.get(k, 0.0)

    def is_global_kp(self, d: int) -> bool:
        return self.part_of[d] in self.global_parts

    def global_kps(self) -> list[int]:
        return [d for d in range(self.n) if self.is_global_kp(d)]


def _pair_sum(instance: PoseInstance, elements) -> float:
    total = 0.0
    elems = sorted(elements)
    for i in range(len(elems)):
        for j in range(i + 1, len(elems)):
            total += instance.phi_of(elems[i], elems[j])
    return total


def global_pose_cost(instance: PoseInstance, elements, cost_offset: float = 0.0) -> float:
    """Gamma_q: unaries plus pairwise potentials plus the offset."""
    elems = sorted(int(e) for e in elements)
    if not elems:
        raise InvalidColumn("global pose with no key-points")
    parts = [instance.part_of[d] for d in elems]
    if len(set(parts)) != len(parts):
        raise InvalidColumn("global pose claims a part twice")
    if not any(r in instance.global_parts for r in parts):
        raise InvalidColumn("global pose without a global-part key-point")
    return float(
        sum(instance.theta[d] for d in elems) + _pair_sum(instance, elems) + cost_offset
    )


def local_pose_cost(instance: PoseInstance, elements, global_element: int) -> float:
    """Psi_q: member unaries except the global element's, all pairwise terms."""
    elems = sorted(int(e) for e in elements)
    g = int(global_element)
    if g not in elems:
        raise InvalidColumn("global element not among the elements")
    parts = {instance.part_of[d] for d in elems}
    if len(parts) != 1:
        raise InvalidColumn("local pose spans more than one part")
    return float(
        sum(instance.theta[d] for d in elems if d != g) + _pair_sum(instance, elems)
    )


def _local_triples_for(cands, triple_rows, triple_duals):
    """(candidate-index tuple, weight) pairs for the kernel, local rows only."""
    pos = {d: i for i, d in enumerate(cands)}
    out = []
    for row, w in zip(triple_rows, triple_duals):
        if row.applies_to != LOCAL_POSE or w == 0.0:
            continue
        idx = tuple(pos[m] for m in row.members if m in pos)
        if len(idx) >= 2:
            out.append((idx, w))
    return out


def price_local(
    instance: PoseInstance, d_star: int, duals: DualVector, triple_rows=()
) -> tuple[Column, float]:
    """Exact minimum reduced cost over local poses with global element d_star.

    reduced cost = (lambda2 + lambda3)_{d*} + sum_{d in L} (theta + lambda1
    + lambda2)_d + pairwise phi + active size-3 duals; minimized by subset
    enumeration over the part's other key-points.
    """
    part = instance.part_of[d_star]
    cands = instance.kps_of_part[part]
    if len(cands) > MAX_PART_KEYPOINTS:
        raise PartTooLarge(f"part {part!r} has {len(cands)} key-points")
    lam1 = duals.element["lambda1"]
    lam2 = duals.element["lambda2"]
    lam3 = duals.element["lambda3"]
    m = len(cands)
    anchor = cands.index(d_star)
    lin = np.empty(m)
    for i, d in enumerate(cands):
        if d == d_star:
            lin[i] = lam2[d] + lam3[d]
        else:
            lin[i] = instance.theta[d] + lam1[d] + lam2[d]
    quad = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            v = instance.phi_of(cands[i], cands[j])
            quad[i, j] = v
            quad[j, i] = v
    trips = _local_triples_for(cands, triple_rows, duals.triple)
    mask, val = kernels.enumerate_min(lin, quad, anchor, triples=trips)
    elements = tuple(cands[i] for i in kernels.mask_to_indices(mask))
    col = Column(
        kind=LOCAL_POSE,
        elements=elements,
        global_elements=(d_star,),
        cost=local_pose_cost(instance, elements, d_star),
        origin_anchor=d_star,
    )
    return col, float(val)


def _bfs_children(instance: PoseInstance):
    root = instance.root_part
    parent = {root: None}
    order = [root]
    for r in order:
        for q in instance._tree_adj[r]:
            if q not in parent:
                parent[q] = r
                order.append(q)
    children = {r: [] for r in instance.parts}
    for r in order[1:]:
        children[parent[r]].append(r)
    return order, children


def _price_global_dp(instance, d_star, unary, cost_offset):
    """Tree DP over part states, exact when the anchor sits on the root part.

    phi(d_star, .) is folded into every non-root part's unaries, which covers
    both the tree edges at the root and all augmentation edges; remaining
    interactions live on tree edges between non-root parts only.
    """
    order, children = _bfs_children(instance)
    states: dict[str, list[int | None]] = {}
    vals: dict[str, np.ndarray] = {}
    choice: dict[tuple[str, str], np.ndarray] = {}
    for r in instance.parts:
        if r == instance.root_part:
            states[r] = [d_star]
        else:
            states[r] = [None] + list(instance.kps_of_part[r])
    for r in reversed(order[1:]):
        sr = states[r]
        base = np.zeros(len(sr))
        for i, s in enumerate(sr):
            if s is not None:
                base[i] = unary[s] + instance.phi_of(d_star, s)
        for c in children[r]:
            sc = states[c]
            vc = vals[c]
            pick = np.zeros(len(sr), dtype=np.int64)
            for i, s in enumerate(sr):
                cand = vc.copy()
                if s is not None:
                    for k, t in enumerate(sc):
                        if t is not None:
                            cand[k] += instance.phi_of(s, t)
                k = int(np.argmin(cand))
                pick[i] = k
                base[i] += cand[k]
            choice[(r, c)] = pick
        vals[r] = base
    total = unary[d_star]
    root_pick: dict[str, int] = {}
    for c in children[instance.root_part]:
        k = int(np.argmin(vals[c]))
        root_pick[c] = k
        total += vals[c][k]

    selected = [d_star]
    stack = [(c, root_pick[c]) for c in children[instance.root_part]]
    while stack:
        r, idx = stack.pop()
        s = states[r][idx]
        if s is not None:
            selected.append(s)
        for c in children[r]:
            stack.append((c, int(choice[(r, c)][idx])))
    return sorted(selected), float(total + cost_offset)


def _price_global_bnb(instance, d_star, unary, trips, cost_offset):
    """Exact search over part assignments; admissible bound from the
    remaining parts' negative unaries plus all negative phi still in play.
    Size-3 duals are nonnegative and ignored by the bound."""
    r0 = instance.part_of[d_star]
    parts_order = [r0] + [r for r in instance.parts if r != r0]
    pos = {r: i for i, r in enumerate(parts_order)}
    k = len(parts_order)

    neg_unary = np.zeros(k)
    for i, r in enumerate(parts_order):
        if i == 0:
            continue
        kps = instance.kps_of_part[r]
        if kps:
            neg_unary[i] = min(0.0, min(unary[d] for d in kps))
    pair_bucket = np.zeros(k)
    for (a, b), v in instance.phi.items():
        if v >= 0.0:
            continue
        ra, rb = instance.part_of[a], instance.part_of[b]
        if ra == rb:
            continue
        if (ra == r0 and a != d_star) or (rb == r0 and b != d_star):
            continue
        pair_bucket[max(pos[ra], pos[rb])] += v
    tail = np.zeros(k + 1)
    for i in range(k - 1, -1, -1):
        tail[i] = tail[i + 1] + neg_unary[i] + pair_bucket[i]

    trip_members = [set(m) for m, _ in trips]
    trip_w = [w for _, w in trips]
    counts = [0] * len(trips)
    chosen: list[int] = []
    best_val = np.inf
    best_sel: list[int] = []

    def dfs(i: int, val: float) -> None:
        nonlocal best_val, best_sel
        if val + tail[i] >= best_val:
            return
        if i == k:
            best_val = val
            best_sel = chosen.copy()
            return
        r = parts_order[i]
        if i == 0:
            options: list[int | None] = [d_star]
        else:
            options = [None] + list(instance.kps_of_part[r])
        for s in options:
            if s is None:
                dfs(i + 1, val)
                continue
            delta = unary[s]
            for c in chosen:
                delta += instance.phi_of(c, s)
            fired = []
            for t, members in enumerate(trip_members):
                if s in members:
                    counts[t] += 1
                    if counts[t] == 2:
                        delta += trip_w[t]
                    fired.append(t)
            chosen.append(s)
            dfs(i + 1, val + delta)
            chosen.pop()
            for t in fired:
                counts[t] -= 1

    dfs(0, 0.0)
    return sorted(best_sel), float(best_val + cost_offset)


def price_global(
    instance: PoseInstance,
    d_star: int,
    duals: DualVector,
    triple_rows=(),
    cost_offset: float = 0.0,
) -> tuple[Column, float]:
    """Exact minimum reduced cost over global poses containing d_star.

    reduced cost = Gamma_q + sum_{d in q} (lambda1 - lambda3)_d + active
    size-3 duals. Uses the tree DP when the anchor is on the root part and no
    active size-3 row touches the candidate key-points (the rows break the
    tree structure); otherwise exact branch and bound over part states.
    """
    if not instance.is_global_kp(d_star):
        raise InvalidColumn(f"global pricing anchor {d_star} is not on a global part")
    lam1 = duals.element["lambda1"]
    lam3 = duals.element["lambda3"]
    unary = instance.theta + lam1 - lam3
    r0 = instance.part_of[d_star]

    cand = {d_star}
    for r in instance.parts:
        if r != r0:
            cand.update(instance.kps_of_part[r])
    rows = [
        (row, w)
        for row, w in zip(triple_rows, duals.triple)
        if row.applies_to == GLOBAL_POSE
    ]
    touched = any(set(row.members) & cand for row, _ in rows)

    if r0 == instance.root_part and not touched:
        elements, rc = _price_global_dp(instance, d_star, unary, cost_offset)
    else:
        trips = [(set(row.members), w) for row, w in rows if w != 0.0]
        elements, rc = _price_global_bnb(instance, d_star, unary, trips, cost_offset)
    col = Column(
        kind=GLOBAL_POSE,
        elements=tuple(elements),
        global_elements=tuple(elements),
        cost=global_pose_cost(instance, elements, cost_offset),
        origin_anchor=d_star,
    )
    return col, rc


def build_pose_master(
    instance: PoseInstance, pool, triple_rows=(), omega_bounds=None
) -> LinearProgram:
    """Restricted master LP over the pose pool.

    Row layout: per key-point d, row d (family 1, claiming, rhs 1), row n+d
    (family 2, local membership, rhs 1), row 2n+d (family 3, coverage,
    rhs 0); then one row per active size-3 row, rhs 1. Pool variables come
    first; when omega_bounds is given, one slack with coefficient -1 and cost
    equal to the dual bound is appended for every family-1 row and size-3 row
    with a finite bound.
    """
    n = instance.n
    t = len(triple_rows)
    rhs = np.concatenate([np.ones(n), np.ones(n), np.zeros(n), np.ones(t)])
    costs: list[float] = []
    columns: list[list[tuple[int, float]]] = []
    for col in pool:
        entries: list[tuple[int, float]] = []
        if col.kind == GLOBAL_POSE:
            for d in col.elements:
                entries.append((d, 1.0))
                entries.append((2 * n + d, -1.0))
        elif col.kind == LOCAL_POSE:
            g = col.global_elements[0]
            for d in col.elements:
                if d != g:
                    entries.append((d, 1.0))
                entries.append((n + d, 1.0))
            entries.append((2 * n + g, 1.0))
        else:
            raise InvalidColumn(f"pose master got a {col.kind!r} column")
        for k, row in enumerate(triple_rows):
            if row.coefficient(col):
                entries.append((3 * n + k, 1.0))
        costs.append(col.cost)
        columns.append(entries)
    if omega_bounds is not None:
        for d in range(n):
            w = omega_bounds.omega1[d]
            if np.isfinite(w):
                costs.append(float(w))
                columns.append([(d, -1.0)])
        for k, row in enumerate(triple_rows):
            w = omega_bounds.row_bound(row)
            if np.isfinite(w):
                costs.append(float(w))
                columns.append([(3 * n + k, -1.0)])
    return LinearProgram(np.asarray(costs), columns, rhs)


def pose_triples(pool, primal, tol) -> list[TripleRow]:
    """Violated size-3 rows of both kinds at the fractional point.

    Only triples whose three pairs each co-occur in an active column can be
    violated: if some pair never co-occurs, every counted column contains the
    third element, whose own row already caps the activity at 1. So scanning
    triangles of the pair co-occurrence graph per kind is lossless.
    """
    out = []
    for kind in (GLOBAL_POSE, LOCAL_POSE):
        active = [
            (col, g) for col, g in zip(pool, primal) if col.kind == kind and g > 1e-9
        ]
        adj: dict[int, set[int]] = {}
        for col, _ in active:
            els = col.elements
            for i in range(len(els)):
                for j in range(i + 1, len(els)):
                    adj.setdefault(els[i], set()).add(els[j])
                    adj.setdefault(els[j], set()).add(els[i])
        for a in sorted(adj):
            for b in sorted(x for x in adj[a] if x > a):
                for c in sorted(x for x in (adj[a] & adj[b]) if x > b):
                    members = {a, b, c}
                    activity = sum(
                        g for col, g in active if len(members & set(col.elements)) >= 2
                    )
                    if activity > 1.0 + tol:
                        out.append(TripleRow(members=(a, b, c), applies_to=kind))
    return out


class OmegaBounds:
    """Strict upper bounds on the family-1 and size-3 row multipliers.

    omega1[d] bounds lambda1_d (infinite on global parts, where the family-1
    row also serves global poses); row_bound(row) bounds the multiplier of an
    active size-3 row. All finite values carry a strict epsilon margin, so a
    multiplier at its bound certifies nothing is binding.
    """

    def __init__(self, instance: PoseInstance, epsilon: float):
        self.instance = instance
        self.epsilon = epsilon
        self.omega1 = np.array(
            [
                np.inf if instance.is_global_kp(d) else epsilon + _omega1_alphas(instance, d)
                for d in range(instance.n)
            ]
        )
        self._rows: dict[tuple, float] = {}

    def row_bound(self, row: TripleRow) -> float:
        key = row.key()
        if key not in self._rows:
            if row.applies_to == GLOBAL_POSE:
                self._rows[key] = omega4_bound(self.instance, row, self.epsilon)
            else:
                self._rows[key] = omega5_bound(self.instance, row, self.epsilon)
        return self._rows[key]


def _subsets(items):
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def _local_poses_of_part(instance: PoseInstance, part: str):
    """(global element, member tuple) for every local pose on the part."""
    kps = instance.kps_of_part[part]
    if len(kps) > MAX_PART_KEYPOINTS:
        raise PartTooLarge(f"part {part!r} has {len(kps)} key-points")
    for g in kps:
        rest = [d for d in kps if d != g]
        for extra in _subsets(rest):
            yield g, tuple(sorted((g,) + extra))


def _max_neg_psi_anchored(instance: PoseInstance, d: int) -> float:
    """max(0, max over local poses with global element d of -Psi)."""
    part = instance.part_of[d]
    rest = [x for x in instance.kps_of_part[part] if x != d]
    best = 0.0
    for extra in _subsets(rest):
        psi = local_pose_cost(instance, (d,) + extra, d)
        best = max(best, -psi)
    return best


def _omega1_alphas(instance: PoseInstance, d_star: int) -> float:
    """max(alpha1 + alpha3, alpha2) for a non-global key-point's family-1 row.

    alpha1 charges the best global pose containing d_star (closed form over
    the other parts' most attractive pairings), alpha2 the best gain from
    deleting d_star as a plain member of a local pose, alpha3 the best gain
    from deleting a local pose globally anchored at d_star.
    """
    part = instance.part_of[d_star]
    alpha1 = -float(instance.theta[d_star])
    for r in instance.parts:
        if r == part:
            continue
        kps = instance.kps_of_part[r]
        if kps:
            alpha1 -= min(0.0, min(instance.phi_of(d_star, d1) for d1 in kps))
    alpha1 = max(0.0, alpha1)

    alpha2 = 0.0
    for g, elements in _local_poses_of_part(instance, part):
        if g == d_star or d_star not in elements:
            continue
        psi = local_pose_cost(instance, elements, g)
        reduced = tuple(e for e in elements if e != d_star)
        psi_bar = local_pose_cost(instance, reduced, g)
        alpha2 = max(alpha2, (psi_bar if psi_bar < 0.0 else 0.0) - psi)

    alpha3 = max(0.0, _max_neg_psi_anchored(instance, d_star))
    return max(alpha1 + alpha3, alpha2)


def omega5_bound(instance: PoseInstance, row: TripleRow, epsilon: float) -> float:
    """Bound for a local-pose size-3 row: best gain from deleting the row's
    plain members out of any local pose the row counts."""
    members = set(row.members)
    best = 0.0
    parts = {instance.part_of[m] for m in members}
    for part in sorted(parts):
        in_part = [m for m in members if instance.part_of[m] == part]
        if len(in_part) < 2:
            continue
        for g, elements in _local_poses_of_part(instance, part):
            if len(members & set(elements)) < 2:
                continue
            psi = local_pose_cost(instance, elements, g)
            reduced = tuple(e for e in elements if e == g or e not in members)
            psi_bar = local_pose_cost(instance, reduced, g)
            best = max(best, (psi_bar if psi_bar < 0.0 else 0.0) - psi)
    return epsilon + max(0.0, best)


def omega4_bound(instance: PoseInstance, row: TripleRow, epsilon: float) -> float:
    """Bound for a global-pose size-3 row.

    Infinite when two or more members sit on global parts. Otherwise one
    member d1 keeps its role inside a surviving global pose (forced to the
    global member when there is one) and the other two are charged out via
    the best-case unary, pairwise, and anchored-local-pose terms.
    """
    members = list(row.members)
    n_global = sum(1 for m in members if instance.is_global_kp(m))
    if n_global >= 2:
        return np.inf
    if n_global == 1:
        choices = [m for m in members if instance.is_global_kp(m)]
    else:
        choices = members
    member_parts = {instance.part_of[m] for m in members}
    best = np.inf
    for d1 in choices:
        d2, d3 = sorted(m for m in members if m != d1)
        alpha1 = (
            -float(instance.theta[d2])
            - float(instance.theta[d3])
            - instance.phi_of(d1, d2)
            - instance.phi_of(d1, d3)
            - instance.phi_of(d2, d3)
        )
        for r in instance.parts:
            if r in member_parts:
                continue
            kps = instance.kps_of_part[r]
            if not kps:
                continue
            alpha1 -= min(0.0, min(instance.phi_of(d2, d) for d in kps))
            alpha1 -= min(0.0, min(instance.phi_of(d3, d) for d in kps))
        alpha1 = max(0.0, alpha1)
        alpha2 = max(0.0, _max_neg_psi_anchored(instance, d2))
        alpha3 = max(0.0, _max_neg_psi_anchored(instance, d3))
        best = min(best, alpha1 + alpha2 + alpha3)
    return epsilon + best


def compute_omega_bounds(instance: PoseInstance, triple_rows=()) -> OmegaBounds:
    """Dual bounds with margin epsilon = 1e-4 * (1 + max |theta|)."""
    epsilon = OMEGA_EPSILON_SCALE * (1.0 + float(np.max(np.abs(instance.theta))))
    bounds = OmegaBounds(instance, epsilon)
    for row in triple_rows:
        bounds.row_bound(row)
    return bounds


def pose_lower_bound(duals: DualVector, pricing_minima) -> float:
    """Anytime bound: rhs-weighted dual sum plus clipped per-anchor pricing
    minima, global anchors (key-points on global parts) and local anchors
    (every key-point) together."""
    return compute_lower_bound(duals, pricing_minima)


class PoseProblem:
    """Pricing-problem adapter handed to the column generation engine."""

    def __init__(self, instance: PoseInstance, cost_offset: float = 0.0):
        self.instance = instance
        self.cost_offset = float(cost_offset)
        self._omega: OmegaBounds | None = None

    def anchors(self):
        inst = self.instance
        return [("global", d) for d in inst.global_kps()] + [
            ("local", d) for d in range(inst.n)
        ]

    def price(self, anchor, duals: DualVector, triple_rows=()):
        kind, d = anchor
        if kind == "global":
            return price_global(self.instance, d, duals, triple_rows, self.cost_offset)
        return price_local(self.instance, d, duals, triple_rows)

    def build_master(self, pool, triple_rows, with_omega: bool = False) -> LinearProgram:
        omega = None
        if with_omega:
            if self._omega is None:
                self._omega = compute_omega_bounds(self.instance)
            omega = self._omega
        return build_pose_master(self.instance, pool, triple_rows, omega_bounds=omega)

    def extract_duals(self, solution, pool, triple_rows) -> DualVector:
        n = self.instance.n
        lam = solution.duals
        return DualVector(
            element={
                "lambda1": lam[0:n].copy(),
                "lambda2": lam[n : 2 * n].copy(),
                "lambda3": lam[2 * n : 3 * n].copy(),
            },
            triple=lam[3 * n :].copy(),
        )

    def triple_candidates(self, pool, primal, tol):
        return pose_triples(pool, primal, tol)

    def validate_column(self, col: Column) -> None:
        inst = self.instance
        if any(not 0 <= d < inst.n for d in col.elements):
            raise InvalidColumn(f"column references unknown key-points: {col.elements}")
        if col.kind == GLOBAL_POSE:
            global_pose_cost(inst, col.elements)
        elif col.kind == LOCAL_POSE:
            local_pose_cost(inst, col.elements, col.global_elements[0])
        else:
            raise InvalidColumn(f"pose problem cannot hold a {col.kind!r} column")
