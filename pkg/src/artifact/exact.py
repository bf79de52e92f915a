"""Brute-force oracles: full column universes, exact set packing, exhaustive
constrained binary-quadratic minimization.

Everything here trades speed for trust. The search logic is written directly
against the printed constraint families and shares nothing with the pricing
kernels or the LP engine, so the fast paths can be gated against it in tests.
Hard size caps raise InstanceTooLarge instead of silently truncating.

The set-packing solver uses exact subset dynamic programs. Columns without a
local kind pack disjointly over their elements, so a use-or-skip-the-lowest-
element DP over element subsets is exact. With local poses in play the DP
runs over the exact union U of the selected global poses' elements (partition
DP), because the eligible local poses are determined by U alone: a local pose
needs its global element inside U (family 3) and its plain members outside U
(family 1), and local poses interact with each other only within overlap
components of their element sets (family 2), which are scored per component.
Active size-3 rows break this structure and fall back to a pruned
depth-first search over the columns.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import InstanceTooLarge, InvalidColumn
from .master import CELL, GLOBAL_POSE, LOCAL_POSE, Column
from . import cell as cellmod
from . import pose as posemod

# Free-variable cap of the exhaustive quadratic minimizer.
MAX_BQP_FREE = 20
# Element cap of the subset DPs and the node budget of the DFS fallback.
MAX_PACK_ELEMENTS = 20
DFS_NODE_BUDGET = 20_000_000
# Universe caps: parts / key-points per part for poses, super-pixels for cells.
MAX_POSE_PARTS = 5
MAX_POSE_KPS_PER_PART = 3
MAX_CELL_PIXELS = 12


def exhaustive_bqp(
    linear,
    quad=None,
    triples=(),
    fix_one=(),
    fix_zero=(),
    feasible=None,
):
    """Minimize a binary quadratic objective by full enumeration.

    linear: sequence of per-variable costs over variables 0..n-1.
    quad: {(i, j): w} with i < j, charged when both endpoints are chosen.
    triples: iterable of (members, w), charged when >= 2 members are chosen.
    fix_one / fix_zero: variables pinned in or out. feasible: optional
    predicate on the chosen frozenset; infeasible subsets are skipped.

    Returns (chosen frozenset, value); (None, inf) when nothing is feasible.
    Ties resolve to the first subset in ascending-mask order over the sorted
    free variables.
    """
    linear = [float(v) for v in linear]
    n = len(linear)
    quad = dict(quad or {})
    for (a, b) in quad:
        if not (0 <= a < b < n):
            raise ValueError(f"quad key ({a}, {b}) must satisfy 0 <= a < b < n")
    trips = [(frozenset(int(m) for m in members), float(w)) for members, w in triples]
    ones = frozenset(int(v) for v in fix_one)
    zeros = frozenset(int(v) for v in fix_zero)
    if ones & zeros:
        raise ValueError("a variable is fixed both ways")
    free = sorted(set(range(n)) - ones - zeros)
    if len(free) > MAX_BQP_FREE:
        raise InstanceTooLarge(f"{len(free)} free variables exceed {MAX_BQP_FREE}")

    best_set = None
    best_val = float("inf")
    for mask in range(1 << len(free)):
        chosen = set(ones)
        for i, v in enumerate(free):
            if (mask >> i) & 1:
                chosen.add(v)
        fs = frozenset(chosen)
        if feasible is not None and not feasible(fs):
            continue
        val = sum(linear[v] for v in sorted(chosen))
        for (a, b), w in quad.items():
            if a in chosen and b in chosen:
                val += w
        for members, w in trips:
            if len(members & chosen) >= 2:
                val += w
        if val < best_val:
            best_val = val
            best_set = fs
    return best_set, best_val


@dataclass
class ColumnUniverse:
    columns: list[Column]
    kind: str


def _pose_universe(instance, cost_offset: float) -> list[Column]:
    if len(instance.parts) > MAX_POSE_PARTS:
        raise InstanceTooLarge(f"{len(instance.parts)} parts exceed {MAX_POSE_PARTS}")
    for r, kps in instance.kps_of_part.items():
        if len(kps) > MAX_POSE_KPS_PER_PART:
            raise InstanceTooLarge(
                f"part {r!r} has {len(kps)} key-points, cap {MAX_POSE_KPS_PER_PART}"
            )
    columns: list[Column] = []
    options = [[None] + instance.kps_of_part[r] for r in instance.parts]
    for combo in itertools.product(*options):
        elements = tuple(sorted(d for d in combo if d is not None))
        if not elements:
            continue
        if not any(instance.is_global_kp(d) for d in elements):
            continue
        columns.append(
            Column(
                kind=GLOBAL_POSE,
                elements=elements,
                global_elements=elements,
                cost=posemod.global_pose_cost(instance, elements, cost_offset),
            )
        )
    for r in instance.parts:
        kps = instance.kps_of_part[r]
        for g in kps:
            rest = [d for d in kps if d != g]
            for k in range(len(rest) + 1):
                for extra in itertools.combinations(rest, k):
                    elements = tuple(sorted((g,) + extra))
                    columns.append(
                        Column(
                            kind=LOCAL_POSE,
                            elements=elements,
                            global_elements=(g,),
                            cost=posemod.local_pose_cost(instance, elements, g),
                        )
                    )
    return columns


def _cell_universe(instance, cost_offset: float) -> list[Column]:
    n = instance.n
    if n > MAX_CELL_PIXELS:
        raise InstanceTooLarge(f"{n} super-pixels exceed {MAX_CELL_PIXELS}")
    columns: list[Column] = []
    for mask in range(1, 1 << n):
        elements = tuple(d for d in range(n) if (mask >> d) & 1)
        try:
            cost = cellmod.cell_cost(instance, elements, cost_offset)
        except InvalidColumn:
            continue
        columns.append(
            Column(kind=CELL, elements=elements, global_elements=(), cost=cost)
        )
    return columns


def enumerate_universe(instance, cost_offset: float = 0.0) -> ColumnUniverse:
    """Every structurally valid column of the instance, deterministic order."""
    if isinstance(instance, posemod.PoseInstance):
        return ColumnUniverse(_pose_universe(instance, cost_offset), "pose")
    if isinstance(instance, cellmod.CellInstance):
        return ColumnUniverse(_cell_universe(instance, cost_offset), "cell")
    raise TypeError(f"cannot enumerate columns of {type(instance).__name__}")


def _pack_dp_disjoint(columns, indices):
    """Exact min-cost packing of element-disjoint columns (no local kind).

    Subset DP on f(S) = best packing using elements from S only: either the
    lowest element of S stays unused, or some column containing it and lying
    inside S is taken. Returns (value, chosen original indices).
    """
    elems = sorted({e for j in indices for e in columns[j].elements})
    if len(elems) > MAX_PACK_ELEMENTS:
        raise InstanceTooLarge(f"{len(elems)} elements exceed {MAX_PACK_ELEMENTS}")
    pos = {e: i for i, e in enumerate(elems)}
    by_low: dict[int, list[tuple[int, float, int]]] = {}
    for j in indices:
        mask = 0
        for e in columns[j].elements:
            mask |= 1 << pos[e]
        low = (mask & -mask).bit_length() - 1
        by_low.setdefault(low, []).append((mask, float(columns[j].cost), j))
    full = (1 << len(elems)) - 1
    f = [0.0] * (full + 1)
    choice = [-1] * (full + 1)
    for s in range(1, full + 1):
        low = (s & -s).bit_length() - 1
        best = f[s & ~(1 << low)]
        pick = -1
        for mask, cost, j in by_low.get(low, ()):
            if mask & ~s:
                continue
            v = cost + f[s & ~mask]
            if v < best:
                best = v
                pick = j
        f[s] = best
        choice[s] = pick
    sel = []
    s = full
    while s:
        j = choice[s]
        low = (s & -s).bit_length() - 1
        if j < 0:
            s &= ~(1 << low)
            continue
        sel.append(j)
        mask = 0
        for e in columns[j].elements:
            mask |= 1 << pos[e]
        s &= ~mask
    return f[full], sorted(sel)


def _local_component_tables(columns, local_idx, gmask_of):
    """Per overlap component of the local columns: a table mapping each
    subset U of the component's elements (as a global-element mask) to the
    best total cost of disjoint local poses with global element in U and
    plain members outside U, with the chosen indices."""
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for j in local_idx:
        for e in columns[j].elements:
            parent.setdefault(e, e)
    for j in local_idx:
        els = columns[j].elements
        for e in els[1:]:
            parent[find(els[0])] = find(e)
    comp_cols: dict[int, list[int]] = {}
    for j in local_idx:
        comp_cols.setdefault(find(columns[j].elements[0]), []).append(j)

    tables = []
    for cols in comp_cols.values():
        comp_elems = sorted({e for j in cols for e in columns[j].elements})
        # Only elements some global pose contains can ever be covered; the
        # rest would alias mask 0 and clobber the empty-cover entry.
        coverable = [e for e in comp_elems if e in gmask_of]
        table: dict[int, tuple[float, tuple[int, ...]]] = {}
        for k in range(len(coverable) + 1):
            for covered in itertools.combinations(coverable, k):
                cov = set(covered)
                eligible = [
                    j
                    for j in cols
                    if columns[j].global_elements[0] in cov
                    and not (set(columns[j].elements) - set(columns[j].global_elements))
                    & cov
                ]

                best = (0.0, ())

                def rec(i, used, val, sel):
                    nonlocal best
                    if val < best[0]:
                        best = (val, tuple(sel))
                    if i == len(eligible):
                        return
                    rec(i + 1, used, val, sel)
                    j = eligible[i]
                    els = set(columns[j].elements)
                    if not els & used:
                        sel.append(j)
                        rec(i + 1, used | els, val + columns[j].cost, sel)
                        sel.pop()

                rec(0, set(), 0.0, [])
                umask = 0
                for e in covered:
                    umask |= gmask_of.get(e, 0)
                table[umask] = best
        tables.append((comp_elems, table))
    return tables


def _pack_pose_mixed(columns):
    """Exact packing with both pose kinds: partition DP over the union of the
    selected global poses' elements, plus per-component local tables."""
    global_idx = [j for j, c in enumerate(columns) if c.kind == GLOBAL_POSE]
    local_idx = [j for j, c in enumerate(columns) if c.kind == LOCAL_POSE]
    gelems = sorted({e for j in global_idx for e in columns[j].elements})
    if len(gelems) > MAX_PACK_ELEMENTS:
        raise InstanceTooLarge(f"{len(gelems)} elements exceed {MAX_PACK_ELEMENTS}")
    gpos = {e: i for i, e in enumerate(gelems)}
    gmask_of = {e: 1 << i for e, i in gpos.items()}

    # Partition DP: g[U] = cheapest set of global poses with element union
    # exactly U; infeasible unions stay at inf.
    by_low: dict[int, list[tuple[int, float, int]]] = {}
    for j in global_idx:
        mask = 0
        for e in columns[j].elements:
            mask |= gmask_of[e]
        low = (mask & -mask).bit_length() - 1
        by_low.setdefault(low, []).append((mask, float(columns[j].cost), j))
    full = (1 << len(gelems)) - 1
    inf = float("inf")
    g = [inf] * (full + 1)
    gchoice = [-1] * (full + 1)
    g[0] = 0.0
    for s in range(1, full + 1):
        low = (s & -s).bit_length() - 1
        best = inf
        pick = -1
        for mask, cost, j in by_low.get(low, ()):
            if mask & ~s:
                continue
            rest = g[s & ~mask]
            if cost + rest < best:
                best = cost + rest
                pick = j
        g[s] = best
        gchoice[s] = pick

    tables = _local_component_tables(columns, local_idx, gmask_of)
    best_total = 0.0
    best_u = 0
    for u in range(full + 1):
        if g[u] == inf:
            continue
        total = g[u]
        for comp_elems, table in tables:
            cmask = 0
            for e in comp_elems:
                cmask |= gmask_of.get(e, 0)
            total += table[u & cmask][0]
        if total < best_total:
            best_total = total
            best_u = u

    sel = []
    s = best_u
    while s:
        j = gchoice[s]
        sel.append(j)
        mask = 0
        for e in columns[j].elements:
            mask |= gmask_of[e]
        s &= ~mask
    for comp_elems, table in tables:
        cmask = 0
        for e in comp_elems:
            cmask |= gmask_of.get(e, 0)
        sel.extend(table[best_u & cmask][1])
    return best_total, sorted(sel)


def _setpack_dfs(columns, triple_rows, node_budget=DFS_NODE_BUDGET):
    """Pruned include/exclude search enforcing every family plus size-3 rows.

    Global-like columns are ordered before local poses so family-3 coverage
    is decided by the time a local pose is considered. Exact but meant for
    small pools (cut-replay tests)."""
    order = sorted(
        range(len(columns)),
        key=lambda j: (columns[j].kind == LOCAL_POSE, columns[j].cost, j),
    )
    suffix = [0.0] * (len(order) + 1)
    for i in range(len(order) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + min(0.0, columns[order[i]].cost)
    rows = list(triple_rows)
    fam1: dict[int, int] = {}
    fam2: dict[int, int] = {}
    cover: dict[int, int] = {}
    trip_use = [0] * len(rows)
    best_val = 0.0
    best_sel: list[int] = []
    chosen: list[int] = []
    nodes = 0

    def can_take(col) -> bool:
        if col.kind == LOCAL_POSE:
            g = col.global_elements[0]
            if cover.get(g, 0) == 0:
                return False
            if any(fam2.get(e, 0) for e in col.elements):
                return False
            if any(fam1.get(e, 0) for e in col.elements if e != g):
                return False
        else:
            if any(fam1.get(e, 0) or fam2.get(e, 0) for e in col.elements):
                return False
        return all(
            trip_use[t] + row.coefficient(col) <= 1 for t, row in enumerate(rows)
        )

    def apply(col, sign: int) -> None:
        if col.kind == LOCAL_POSE:
            g = col.global_elements[0]
            for e in col.elements:
                fam2[e] = fam2.get(e, 0) + sign
                if e != g:
                    fam1[e] = fam1.get(e, 0) + sign
        else:
            for e in col.elements:
                fam1[e] = fam1.get(e, 0) + sign
                if col.kind == GLOBAL_POSE:
                    cover[e] = cover.get(e, 0) + sign
        for t, row in enumerate(rows):
            trip_use[t] += sign * row.coefficient(col)

    def dfs(i: int, val: float) -> None:
        nonlocal best_val, best_sel, nodes
        nodes += 1
        if nodes > node_budget:
            raise InstanceTooLarge(f"set packing exceeded {node_budget} nodes")
        if val + suffix[i] >= best_val:
            return
        if i == len(order):
            best_val = val
            best_sel = chosen.copy()
            return
        j = order[i]
        col = columns[j]
        if can_take(col):
            apply(col, 1)
            chosen.append(j)
            dfs(i + 1, val + col.cost)
            chosen.pop()
            apply(col, -1)
        dfs(i + 1, val)

    dfs(0, 0.0)
    return best_val, sorted(best_sel)


def brute_force_setpack(columns, triple_rows=()):
    """Exact 0/1 optimum over the given columns under every master family.

    Returns (value, selection indices). The empty selection (value 0) is
    always admissible. Dispatches to the subset DPs described in the module
    docstring, or to the DFS when size-3 rows are active.
    """
    columns = list(columns)
    if not columns:
        return 0.0, []
    if triple_rows:
        return _setpack_dfs(columns, list(triple_rows))
    kinds = {c.kind for c in columns}
    if LOCAL_POSE not in kinds:
        value, sel = _pack_dp_disjoint(columns, list(range(len(columns))))
        return value, sel
    if CELL in kinds:
        raise ValueError("cannot mix cell and pose columns in one packing")
    return _pack_pose_mixed(columns)
