"""Command-line interface: instance file I/O, synthetic instance generation,
solve orchestration with bound traces, gap statistics, and detection
evaluation.

Instance files are JSON objects. Pose:

    {"problem": "pose", "parts": [...], "global_parts": [...],
     "part_tree": [[a, b], ...], "root_part": "...",
     "keypoints": [part label per key-point id], "theta": [...],
     "phi": [[d1, d2, value], ...]}

Cell:

    {"problem": "cell", "superpixels": n, "dist": [[...], ...],
     "area": [...], "max_radius": r, "max_area": v, "theta": [...],
     "phi": [[d1, d2, value], ...]}

Unknown fields are rejected. phi entries are unordered pairs; listing both
orders with different values is a symmetry violation. Reports are JSON with
lower/upper bounds, normalized_gap, the integral solution, and the
per-iteration trace. Exit codes: 0 converged, 1 error, 2 iteration limit.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import cell as cellmod
from . import evalmetrics, exact
from . import pose as posemod
from .errors import InstanceTooLarge, ParseError, SolverError, ValidationError
from .master import SolveConfig, run_colgen

# Report gaps at or below this count as zero in the statistics summary; the
# cumulative buckets use strict "under".
ZERO_GAP_TOL = 1e-9
GAP_BUCKETS = (0.0001, 0.001, 0.01, 0.1, 0.16)

_POSE_REQUIRED = {"problem", "parts", "global_parts", "part_tree", "keypoints", "theta", "phi"}
_POSE_OPTIONAL = {"root_part"}
_CELL_REQUIRED = {"problem", "superpixels", "dist", "area", "max_radius", "max_area", "theta", "phi"}


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc


def _check_fields(obj, required, optional, what):
    unknown = sorted(set(obj) - required - optional)
    if unknown:
        raise ParseError(f"unknown {what} field {unknown[0]!r}")
    for name in sorted(required):
        if name not in obj:
            raise ParseError(f"missing {what} field {name!r}")


def _phi_dict(entries) -> dict:
    if not isinstance(entries, list):
        raise ParseError("phi must be a list of [d1, d2, value] entries")
    phi: dict[tuple[int, int], float] = {}
    for ent in entries:
        if not isinstance(ent, (list, tuple)) or len(ent) != 3:
            raise ParseError(f"phi entry {ent!r} is not [d1, d2, value]")
        try:
            d1, d2, w = int(ent[0]), int(ent[1]), float(ent[2])
        except (TypeError, ValueError) as exc:
            raise ParseError(f"phi entry {ent!r} has a non-numeric field") from exc
        key = (d1, d2) if d1 < d2 else (d2, d1)
        if key in phi and phi[key] != w:
            raise ValidationError(
                f"phi is not symmetric: pair {key} listed with {phi[key]} and {w}"
            )
        phi[key] = w
    return phi


def _as_float_list(obj, name):
    try:
        arr = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field {name!r} must be numeric") from exc
    return arr


def _parse_pose(obj) -> posemod.PoseInstance:
    _check_fields(obj, _POSE_REQUIRED, _POSE_OPTIONAL, "pose")
    parts = obj["parts"]
    keypoints = obj["keypoints"]
    if not isinstance(parts, list) or not all(isinstance(p, str) for p in parts):
        raise ParseError("field 'parts' must be a list of part labels")
    if not isinstance(keypoints, list) or not all(isinstance(p, str) for p in keypoints):
        raise ParseError("field 'keypoints' must list the part label of each key-point")
    tree = obj["part_tree"]
    if not isinstance(tree, list) or not all(
        isinstance(e, (list, tuple)) and len(e) == 2 for e in tree
    ):
        raise ParseError("field 'part_tree' must be a list of [part, part] edges")
    return posemod.PoseInstance(
        parts=list(parts),
        part_of=list(keypoints),
        global_parts=frozenset(obj["global_parts"]),
        theta=_as_float_list(obj["theta"], "theta"),
        phi=_phi_dict(obj["phi"]),
        part_tree=[(str(p), str(q)) for p, q in tree],
        root_part=str(obj.get("root_part", "")),
    )


def _parse_cell(obj) -> cellmod.CellInstance:
    _check_fields(obj, _CELL_REQUIRED, set(), "cell")
    try:
        n = int(obj["superpixels"])
    except (TypeError, ValueError) as exc:
        raise ParseError("field 'superpixels' must be an integer count") from exc
    theta = _as_float_list(obj["theta"], "theta")
    if theta.shape != (n,):
        raise ValidationError(f"theta has {theta.shape[0]} entries for {n} super-pixels")
    dist = _as_float_list(obj["dist"], "dist")
    if n == 0:
        dist = np.zeros((0, 0))
    return cellmod.CellInstance(
        dist=dist,
        area=_as_float_list(obj["area"], "area"),
        max_radius=float(obj["max_radius"]),
        max_area=float(obj["max_area"]),
        theta=theta,
        phi=_phi_dict(obj["phi"]),
    )


def parse_instance(path):
    """Read and validate an instance file; returns PoseInstance or
    CellInstance. Diagnostics name the offending field."""
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: instance file must hold a JSON object")
    problem = obj.get("problem")
    if problem == "pose":
        return _parse_pose(obj)
    if problem == "cell":
        return _parse_cell(obj)
    raise ParseError(f"field 'problem' must be 'pose' or 'cell', got {problem!r}")


def serialize_instance(instance) -> dict:
    """Canonical JSON form; parse(serialize(x)) reproduces x."""
    if isinstance(instance, posemod.PoseInstance):
        return {
            "problem": "pose",
            "parts": list(instance.parts),
            "global_parts": sorted(instance.global_parts),
            "root_part": instance.root_part,
            "part_tree": [[p, q] for p, q in instance.part_tree],
            "keypoints": list(instance.part_of),
            "theta": [float(v) for v in instance.theta],
            "phi": [[d1, d2, w] for (d1, d2), w in sorted(instance.phi.items())],
        }
    if isinstance(instance, cellmod.CellInstance):
        return {
            "problem": "cell",
            "superpixels": instance.n,
            "dist": [[float(v) for v in row] for row in instance.dist],
            "area": [float(v) for v in instance.area],
            "max_radius": instance.max_radius,
            "max_area": instance.max_area,
            "theta": [float(v) for v in instance.theta],
            "phi": [[d1, d2, w] for (d1, d2), w in sorted(instance.phi.items())],
        }
    raise TypeError(f"cannot serialize {type(instance).__name__}")


# Offsets used by the planted cell generator: pairwise distances stay well
# under the 2.0 radius, so each planted cluster has a centroid.
_CLUSTER_OFFSETS = [
    (0.0, 0.0),
    (0.9, 0.0),
    (0.0, 0.9),
    (0.9, 0.9),
    (0.45, 1.35),
    (1.35, 0.45),
]


def _gen_pose(rng, style, parts, kps_per_part, people):
    labels = [f"p{i}" for i in range(parts)]
    tree = [(labels[i], labels[i + 1]) for i in range(parts - 1)]
    if style == "planted":
        # One key-point per (part, person). Same-person pairs attract with a
        # margin that beats every mixed-person alternative; cross-person and
        # same-part pairs repel, so the planted people are uniquely optimal.
        part_of = [labels[r] for r in range(parts) for _ in range(people)]
        n = parts * people
        theta = np.full(n, -1.0)
        phi = {}
        kp = lambda r, k: r * people + k
        for r1 in range(parts):
            for r2 in range(r1, parts):
                for k1 in range(people):
                    for k2 in range(people):
                        d1, d2 = kp(r1, k1), kp(r2, k2)
                        if d1 >= d2:
                            continue
                        if r1 == r2:
                            phi[(d1, d2)] = 3.0
                            continue
                        adjacent = (labels[r1], labels[r2]) in tree
                        if not (adjacent or r1 == 0):
                            continue
                        phi[(d1, d2)] = -2.0 if k1 == k2 else 3.0
        return posemod.PoseInstance(
            parts=labels,
            part_of=part_of,
            global_parts=frozenset({labels[0]}),
            theta=theta,
            phi=phi,
            part_tree=tree,
        )
    counts = [1 + int(rng.integers(0, kps_per_part)) for _ in range(parts)]
    part_of = [labels[r] for r in range(parts) for _ in range(counts[r])]
    n = len(part_of)
    theta = rng.uniform(-3.0, 3.0, n)
    phi = {}
    for d1 in range(n):
        for d2 in range(d1 + 1, n):
            r1, r2 = part_of[d1], part_of[d2]
            allowed = (
                r1 == r2
                or (r1, r2) in tree
                or (r2, r1) in tree
                or labels[0] in (r1, r2)
            )
            if allowed and rng.random() < 0.7:
                phi[(d1, d2)] = float(rng.uniform(-3.0, 3.0))
    return posemod.PoseInstance(
        parts=labels,
        part_of=part_of,
        global_parts=frozenset({labels[0]}),
        theta=theta,
        phi=phi,
        part_tree=tree,
    )


def _gen_cell(rng, style, pixels, clusters, cluster_size):
    if style == "planted":
        if cluster_size > len(_CLUSTER_OFFSETS):
            raise ValidationError(
                f"cluster_size caps at {len(_CLUSTER_OFFSETS)}"
            )
        pos = np.array(
            [
                (10.0 * c + dx, dy)
                for c in range(clusters)
                for dx, dy in _CLUSTER_OFFSETS[:cluster_size]
            ]
        )
        n = pos.shape[0]
        theta = np.full(n, -1.0)
        phi = {}
        for c in range(clusters):
            base = c * cluster_size
            for i in range(cluster_size):
                for j in range(i + 1, cluster_size):
                    phi[(base + i, base + j)] = -1.0
        area = np.ones(n)
        max_area = cluster_size + 0.4
    else:
        n = pixels
        pos = rng.uniform(0.0, 4.0, (n, 2))
        theta = rng.uniform(-3.0, 3.0, n)
        area = rng.uniform(0.5, 1.5, n)
        max_area = float(rng.uniform(1.5, 3.5))
        phi = {}
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
    np.fill_diagonal(dist, 0.0)
    dist = (dist + dist.T) / 2.0
    if style != "planted":
        for d1 in range(n):
            for d2 in range(d1 + 1, n):
                if dist[d1, d2] < 2.0 and rng.random() < 0.7:
                    phi[(d1, d2)] = float(rng.uniform(-3.0, 3.0))
    return cellmod.CellInstance(
        dist=dist,
        area=area,
        max_radius=2.0,
        max_area=max_area,
        theta=theta,
        phi=phi,
    )


def gen_synthetic(
    kind,
    seed=0,
    *,
    style="random",
    parts=3,
    kps_per_part=3,
    people=2,
    pixels=8,
    clusters=2,
    cluster_size=3,
):
    """Deterministic synthetic instance for a fixed seed.

    Pose "planted" builds K people with attractive intra-person and repulsive
    inter-person potentials; cell "planted" drops clusters on a grid with
    distances honoring the radius cap. "random" draws potentials uniformly
    from [-3, 3].
    """
    rng = np.random.default_rng(seed)
    if kind == "pose":
        return _gen_pose(rng, style, parts, kps_per_part, people)
    if kind == "cell":
        return _gen_cell(rng, style, pixels, clusters, cluster_size)
    raise ValueError(f"unknown kind {kind!r}")


def _emit(obj, out_path) -> None:
    text = json.dumps(obj, indent=2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def solve_command(args) -> int:
    t0 = time.perf_counter()
    instance = parse_instance(args.instance)
    kind = "pose" if isinstance(instance, posemod.PoseInstance) else "cell"
    if args.problem and args.problem != kind:
        raise ValidationError(
            f"--problem {args.problem} but the file declares {kind!r}"
        )
    use_omega = args.omega_bounds == "on"
    if use_omega and kind == "cell":
        raise ValidationError("--omega-bounds applies to pose instances only")
    config = SolveConfig(
        use_triples=args.triples == "on",
        use_omega_bounds=use_omega,
        column_violation_tol=args.tol,
        max_iterations=args.max_iters,
        cost_offset=args.offset,
        rng_seed=args.seed,
        jobs=args.jobs,
    )
    if kind == "pose":
        problem = posemod.PoseProblem(instance, args.offset)
    else:
        problem = cellmod.CellProblem(instance, args.offset)
    state, bounds, trace = run_colgen(problem, config)
    report = {
        "problem": kind,
        "status": state.status,
        "objective": float(state.lp_objective),
        "lower_bound": float(bounds.lower),
        "upper_bound": float(bounds.upper),
        "normalized_gap": float(bounds.normalized_gap),
        "upper_exact": bool(bounds.upper_exact),
        "iterations": int(state.iteration),
        "pool_size": len(state.pool),
        "triple_rows": len(state.triple_rows),
        "wall_time": time.perf_counter() - t0,
        "solution": [
            {
                "kind": col.kind,
                "elements": [int(d) for d in col.elements],
                "global_elements": [int(d) for d in col.global_elements],
                "cost": float(col.cost),
            }
            for col in bounds.upper_solution
        ],
        "trace": [rec.to_dict() for rec in trace],
    }
    exit_code = 0 if state.status == "converged" else 2
    if args.oracle_check:
        try:
            universe = exact.enumerate_universe(instance, args.offset)
            optimum, _ = exact.brute_force_setpack(universe.columns)
            matches = abs(optimum - bounds.upper) <= 1e-6
            report["oracle"] = {"optimum": float(optimum), "upper_matches": matches}
            if state.status == "converged" and not matches:
                print(
                    f"oracle mismatch: exact optimum {optimum}, solver upper {bounds.upper}",
                    file=sys.stderr,
                )
                exit_code = 1
        except InstanceTooLarge as exc:
            report["oracle"] = {"skipped": str(exc)}
    _emit(report, args.out)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(report["trace"], indent=2) + "\n")
    return exit_code


def gen_command(args) -> int:
    instance = gen_synthetic(
        args.kind,
        args.seed,
        style=args.style,
        parts=args.parts,
        kps_per_part=args.kps_per_part,
        people=args.people,
        pixels=args.pixels,
        clusters=args.clusters,
        cluster_size=args.cluster_size,
    )
    _emit(serialize_instance(instance), args.out)
    return 0


def _load_detections(path):
    obj = _load_json(path)
    if not isinstance(obj, dict) or set(obj) != {"detections"}:
        raise ParseError(f"{path}: expected an object with a 'detections' field")
    centroids = []
    regions = []
    for i, det in enumerate(obj["detections"]):
        if not isinstance(det, dict) or set(det) - {"centroid", "region"}:
            raise ParseError(f"{path}: detection {i} has unknown fields")
        if "centroid" not in det or "region" not in det:
            raise ParseError(f"{path}: detection {i} needs 'centroid' and 'region'")
        centroids.append([float(v) for v in det["centroid"]])
        regions.append(list(det["region"]))
    dims = {len(c) for c in centroids}
    if len(dims) > 1:
        raise ValidationError(f"{path}: centroids have mixed dimensions")
    arr = np.asarray(centroids, dtype=np.float64)
    if arr.size == 0:
        arr = arr.reshape(0, 0)
    return arr, regions


def eval_command(args) -> int:
    pred_cent, pred_regions = _load_detections(args.predictions)
    gt_cent, gt_regions = _load_detections(args.ground_truth)
    if pred_cent.size and gt_cent.size and pred_cent.shape[1] != gt_cent.shape[1]:
        raise ValidationError("prediction and ground-truth centroids differ in dimension")
    match = evalmetrics.match_detections(pred_cent, gt_cent, args.threshold)
    precision, recall, f_score = evalmetrics.prf(match.tp, match.fp, match.fn)
    overlaps = [
        evalmetrics.jaccard(pred_regions[i], gt_regions[j]) for i, j in match.pairs
    ]
    report = {
        "tp": match.tp,
        "fp": match.fp,
        "fn": match.fn,
        "precision": precision,
        "recall": recall,
        "f_score": f_score,
        "mean_jaccard": sum(overlaps) / len(overlaps) if overlaps else 0.0,
        "pairs": [[int(i), int(j)] for i, j in match.pairs],
    }
    _emit(report, args.out)
    return 0


def stats_command(args) -> int:
    gaps = []
    for path in args.reports:
        obj = _load_json(path)
        if not isinstance(obj, dict) or "normalized_gap" not in obj:
            raise ParseError(f"{path}: not a solve report (no normalized_gap)")
        gaps.append(float(obj["normalized_gap"]))
    if not gaps:
        raise ValidationError("no reports given")
    count = len(gaps)
    summary = {
        "count": count,
        "zero_gap_fraction": sum(g <= ZERO_GAP_TOL for g in gaps) / count,
        "fraction_under": {
            str(b): sum(g < b for g in gaps) / count for b in GAP_BUCKETS
        },
    }
    _emit(summary, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="artifact",
        description="Maximum-weight set packing by column generation: "
        "pose and cell instances, bound traces, detection evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run column generation on an instance file")
    p.add_argument("instance", help="instance JSON path")
    p.add_argument("--problem", choices=("pose", "cell"), default=None)
    p.add_argument("--triples", choices=("on", "off"), default="on")
    p.add_argument("--omega-bounds", dest="omega_bounds", choices=("on", "off"), default="off")
    p.add_argument("--offset", type=float, default=0.0, help="per-column cost offset")
    p.add_argument("--tol", type=float, default=1e-6, help="pricing violation tolerance")
    p.add_argument("--max-iters", dest="max_iters", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", default=None, help="also write the trace array here")
    p.add_argument("--oracle-check", action="store_true", help="cross-check against brute force when sizes permit")
    p.add_argument("--jobs", type=int, default=1, help="pricing threads")
    p.add_argument("-o", "--out", default=None, help="report path (default stdout)")
    p.set_defaults(func=solve_command)

    p = sub.add_parser("gen", help="generate a synthetic instance")
    p.add_argument("--kind", choices=("pose", "cell"), required=True)
    p.add_argument("--style", choices=("planted", "random"), default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parts", type=int, default=3)
    p.add_argument("--kps-per-part", dest="kps_per_part", type=int, default=3)
    p.add_argument("--people", type=int, default=2)
    p.add_argument("--pixels", type=int, default=8)
    p.add_argument("--clusters", type=int, default=2)
    p.add_argument("--cluster-size", dest="cluster_size", type=int, default=3)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=gen_command)

    p = sub.add_parser("eval", help="precision/recall/F and Jaccard for detections")
    p.add_argument("predictions")
    p.add_argument("ground_truth")
    p.add_argument("--threshold", type=float, default=float("inf"))
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=eval_command)

    p = sub.add_parser("stats", help="gap statistics over solve reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=stats_command)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError, SolverError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
