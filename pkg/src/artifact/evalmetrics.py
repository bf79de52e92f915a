"""Detection evaluation: minimum-cost assignment on centroid distances,
precision/recall/F-score, and region Jaccard overlap."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMatrix


def hungarian(cost) -> list[tuple[int, int]]:
    """Exact minimum-cost one-to-one assignment covering the smaller axis.

    cost is a rectangular real matrix; entry (i, j) prices matching row i to
    column j. Returns (row, column) pairs sorted by row. Potentials plus
    shortest augmenting paths, O(n^2 m) with n the smaller dimension.
    """
    a = np.asarray(cost, dtype=float)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise EmptyMatrix(f"cost matrix of shape {a.shape} has no entries")
    if not np.all(np.isfinite(a)):
        raise ValueError("cost matrix must be finite")
    transposed = a.shape[0] > a.shape[1]
    if transposed:
        a = a.T
    n, m = a.shape

    # u, v are dual potentials; p[j] is the row matched to column j, 0-free.
    # Rows and columns are 1-based inside the loop, column 0 is the virtual
    # start of every augmenting path.
    inf = float("inf")
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.int64)
    way = np.zeros(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = -1
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = a[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    pairs = [(int(p[j]) - 1, j - 1) for j in range(1, m + 1) if p[j]]
    if transposed:
        pairs = [(c, r) for r, c in pairs]
    return sorted(pairs)


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall, F-score with every 0/0 defined as 0."""
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be nonnegative")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    denom = precision + recall
    f_score = 2.0 * precision * recall / denom if denom else 0.0
    return precision, recall, f_score


def jaccard(region_a, region_b) -> float:
    """|A n B| / |A u B|; 0 when both regions are empty."""
    a = set(region_a)
    b = set(region_b)
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


@dataclass
class DetectionMatch:
    """Assignment outcome: matched (prediction, ground-truth) id pairs plus
    the leftovers on either side. Each id appears exactly once."""

    pairs: list[tuple[int, int]] = field(default_factory=list)
    unmatched_predictions: list[int] = field(default_factory=list)
    unmatched_ground_truth: list[int] = field(default_factory=list)
    threshold: float = float("inf")

    def __post_init__(self):
        preds = [p for p, _ in self.pairs] + list(self.unmatched_predictions)
        gts = [g for _, g in self.pairs] + list(self.unmatched_ground_truth)
        if len(preds) != len(set(preds)) or len(gts) != len(set(gts)):
            raise ValueError("an id appears more than once in the match")

    @property
    def tp(self) -> int:
        return len(self.pairs)

    @property
    def fp(self) -> int:
        return len(self.unmatched_predictions)

    @property
    def fn(self) -> int:
        return len(self.unmatched_ground_truth)


def match_detections(pred_centroids, gt_centroids, threshold=float("inf")) -> DetectionMatch:
    """Match predictions to ground truth by centroid distance.

    Centroid arrays are (k, dim). The assignment minimizes total Euclidean
    distance; pairs farther than the threshold are then discarded and their
    endpoints counted as false positive and false negative.
    """
    pred = np.asarray(pred_centroids, dtype=float)
    gt = np.asarray(gt_centroids, dtype=float)
    if pred.size == 0 or gt.size == 0:
        return DetectionMatch(
            pairs=[],
            unmatched_predictions=list(range(len(pred))),
            unmatched_ground_truth=list(range(len(gt))),
            threshold=float(threshold),
        )
    if pred.ndim != 2 or gt.ndim != 2 or pred.shape[1] != gt.shape[1]:
        raise ValueError("centroid arrays must be (k, dim) with equal dim")
    dist = np.linalg.norm(pred[:, None, :] - gt[None, :, :], axis=2)
    assignment = hungarian(dist)
    pairs = [(i, j) for i, j in assignment if dist[i, j] <= threshold]
    matched_p = {i for i, _ in pairs}
    matched_g = {j for _, j in pairs}
    return DetectionMatch(
        pairs=pairs,
        unmatched_predictions=[i for i in range(len(pred)) if i not in matched_p],
        unmatched_ground_truth=[j for j in range(len(gt)) if j not in matched_g],
        threshold=float(threshold),
    )
