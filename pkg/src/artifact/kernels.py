"""Subset-enumeration kernels backing the exact pricing searches.

Local-pose pricing, cell pricing, and the alpha searches of the dual bound
computation all minimize the same shape of objective over subsets S of a small
candidate list indexed 0..m-1:

    f(S) = const + sum_{i in S} lin_i + sum_{i<j in S} quad_ij
         + sum_t trip_w_t * [ |S intersect trip_t| >= 2 ]
    s.t.  anchor in S,   sum_{i in S} size_i <= cap.

Subsets are bit masks over the candidate indices, so the search is a tight
integer loop. Two interchangeable backends are provided:

  * a loop kernel, compiled with numba @njit when numba is importable and the
    ARTIFACT_NO_NUMBA environment variable is unset or "0";
  * a chunked vectorized numpy evaluation of the whole mask range.

Both apply the same tie rule (lowest mask wins on equal value) and agree to
the last bit on integer-valued data; benchmarks/bench_kernels.py compares
their throughput. The flag only selects the acceleration path, it never
changes what is computed.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_DISABLE_ENV = "ARTIFACT_NO_NUMBA"
# Masks are int64, one bit per candidate, so the hard ceiling is 62 candidates.
# Callers enforce much smaller caps (20 for parts, 24 for cells).
MAX_CANDIDATES = 62

_CHUNK = 1 << 16


def _enumerate_min_loop(lin, quad, anchor, sizes, cap, trip_masks, trip_w, const):
    # Enumerate every mask containing the anchor bit by splicing a set bit
    # into each g in [0, 2^(m-1)): the map is order preserving, so ties in
    # value resolve to the lowest mask in both backends.
    m = lin.shape[0]
    total = 1 << (m - 1)
    low = (1 << anchor) - 1
    abit = 1 << anchor
    best_val = np.inf
    best_mask = 0
    for g in range(total):
        mask = (g & low) | ((g >> anchor) << (anchor + 1)) | abit
        size = 0.0
        for i in range(m):
            if (mask >> i) & 1:
                size += sizes[i]
        if size > cap:
            continue
        val = const
        for i in range(m):
            if (mask >> i) & 1:
                val += lin[i]
                for j in range(i + 1, m):
                    if (mask >> j) & 1:
                        val += quad[i, j]
        for t in range(trip_masks.shape[0]):
            x = mask & trip_masks[t]
            if x != 0 and (x & (x - 1)) != 0:
                val += trip_w[t]
        if val < best_val:
            best_val = val
            best_mask = mask
    return best_mask, best_val


def _enumerate_min_numpy(lin, quad, anchor, sizes, cap, trip_masks, trip_w, const):
    m = lin.shape[0]
    total = 1 << (m - 1)
    low = (1 << anchor) - 1
    abit = 1 << anchor
    shifts = np.arange(m, dtype=np.int64)
    trip_idx = [
        np.flatnonzero((int(tm) >> shifts) & 1) for tm in np.asarray(trip_masks)
    ]
    best_val = np.inf
    best_mask = 0
    for start in range(0, total, _CHUNK):
        g = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        masks = (g & low) | ((g >> anchor) << (anchor + 1)) | abit
        bits = ((masks[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        vals = const + bits @ lin + 0.5 * np.einsum("ki,ij,kj->k", bits, quad, bits)
        for t, idx in enumerate(trip_idx):
            if idx.size >= 2:
                vals = vals + trip_w[t] * (bits[:, idx].sum(axis=1) >= 2.0)
        infeasible = bits @ sizes > cap
        if infeasible.any():
            vals = np.where(infeasible, np.inf, vals)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val = float(vals[k])
            best_mask = int(masks[k])
    return best_mask, best_val


def _numba_enabled() -> bool:
    flag = os.environ.get(NUMBA_DISABLE_ENV, "").strip()
    if flag not in ("", "0"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


if _numba_enabled():
    from numba import njit

    enumerate_min_loop = njit(cache=True, nogil=True)(_enumerate_min_loop)
    ACTIVE_BACKEND = "numba"
    _ACTIVE = enumerate_min_loop
else:
    enumerate_min_loop = _enumerate_min_loop
    ACTIVE_BACKEND = "numpy"
    _ACTIVE = _enumerate_min_numpy

enumerate_min_numpy = _enumerate_min_numpy


def mask_to_indices(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def indices_to_mask(indices) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << int(i)
    return mask


def enumerate_min(
    lin,
    quad=None,
    anchor: int = 0,
    *,
    sizes=None,
    cap: float | None = None,
    triples=(),
    const: float = 0.0,
    backend: str | None = None,
) -> tuple[int, float]:
    """Minimize f(S) over all subsets containing `anchor`; see module docstring.

    quad must be symmetric with zero diagonal (each unordered pair counted
    once as quad[i, j] with i < j). triples is an iterable of
    (member_indices, weight); members outside range(m) must not appear.
    Returns (best mask, best value); ties go to the lowest mask.
    """
    lin = np.ascontiguousarray(lin, dtype=np.float64)
    m = lin.shape[0]
    if m == 0:
        raise ValueError("empty candidate list")
    if m > MAX_CANDIDATES:
        raise ValueError(f"{m} candidates exceed the {MAX_CANDIDATES} bit budget")
    if not 0 <= anchor < m:
        raise ValueError(f"anchor {anchor} out of range for {m} candidates")
    if quad is None:
        quad = np.zeros((m, m))
    quad = np.ascontiguousarray(quad, dtype=np.float64)
    if quad.shape != (m, m):
        raise ValueError("quad must be m x m")
    if sizes is None:
        sizes = np.zeros(m)
        cap = 0.0
    else:
        sizes = np.ascontiguousarray(sizes, dtype=np.float64)
        if cap is None:
            raise ValueError("sizes given without cap")
    trip_masks = []
    trip_w = []
    for members, w in triples:
        if w != 0.0:
            trip_masks.append(indices_to_mask(members))
            trip_w.append(float(w))
    tm = np.asarray(trip_masks, dtype=np.int64)
    tw = np.asarray(trip_w, dtype=np.float64)
    if backend is None:
        fn = _ACTIVE
    elif backend == "loop":
        fn = enumerate_min_loop
    elif backend == "numpy":
        fn = enumerate_min_numpy
    else:
        raise ValueError(f"unknown backend {backend!r}")
    mask, val = fn(lin, quad, int(anchor), sizes, float(cap), tm, tw, float(const))
    return int(mask), float(val)
