"""Pure numpy fixed-radius neighbor query (fallback backend).

Same contract as the compiled kernel: uniform grid of cell size ``r`` over
the candidate points, then distances only against the 27 surrounding grid
cells of each query center. Complexity is O(N + n * occupancy) instead of
the O(n * N) of a plain distance matrix.
"""

from __future__ import annotations

import numpy as np

_OFFSETS = np.array(
    [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)],
    dtype=np.int64,
)


def radius_query(cand: np.ndarray, centers: np.ndarray, r: float):
    """All (center, candidate) pairs within distance ``r``.

    Returns ``(counts, cand_idx, dist)`` where ``counts[i]`` is the number of
    pairs for center ``i`` and ``cand_idx``/``dist`` are the matching
    candidate indices and distances concatenated in center order. Pair order
    within one center is unspecified.
    """
    cand = np.ascontiguousarray(cand, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    n = centers.shape[0]
    if cand.shape[0] == 0 or r <= 0.0:
        return (
            np.zeros(n, dtype=np.int64),
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.float64),
        )

    origin = np.minimum(cand.min(axis=0), centers.min(axis=0)) - 1e-9
    ccell = np.floor((cand - origin) / r).astype(np.int64)
    qcell = np.floor((centers - origin) / r).astype(np.int64)
    dims = ccell.max(axis=0) + 1

    flat = (ccell[:, 0] * dims[1] + ccell[:, 1]) * dims[2] + ccell[:, 2]
    order = np.argsort(flat, kind="stable")
    flat_sorted = flat[order]

    # 27 surrounding cells per center; out-of-grid cells get id -1 (empty).
    ncell = qcell[:, None, :] + _OFFSETS[None, :, :]  # (n, 27, 3)
    valid = np.all((ncell >= 0) & (ncell < dims), axis=2)
    nflat = (ncell[:, :, 0] * dims[1] + ncell[:, :, 1]) * dims[2] + ncell[:, :, 2]
    nflat = np.where(valid, nflat, -1).ravel()

    starts = np.searchsorted(flat_sorted, nflat, side="left")
    ends = np.searchsorted(flat_sorted, nflat, side="right")
    lengths = ends - starts
    total = int(lengths.sum())
    if total == 0:
        return (
            np.zeros(n, dtype=np.int64),
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.float64),
        )

    # Expand all [start, end) ranges into one flat gather index array.
    cum = np.cumsum(lengths)
    pos = np.arange(total, dtype=np.int64) - np.repeat(cum - lengths, lengths)
    gathered = order[pos + np.repeat(starts, lengths)]
    center_of_pair = np.repeat(
        np.repeat(np.arange(n, dtype=np.int64), _OFFSETS.shape[0]), lengths
    )

    delta = cand[gathered] - centers[center_of_pair]
    dist = np.sqrt(np.einsum("ij,ij->i", delta, delta))
    keep = dist <= r
    center_kept = center_of_pair[keep]
    counts = np.bincount(center_kept, minlength=n).astype(np.int64)

    # concatenate in center order
    reorder = np.argsort(center_kept, kind="stable")
    return counts, gathered[keep][reorder], dist[keep][reorder]
