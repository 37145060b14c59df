# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled fixed-radius neighbor query (cell-list search).

Contract mirrors ``neighbors_np.radius_query``: uniform grid with cell size
``r`` over the candidate points, distances evaluated only in the 27 grid
cells surrounding each query center.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()


def radius_query(cand, centers, double r):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] c_arr = np.ascontiguousarray(cand, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] q_arr = np.ascontiguousarray(centers, dtype=np.float64)
    cdef Py_ssize_t n_cand = c_arr.shape[0]
    cdef Py_ssize_t n_q = q_arr.shape[0]

    counts_np = np.zeros(n_q, dtype=np.int64)
    if n_cand == 0 or r <= 0.0:
        return counts_np, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)

    cdef double ox = min(c_arr[:, 0].min(), q_arr[:, 0].min()) - 1e-9
    cdef double oy = min(c_arr[:, 1].min(), q_arr[:, 1].min()) - 1e-9
    cdef double oz = min(c_arr[:, 2].min(), q_arr[:, 2].min()) - 1e-9

    cdef Py_ssize_t i, j, m
    cdef long long dx = 0, dy = 0, dz = 0
    cdef long long cx, cy, cz
    # grid dims from candidate extent
    for i in range(n_cand):
        cx = <long long> floor((c_arr[i, 0] - ox) / r)
        cy = <long long> floor((c_arr[i, 1] - oy) / r)
        cz = <long long> floor((c_arr[i, 2] - oz) / r)
        if cx > dx: dx = cx
        if cy > dy: dy = cy
        if cz > dz: dz = cz
    dx += 1; dy += 1; dz += 1

    cdef cnp.ndarray[cnp.int64_t, ndim=1] flat = np.empty(n_cand, dtype=np.int64)
    cdef cnp.int64_t[::1] flat_v = flat
    for i in range(n_cand):
        cx = <long long> floor((c_arr[i, 0] - ox) / r)
        cy = <long long> floor((c_arr[i, 1] - oy) / r)
        cz = <long long> floor((c_arr[i, 2] - oz) / r)
        flat_v[i] = (cx * dy + cy) * dz + cz

    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.argsort(flat, kind="stable")
    cdef cnp.int64_t[::1] order_v = order
    cdef cnp.ndarray[cnp.int64_t, ndim=1] flat_sorted = flat[order]
    cdef cnp.int64_t[::1] fs_v = flat_sorted

    # bucket boundaries: starts[c] .. starts[c+1] in the sorted order
    cdef cnp.ndarray[cnp.int64_t, ndim=1] uniq_cells
    cdef cnp.ndarray[cnp.int64_t, ndim=1] bucket_start
    uniq_cells, first_idx = np.unique(flat_sorted, return_index=True)
    bucket_start = first_idx.astype(np.int64)
    cdef cnp.int64_t[::1] uc_v = uniq_cells
    cdef cnp.int64_t[::1] bs_v = bucket_start
    cdef Py_ssize_t n_buckets = uniq_cells.shape[0]

    out_idx_list = []
    out_dist_list = []
    cdef cnp.int64_t[::1] counts_v = counts_np

    cdef cnp.ndarray[cnp.int64_t, ndim=1] buf_idx = np.empty(n_cand, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf_dist = np.empty(n_cand, dtype=np.float64)
    cdef cnp.int64_t[::1] bi_v = buf_idx
    cdef cnp.float64_t[::1] bd_v = buf_dist

    cdef double px, py, pz, ddx, ddy, ddz, d2, r2 = r * r
    cdef long long qx, qy, qz, nx, ny, nz, cell
    cdef Py_ssize_t lo, hi, mid, b0, b1, found
    cdef Py_ssize_t ax, ay, az

    for i in range(n_q):
        px = q_arr[i, 0]; py = q_arr[i, 1]; pz = q_arr[i, 2]
        qx = <long long> floor((px - ox) / r)
        qy = <long long> floor((py - oy) / r)
        qz = <long long> floor((pz - oz) / r)
        found = 0
        for ax in range(3):
            nx = qx + ax - 1
            if nx < 0 or nx >= dx:
                continue
            for ay in range(3):
                ny = qy + ay - 1
                if ny < 0 or ny >= dy:
                    continue
                for az in range(3):
                    nz = qz + az - 1
                    if nz < 0 or nz >= dz:
                        continue
                    cell = (nx * dy + ny) * dz + nz
                    # binary search for the bucket of this cell id
                    lo = 0
                    hi = n_buckets
                    while lo < hi:
                        mid = (lo + hi) // 2
                        if uc_v[mid] < cell:
                            lo = mid + 1
                        else:
                            hi = mid
                    if lo == n_buckets or uc_v[lo] != cell:
                        continue
                    b0 = bs_v[lo]
                    b1 = bs_v[lo + 1] if lo + 1 < n_buckets else n_cand
                    for m in range(b0, b1):
                        j = order_v[m]
                        ddx = c_arr[j, 0] - px
                        ddy = c_arr[j, 1] - py
                        ddz = c_arr[j, 2] - pz
                        d2 = ddx * ddx + ddy * ddy + ddz * ddz
                        if d2 <= r2:
                            bi_v[found] = j
                            bd_v[found] = sqrt(d2)
                            found += 1
        counts_v[i] = found
        if found:
            out_idx_list.append(buf_idx[:found].copy())
            out_dist_list.append(buf_dist[:found].copy())

    if out_idx_list:
        return counts_np, np.concatenate(out_idx_list), np.concatenate(out_dist_list)
    return counts_np, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
