# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the pure-python kernels.

Semantics and floating-point operation order match ``kernels.pure`` exactly;
the parity tests assert bit-identical output.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def subtract_and_update(double[:, :, ::1] background,
                        const unsigned char[:, :, ::1] frame,
                        double threshold,
                        double learning_rate):
    cdef Py_ssize_t h = background.shape[0]
    cdef Py_ssize_t w = background.shape[1]
    mask = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] mv = mask
    cdef Py_ssize_t i, j, c
    cdef double diff, d, keep = 1.0 - learning_rate
    for i in range(h):
        for j in range(w):
            diff = 0.0
            for c in range(3):
                d = (<double> frame[i, j, c]) - background[i, j, c]
                if d < 0.0:
                    d = -d
                if d > diff:
                    diff = d
            if diff > threshold:
                mv[i, j] = 1
            else:
                for c in range(3):
                    background[i, j, c] = keep * background[i, j, c] \
                        + learning_rate * (<double> frame[i, j, c])
    return mask


def update_persistence(const unsigned char[:, ::1] mask, int[:, ::1] accumulator):
    cdef Py_ssize_t h = mask.shape[0]
    cdef Py_ssize_t w = mask.shape[1]
    cdef Py_ssize_t i, j
    for i in range(h):
        for j in range(w):
            if mask[i, j]:
                accumulator[i, j] = accumulator[i, j] + 1
            else:
                accumulator[i, j] = 0


cdef int _find(int[::1] parent, int x) nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def label_components(const unsigned char[:, ::1] mask):
    """Two-pass union-find labeling, 8-connected, canonical label order."""
    cdef Py_ssize_t h = mask.shape[0]
    cdef Py_ssize_t w = mask.shape[1]
    labels = np.zeros((h, w), dtype=np.int32)
    cdef int[:, ::1] lv = labels
    cdef int next_label = 1
    # worst case: checkerboard of isolated pixels
    parent_arr = np.arange(h * w // 2 + 2, dtype=np.int32)
    cdef int[::1] parent = parent_arr
    cdef Py_ssize_t i, j
    cdef int lbl, n, ra, rb
    cdef Py_ssize_t[4] di
    cdef Py_ssize_t[4] dj
    di[0] = -1; dj[0] = -1
    di[1] = -1; dj[1] = 0
    di[2] = -1; dj[2] = 1
    di[3] = 0; dj[3] = -1
    cdef Py_ssize_t ni, nj, k
    for i in range(h):
        for j in range(w):
            if not mask[i, j]:
                continue
            lbl = 0
            for k in range(4):
                ni = i + di[k]
                nj = j + dj[k]
                if ni < 0 or nj < 0 or nj >= w:
                    continue
                n = lv[ni, nj]
                if n == 0:
                    continue
                if lbl == 0:
                    lbl = n
                elif n != lbl:
                    ra = _find(parent, lbl)
                    rb = _find(parent, n)
                    if ra != rb:
                        if rb < ra:
                            ra, rb = rb, ra
                        parent[rb] = ra
                    lbl = ra
            if lbl == 0:
                lbl = next_label
                next_label += 1
            lv[i, j] = lbl

    # resolve roots, then renumber by first appearance in scan order
    remap_arr = np.zeros(next_label, dtype=np.int32)
    cdef int[::1] remap = remap_arr
    cdef int count = 0
    for i in range(h):
        for j in range(w):
            lbl = lv[i, j]
            if lbl == 0:
                continue
            ra = _find(parent, lbl)
            if remap[ra] == 0:
                count += 1
                remap[ra] = count
            lv[i, j] = remap[ra]
    return labels, count


def horn_schunck_iterate(const double[:, ::1] ix,
                         const double[:, ::1] iy,
                         const double[:, ::1] it,
                         double[:, ::1] u,
                         double[:, ::1] v,
                         double alpha2,
                         int iterations):
    cdef Py_ssize_t h = u.shape[0]
    cdef Py_ssize_t w = u.shape[1]
    ubar_arr = np.empty((h, w), dtype=np.float64)
    vbar_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] ubar = ubar_arr
    cdef double[:, ::1] vbar = vbar_arr
    cdef double sixth = 1.0 / 6.0
    cdef double twelfth = 1.0 / 12.0
    cdef Py_ssize_t i, j, im, ip, jm, jp
    cdef int step
    cdef double t, den
    for step in range(iterations):
        for i in range(h):
            im = i - 1 if i > 0 else 0
            ip = i + 1 if i < h - 1 else h - 1
            for j in range(w):
                jm = j - 1 if j > 0 else 0
                jp = j + 1 if j < w - 1 else w - 1
                ubar[i, j] = (u[im, j] + u[ip, j] + u[i, jm] + u[i, jp]) * sixth \
                    + (u[im, jm] + u[im, jp] + u[ip, jm] + u[ip, jp]) * twelfth
                vbar[i, j] = (v[im, j] + v[ip, j] + v[i, jm] + v[i, jp]) * sixth \
                    + (v[im, jm] + v[im, jp] + v[ip, jm] + v[ip, jp]) * twelfth
        for i in range(h):
            for j in range(w):
                den = alpha2 + ix[i, j] * ix[i, j] + iy[i, j] * iy[i, j]
                t = (ix[i, j] * ubar[i, j] + iy[i, j] * vbar[i, j] + it[i, j]) / den
                u[i, j] = ubar[i, j] - ix[i, j] * t
                v[i, j] = vbar[i, j] - iy[i, j] * t
