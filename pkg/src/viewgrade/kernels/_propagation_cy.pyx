# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: cdivision=True
"""Compiled propagation kernel.

Operation-for-operation mirror of ``propagation_py.propagate_view``; both
backends must return bit-identical arrays (asserted by the test suite), so
any arithmetic change here has to be applied there too. See the pure module
for the algorithm description.
"""

import numpy as np


def propagate_view(
    item_ptr,
    item_grader,
    item_grade,
    grader_ptr,
    grader_item,
    grader_grade,
    item_to_grader_slot,
    grader_to_item_slot,
    int iterations,
    double variance_floor,
):
    """Run the per-view propagation; return (value, variance, grader_variance)."""
    cdef Py_ssize_t[::1] iptr = np.ascontiguousarray(item_ptr, dtype=np.intp)
    cdef Py_ssize_t[::1] gptr = np.ascontiguousarray(grader_ptr, dtype=np.intp)
    cdef double[::1] ig = np.ascontiguousarray(item_grade, dtype=np.float64)
    cdef double[::1] gg = np.ascontiguousarray(grader_grade, dtype=np.float64)
    cdef Py_ssize_t[::1] i2g = np.ascontiguousarray(item_to_grader_slot, dtype=np.intp)
    cdef Py_ssize_t[::1] g2i = np.ascontiguousarray(grader_to_item_slot, dtype=np.intp)

    cdef Py_ssize_t n_items = iptr.shape[0] - 1
    cdef Py_ssize_t n_graders = gptr.shape[0] - 1
    cdef Py_ssize_t n_edges = ig.shape[0]

    mx_arr = np.array(item_grade, dtype=np.float64, copy=True)
    mv_arr = np.ones(n_edges, dtype=np.float64)
    gx_arr = np.zeros(n_edges, dtype=np.float64)
    gv_arr = np.ones(n_edges, dtype=np.float64)
    value_arr = np.empty(n_items, dtype=np.float64)
    variance_arr = np.empty(n_items, dtype=np.float64)
    grader_variance_arr = np.empty(n_graders, dtype=np.float64)

    cdef double[::1] mx = mx_arr
    cdef double[::1] mv = mv_arr
    cdef double[::1] gx = gx_arr
    cdef double[::1] gv = gv_arr
    cdef double[::1] value = value_arr
    cdef double[::1] variance = variance_arr
    cdef double[::1] grader_variance = grader_variance_arr

    cdef double floor = variance_floor
    cdef Py_ssize_t k, i, j, e, e2, f, f2, lo, hi
    cdef double sx, sw, w, r, v

    for k in range(iterations):
        # items -> graders: leave-one-out estimates
        for i in range(n_items):
            lo = iptr[i]
            hi = iptr[i + 1]
            for e in range(lo, hi):
                sx = 0.0
                sw = 0.0
                for e2 in range(lo, hi):
                    if e2 == e:
                        continue
                    w = 1.0 / mv[e2]
                    sx += mx[e2] * w
                    sw += w
                f = i2g[e]
                gx[f] = sx / sw
                gv[f] = 1.0 / sw
        # graders -> items: per-destination variance estimates
        for j in range(n_graders):
            lo = gptr[j]
            hi = gptr[j + 1]
            for f in range(lo, hi):
                sx = 0.0
                sw = 0.0
                for f2 in range(lo, hi):
                    if f2 == f:
                        continue
                    r = gx[f2] - gg[f2]
                    w = 1.0 / gv[f2]
                    sx += r * r * w
                    sw += w
                v = sx / sw
                if v < floor:
                    v = floor
                e = g2i[f]
                mx[e] = gg[f]
                mv[e] = v

    for i in range(n_items):
        sx = 0.0
        sw = 0.0
        for e in range(iptr[i], iptr[i + 1]):
            w = 1.0 / mv[e]
            sx += mx[e] * w
            sw += w
        value[i] = sx / sw
        variance[i] = 1.0 / sw

    for j in range(n_graders):
        sx = 0.0
        sw = 0.0
        for f in range(gptr[j], gptr[j + 1]):
            r = gx[f] - gg[f]
            w = 1.0 / gv[f]
            sx += r * r * w
            sw += w
        v = sx / sw
        if v < floor:
            v = floor
        grader_variance[j] = v

    return value_arr, variance_arr, grader_variance_arr
