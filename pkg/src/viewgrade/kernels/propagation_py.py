"""Pure-Python propagation kernel.

Fallback used when the compiled extension is unavailable. This module and
``_propagation_cy.pyx`` must stay in lockstep: same formulas, same
accumulation order, so the two backends return bit-identical arrays (the
test suite asserts this). Keep every arithmetic change mirrored.

The kernel runs one view of the iterative variance-weighted consensus:

* per-item message lists start at the observed grades with unit variance;
* each round, items send each grader the precision-weighted estimate of
  all their messages except that grader's (leave-one-out), then graders
  send each item their observed grade tagged with a variance estimated as
  the precision-weighted mean of squared residuals over their *other*
  items;
* after the final round, item consensus is the precision-weighted estimate
  of the item's messages, and each grader's full (all-items) variance
  estimate is reported.

Adjacency is CSR-like: ``item_ptr``/``grader_ptr`` bound each node's edge
slice, edge slices are sorted by opposite node index so reduction order is
fixed, and the two slot maps translate an edge's position between the item
ordering and the grader ordering.
"""

from __future__ import annotations

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
    iterations: int,
    variance_floor: float,
):
    """Run the per-view propagation; return (value, variance, grader_variance).

    ``value``/``variance`` are per-item consensus arrays; ``grader_variance``
    is each grader's final full variance estimate (clamped to the floor).
    """
    n_items = len(item_ptr) - 1
    n_graders = len(grader_ptr) - 1
    n_edges = len(item_grade)

    # plain lists: much faster than element-wise numpy indexing in CPython
    iptr = [int(x) for x in item_ptr]
    gptr = [int(x) for x in grader_ptr]
    ig = [float(x) for x in item_grade]
    gg = [float(x) for x in grader_grade]
    i2g = [int(x) for x in item_to_grader_slot]
    g2i = [int(x) for x in grader_to_item_slot]

    floor = float(variance_floor)

    mx = ig.copy()  # message values held by items (item-edge order)
    mv = [1.0] * n_edges  # message variances held by items
    gx = [0.0] * n_edges  # message values held by graders (grader-edge order)
    gv = [1.0] * n_edges  # message variances held by graders

    for _ in range(int(iterations)):
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

    value = np.empty(n_items, dtype=np.float64)
    variance = np.empty(n_items, dtype=np.float64)
    for i in range(n_items):
        sx = 0.0
        sw = 0.0
        for e in range(iptr[i], iptr[i + 1]):
            w = 1.0 / mv[e]
            sx += mx[e] * w
            sw += w
        value[i] = sx / sw
        variance[i] = 1.0 / sw

    grader_variance = np.empty(n_graders, dtype=np.float64)
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

    return value, variance, grader_variance
