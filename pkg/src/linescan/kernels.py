"""Hot numeric loops, compiled with numba when available.

Setting LS_NO_NUMBA=1 (or any non-empty value other than 0) selects the pure
numpy/Python path: the same functions run uncompiled, so both modes share one
implementation and produce the same arithmetic up to libm rounding. All
kernels are sequential and allocation-light; callers own all buffers.

benchmarks/bench_kernels.py times the two modes against each other.
"""

from __future__ import annotations

import os

import numpy as np


def _identity_jit(*args, **kwargs):
    if args and callable(args[0]):
        return args[0]

    def wrap(func):
        return func

    return wrap


if os.environ.get("LS_NO_NUMBA", "0") not in ("", "0"):
    USING_NUMBA = False
    njit = _identity_jit
else:
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:
        USING_NUMBA = False
        njit = _identity_jit


@njit(cache=True)
def fnv1a64_batch(buf: np.ndarray, offsets: np.ndarray, out: np.ndarray) -> None:
    """FNV-1a 64-bit over byte slices buf[offsets[i]:offsets[i+1]] -> out[i]."""
    prime = np.uint64(0x100000001B3)
    for i in range(out.shape[0]):
        h = np.uint64(0xCBF29CE484222325)
        for k in range(offsets[i], offsets[i + 1]):
            h = (h ^ np.uint64(buf[k])) * prime
        out[i] = h


@njit(cache=True)
def sgd_epoch(
    indices: np.ndarray,
    offsets: np.ndarray,
    targets: np.ndarray,
    order: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray,
    lr: float,
    l2: float,
) -> None:
    """One epoch of per-example one-vs-rest logistic SGD, in place.

    Sample s has active indices indices[offsets[s]:offsets[s+1]] (binary
    features) and multi-hot targets[s]. l2 shrinks only the touched weights,
    keeping the update sparse.
    """
    n_classes = weights.shape[0]
    for si in range(order.shape[0]):
        s = order[si]
        lo, hi = offsets[s], offsets[s + 1]
        for c in range(n_classes):
            z = bias[c]
            for k in range(lo, hi):
                z += weights[c, indices[k]]
            p = 1.0 / (1.0 + np.exp(-z))
            g = lr * (p - targets[s, c])
            bias[c] -= g
            shrink = 1.0 - lr * l2
            for k in range(lo, hi):
                weights[c, indices[k]] = weights[c, indices[k]] * shrink - g


@njit(cache=True)
def predict_linear(
    indices: np.ndarray,
    offsets: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray,
    out: np.ndarray,
) -> None:
    """Per-class logistic probabilities for each sample -> out[n, classes]."""
    n_classes = weights.shape[0]
    for s in range(out.shape[0]):
        lo, hi = offsets[s], offsets[s + 1]
        for c in range(n_classes):
            z = bias[c]
            for k in range(lo, hi):
                z += weights[c, indices[k]]
            out[s, c] = 1.0 / (1.0 + np.exp(-z))


@njit(cache=True)
def lstm_forward(
    x: np.ndarray,
    wx: np.ndarray,
    wh: np.ndarray,
    bias: np.ndarray,
    rmask: np.ndarray,
    h_out: np.ndarray,
    c_out: np.ndarray,
    gates: np.ndarray,
) -> None:
    """Gated-memory recurrence over one sequence.

    x: (T, D); wx: (D, 4R); wh: (R, 4R); bias: (4R,). Gate slices in order
    input, forget, candidate, output. rmask is the time-constant mask
    multiplied onto the previous hidden state (all ones when dropout is
    off). Fills h_out (T, R), c_out (T, R) and post-activation gates
    (T, 4R), which backward reuses.
    """
    t_len, rec = h_out.shape
    ax = x @ wx
    h_prev = np.zeros(rec)
    c_prev = np.zeros(rec)
    for t in range(t_len):
        hm = h_prev * rmask
        a = ax[t] + hm @ wh + bias
        for r in range(rec):
            ig = 1.0 / (1.0 + np.exp(-a[r]))
            fg = 1.0 / (1.0 + np.exp(-a[rec + r]))
            gg = np.tanh(a[2 * rec + r])
            og = 1.0 / (1.0 + np.exp(-a[3 * rec + r]))
            c = fg * c_prev[r] + ig * gg
            gates[t, r] = ig
            gates[t, rec + r] = fg
            gates[t, 2 * rec + r] = gg
            gates[t, 3 * rec + r] = og
            c_out[t, r] = c
            h_out[t, r] = og * np.tanh(c)
        h_prev = h_out[t]
        c_prev = c_out[t]


@njit(cache=True)
def lstm_backward(
    x: np.ndarray,
    wx: np.ndarray,
    wh: np.ndarray,
    rmask: np.ndarray,
    h: np.ndarray,
    c: np.ndarray,
    gates: np.ndarray,
    dh_out: np.ndarray,
    dx: np.ndarray,
    dwx: np.ndarray,
    dwh: np.ndarray,
    dbias: np.ndarray,
) -> None:
    """Backward pass matching lstm_forward; accumulates into dwx/dwh/dbias
    and writes dx. dh_out is the loss gradient on each h_t.

    Pre-activation gradients are staged per step, then all weight
    gradients fall out of two matrix products over the whole sequence."""
    t_len, rec = h.shape
    dh_next = np.zeros(rec)
    dc_next = np.zeros(rec)
    da_all = np.empty((t_len, 4 * rec))
    wh_t = np.ascontiguousarray(wh.T)
    for t in range(t_len - 1, -1, -1):
        for r in range(rec):
            ig = gates[t, r]
            fg = gates[t, rec + r]
            gg = gates[t, 2 * rec + r]
            og = gates[t, 3 * rec + r]
            tc = np.tanh(c[t, r])
            dh = dh_out[t, r] + dh_next[r]
            dc = dc_next[r] + dh * og * (1.0 - tc * tc)
            c_prev = c[t - 1, r] if t > 0 else 0.0
            da_all[t, r] = dc * gg * ig * (1.0 - ig)
            da_all[t, rec + r] = dc * c_prev * fg * (1.0 - fg)
            da_all[t, 2 * rec + r] = dc * ig * (1.0 - gg * gg)
            da_all[t, 3 * rec + r] = dh * tc * og * (1.0 - og)
            dc_next[r] = dc * fg
        dh_next = (da_all[t] @ wh_t) * rmask
    dx[:, :] = da_all @ np.ascontiguousarray(wx.T)
    h_masked = np.zeros((t_len, rec))
    for t in range(1, t_len):
        for r in range(rec):
            h_masked[t, r] = h[t - 1, r] * rmask[r]
    dwx += np.ascontiguousarray(x.T) @ da_all
    dwh += np.ascontiguousarray(h_masked.T) @ da_all
    for j in range(4 * rec):
        acc = 0.0
        for t in range(t_len):
            acc += da_all[t, j]
        dbias[j] += acc


@njit(cache=True)
def assign_min_cost(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost one-to-one assignment of rows to columns, rows ≤ cols.

    Shortest-augmenting-path formulation with dual potentials; exact for
    finite float costs. Returns the assigned column per row.
    """
    n_rows, n_cols = cost.shape
    u = np.zeros(n_rows)
    v = np.zeros(n_cols)
    col_of_row = np.full(n_rows, -1, np.int64)
    row_of_col = np.full(n_cols, -1, np.int64)
    shortest = np.empty(n_cols)
    path = np.empty(n_cols, np.int64)
    seen_row = np.empty(n_rows, np.bool_)
    seen_col = np.empty(n_cols, np.bool_)
    for cur in range(n_rows):
        shortest[:] = np.inf
        path[:] = -1
        seen_row[:] = False
        seen_col[:] = False
        min_val = 0.0
        i = cur
        sink = -1
        while sink < 0:
            seen_row[i] = True
            lowest = np.inf
            j_low = -1
            for j in range(n_cols):
                if seen_col[j]:
                    continue
                r = min_val + cost[i, j] - u[i] - v[j]
                if r < shortest[j]:
                    shortest[j] = r
                    path[j] = i
                if shortest[j] < lowest or (shortest[j] == lowest and j_low < 0):
                    lowest = shortest[j]
                    j_low = j
            j = j_low
            min_val = lowest
            seen_col[j] = True
            if row_of_col[j] < 0:
                sink = j
            else:
                i = row_of_col[j]
        u[cur] += min_val
        for r2 in range(n_rows):
            if seen_row[r2] and r2 != cur:
                u[r2] += min_val - shortest[col_of_row[r2]]
        for j2 in range(n_cols):
            if seen_col[j2] and j2 != sink:
                v[j2] -= min_val - shortest[j2]
        j = sink
        while True:
            i = path[j]
            row_of_col[j] = i
            j, col_of_row[i] = col_of_row[i], j
            if i == cur:
                break
    return col_of_row


@njit(cache=True)
def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    grad_scale: float,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    bc1: float,
    bc2: float,
) -> None:
    """One fused Adam update over flat views; no temporaries.

    grad_scale folds the minibatch normalizer into the read, bc1/bc2 are
    the bias-correction denominators for the current step count."""
    for i in range(param.shape[0]):
        g = grad[i] * grad_scale
        m[i] = beta1 * m[i] + (1.0 - beta1) * g
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
        param[i] -= lr * (m[i] / bc1) / (np.sqrt(v[i] / bc2) + eps)
