"""Numba kernels for the two hot loops: window accumulation and AdaGrad.

Kept in one module so the JIT cost is paid only when a kernel path is
actually used; everything here is also expressible in pure Python and the
window module keeps a reference implementation for small inputs.
"""

from __future__ import annotations

import numpy as np
from numba import njit, types
from numba.typed import Dict


def new_pair_table():
    """Empty typed dict keyed by i*V+j holding integer numerators."""
    return Dict.empty(key_type=types.int64, value_type=types.int64)


@njit(nogil=True, cache=True)
def accumulate_window(ids, vocab_size, window, lcm, symmetric, table):
    """Add one sentence's window pairs into `table` as lcm/d numerators.

    ids: int64 positions (-1 = out of vocabulary, keeps its position).
    Integer numerators make accumulation order-irrelevant; the final
    division by lcm happens once per pair outside the kernel.
    """
    n = ids.shape[0]
    for p in range(n):
        i = ids[p]
        if i < 0:
            continue
        lo = p - window
        if lo < 0:
            lo = 0
        hi = p + window if symmetric else p - 1
        if hi > n - 1:
            hi = n - 1
        for q in range(lo, hi + 1):
            if q == p:
                continue
            j = ids[q]
            if j < 0 or j == i:
                continue
            d = q - p
            if d < 0:
                d = -d
            key = i * vocab_size + j
            add = lcm // d
            if key in table:
                table[key] += add
            else:
                table[key] = add


@njit(cache=True)
def pair_table_to_arrays(table):
    """Export the typed dict to (key, numerator) arrays in insertion order."""
    n = len(table)
    keys = np.empty(n, dtype=np.int64)
    vals = np.empty(n, dtype=np.int64)
    k = 0
    for key, v in table.items():
        keys[k] = key
        vals[k] = v
        k += 1
    return keys, vals


@njit(nogil=True, cache=True)
def adagrad_epoch(ii, jj, xx, lo, hi, w, c, bw, bc, gw, gc, gbw, gbc,
                  lr, x_max, alpha, clamp):
    """One AdaGrad pass over records [lo, hi) updating shared parameters.

    Returns (loss_sum, error_index); error_index is -1 unless a non-finite
    residual was hit, in which case updates stop at that record.  The loss
    term is evaluated before the update, and each record's four gradients
    are read before any of its writes.  Thread-safe only in the hogwild
    sense: concurrent callers may interleave scalar updates.
    """
    dim = w.shape[1]
    total = 0.0
    for n in range(lo, hi):
        i = ii[n]
        j = jj[n]
        x = xx[n]
        dot = 0.0
        for k in range(dim):
            dot += w[i, k] * c[j, k]
        r = dot + bw[i] + bc[j] - np.log(x)
        if not np.isfinite(r):
            return total, n
        fx = 1.0 if x >= x_max else (x / x_max) ** alpha
        total += fx * r * r
        g = 2.0 * fx * r
        for k in range(dim):
            grad_w = g * c[j, k]
            grad_c = g * w[i, k]
            if clamp > 0.0:
                if grad_w > clamp:
                    grad_w = clamp
                elif grad_w < -clamp:
                    grad_w = -clamp
                if grad_c > clamp:
                    grad_c = clamp
                elif grad_c < -clamp:
                    grad_c = -clamp
            gw[i, k] += grad_w * grad_w
            w[i, k] -= lr * grad_w / np.sqrt(gw[i, k])
            gc[j, k] += grad_c * grad_c
            c[j, k] -= lr * grad_c / np.sqrt(gc[j, k])
        grad_b = g
        if clamp > 0.0:
            if grad_b > clamp:
                grad_b = clamp
            elif grad_b < -clamp:
                grad_b = -clamp
        gbw[i] += grad_b * grad_b
        bw[i] -= lr * grad_b / np.sqrt(gbw[i])
        gbc[j] += grad_b * grad_b
        bc[j] -= lr * grad_b / np.sqrt(gbc[j])
    return total, -1
